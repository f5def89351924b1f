#!/usr/bin/env python3
"""
Contextual density ratio decoding toolkit
Main entry point
"""
import sys
from src.ui.cli import run_cli


def main():
    """Main function"""
    try:
        sys.exit(run_cli())
    except KeyboardInterrupt:
        print("\nInterrupted by user")
        sys.exit(130)


if __name__ == "__main__":
    main()
