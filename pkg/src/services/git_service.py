"""
Git service for recording the code revision of a run
"""
import os
from pathlib import Path
from typing import Optional

# a missing git executable must not break import; describe() then returns None
os.environ.setdefault('GIT_PYTHON_REFRESH', 'quiet')
import git  # noqa: E402

from ..utils.logger import setup_logger


class GitService:
    """Read-only view of the repository holding a path"""

    def __init__(self, repo_path: str):
        """
        Initialize Git service

        Args:
            repo_path: Any path inside the working tree
        """
        self.logger = setup_logger('git')
        self.repo_path = Path(repo_path)

        try:
            self.repo = git.Repo(repo_path, search_parent_directories=True)
        except (git.InvalidGitRepositoryError, git.NoSuchPathError):
            raise ValueError(f"Not inside a Git repository: {repo_path}")

    def get_current_commit(self) -> str:
        """Get the current HEAD commit hash"""
        return self.repo.head.commit.hexsha

    def is_dirty(self) -> bool:
        """Check for uncommitted changes, untracked files included"""
        return self.repo.is_dirty(untracked_files=True)

    @classmethod
    def describe(cls, path) -> Optional[dict]:
        """{commit, dirty} of the checkout holding path, or None outside Git"""
        try:
            service = cls(path)
            return {'commit': service.get_current_commit(), 'dirty': service.is_dirty()}
        except (ValueError, git.GitError) as e:
            setup_logger('git').debug(f"No Git revision for {path}: {e}")
            return None
