"""
Configuration service for experiment and synthesis settings and run manifests
"""
import json
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml

from .. import __version__
from ..models.experiment_config import ExperimentConfig, SynthSpec
from ..utils.errors import ConfigError
from ..utils.files import atomic_write_text, sha256_file
from ..utils.logger import setup_logger
from .git_service import GitService

SEED_ENV = 'CDR_SEED'


class ConfigService:
    """Loads configuration files, applies overrides and writes manifests"""

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize configuration service

        Args:
            config_path: YAML or JSON file; JSON parses as YAML
        """
        self.logger = setup_logger('config')
        self.config_path = Path(config_path) if config_path else None
        self.data = self._load(self.config_path) if self.config_path else {}

    def _load(self, path: Path) -> Dict[str, Any]:
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid config file {path}: {e}") from None
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        self.logger.info(f"Loaded configuration from {path}")
        return data

    def section(self, name: str) -> Dict[str, Any]:
        """A named section, or the whole file when it has no such section"""
        value = self.data.get(name, self.data)
        if not isinstance(value, dict):
            raise ConfigError(f"config section {name!r} must be a mapping")
        return dict(value)

    @staticmethod
    def resolve_seed(*candidates: Optional[int]) -> int:
        """First explicit seed, else $CDR_SEED, else 0"""
        for seed in candidates:
            if seed is not None:
                return int(seed)
        env = os.environ.get(SEED_ENV)
        if env is None or env == '':
            return 0
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None

    @staticmethod
    def _merge(base: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
        merged = dict(base)
        for key, value in overrides.items():
            if value is None:
                continue
            if isinstance(value, Mapping):
                current = merged.get(key)
                merged[key] = ConfigService._merge(current if isinstance(current, Mapping) else {}, value)
            else:
                merged[key] = value
        return merged

    def experiment(self, overrides: Mapping[str, Any] = None) -> ExperimentConfig:
        """ExperimentConfig from the 'experiment' section with flag overrides applied"""
        data = self._merge(self.section('experiment'), overrides or {})
        seed = data.pop('seed', None)
        try:
            config = ExperimentConfig.from_dict(data)
        except TypeError as e:
            raise ConfigError(f"invalid experiment config: {e}") from None
        config.seed = self.resolve_seed(seed)
        if config.perturbation is not None and 'seed' not in (data.get('perturbation') or {}):
            config.perturbation.seed = config.seed
        config.validate()
        return config

    def synth(self, overrides: Mapping[str, Any] = None) -> SynthSpec:
        data = self._merge(self.section('synth'), overrides or {})
        seed = data.pop('seed', None)
        try:
            spec = SynthSpec.from_dict(data)
        except TypeError as e:
            raise ConfigError(f"invalid synth config: {e}") from None
        spec.seed = self.resolve_seed(seed)
        spec.validate()
        return spec

    def write_manifest(self, out_path, config: Mapping[str, Any], inputs: Mapping[str, Optional[str]],
                       seed: int, extra: Mapping[str, Any] = None) -> Path:
        """
        Write <out_path>.manifest.json

        Args:
            out_path: Primary output file of the run
            config: Effective configuration
            inputs: Role -> file path of every file read
            seed: Effective seed
            extra: Additional entries

        Returns:
            Manifest path
        """
        hashes = {}
        for role, path in sorted(inputs.items()):
            if path is not None and Path(path).is_file():
                hashes[role] = {'path': str(path), 'sha256': sha256_file(path)}
        manifest = {
            'version': __version__,
            'config': dict(config),
            'seed': seed,
            'inputs': hashes,
            'revision': GitService.describe(Path(__file__).resolve().parent)
        }
        if extra:
            manifest.update(extra)
        path = Path(f'{out_path}.manifest.json')
        atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + '\n')
        self.logger.info(f"Wrote run manifest to {path}")
        return path
