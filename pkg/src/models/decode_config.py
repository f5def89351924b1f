"""
Fusion and search configuration models
"""
from dataclasses import dataclass

from ..utils.errors import ConfigError

FUSION_MODES = ('plain', 'sf', 'dr', 'csf', 'cdr')
LENGTH_NORMS = ('none', 'divide-by-length')


@dataclass(frozen=True)
class FusionConfig:
    """Which scorer terms are active and how they are weighted"""
    mode: str = 'plain'
    alpha: float = 1.0  # ID-LM weight; used by dr and cdr only
    beta: float = 1.0  # biasing-LM weight; unused by plain

    def __post_init__(self):
        if self.mode not in FUSION_MODES:
            raise ConfigError(f"unknown fusion mode {self.mode!r}, expected one of {FUSION_MODES}")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError(f"alpha and beta must be >= 0, got {self.alpha}, {self.beta}")

    @property
    def uses_id(self) -> bool:
        return self.mode in ('dr', 'cdr')

    @property
    def uses_bias(self) -> bool:
        return self.mode != 'plain'

    @property
    def contextual(self) -> bool:
        return self.mode in ('csf', 'cdr')

    @property
    def nonpositive(self) -> bool:
        """Every token score is a weighted sum of log-probabilities with non-negative weights"""
        return self.mode in ('plain', 'sf', 'csf')

    def to_dict(self):
        return {'mode': self.mode, 'alpha': self.alpha, 'beta': self.beta}

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class DecodeConfig:
    """Beam search settings"""
    beam_width: int = 8
    max_len: int = 40
    length_norm: str = 'none'
    constraints: bool = True  # tag grammar masking

    def __post_init__(self):
        if self.beam_width < 1 or self.max_len < 1:
            raise ConfigError(f"beam_width and max_len must be positive, got {self.beam_width}, {self.max_len}")
        if self.length_norm not in LENGTH_NORMS:
            raise ConfigError(f"unknown length_norm {self.length_norm!r}, expected one of {LENGTH_NORMS}")

    def to_dict(self):
        return {
            'beam_width': self.beam_width,
            'max_len': self.max_len,
            'length_norm': self.length_norm,
            'constraints': self.constraints
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)
