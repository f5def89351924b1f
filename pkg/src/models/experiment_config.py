"""
Experiment, synthesis and perturbation configuration models
"""
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from ..utils.errors import ConfigError
from .decode_config import DecodeConfig, FusionConfig

LM_SCOPES = ('per-utterance-oracle', 'per-conversation', 'global')
PERTURBATION_KINDS = ('none', 'distractor', 'adversarial')
DEFAULT_NAME_POOL = str(Path(__file__).resolve().parents[2] / 'assets' / 'name_pool.txt')


def _known_keys(cls, data, what):
    unknown = set(data) - {f.name for f in fields(cls)}
    if unknown:
        raise ConfigError(f"unknown {what} key(s): {', '.join(sorted(unknown))}")


@dataclass
class PerturbationSpec:
    """Names added to every conversation's biasing list"""
    kind: str = 'none'
    count: int = 0
    distance: Optional[int] = None  # adversarial only
    seed: int = 0

    def validate(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ConfigError(f"unknown perturbation kind {self.kind!r}")
        if self.count < 0:
            raise ConfigError(f"perturbation count must be >= 0, got {self.count}")
        if self.kind == 'adversarial' and (self.distance is None or self.distance < 1):
            raise ConfigError("adversarial perturbation needs a positive distance")

    def to_dict(self):
        return {'kind': self.kind, 'count': self.count, 'distance': self.distance, 'seed': self.seed}

    @classmethod
    def from_dict(cls, data):
        _known_keys(cls, data, 'perturbation')
        return cls(**data)


@dataclass
class ModelPaths:
    """Files a decode run reads"""
    vocab: str = ''
    e2e: str = ''
    id_lm: str = ''
    corpus: str = ''
    names: Optional[str] = None
    name_pool: Optional[str] = None

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data):
        _known_keys(cls, data, 'models')
        return cls(**data)


@dataclass
class ExperimentConfig:
    """Everything that determines a decode run besides its input files"""
    mode: str = 'cdr'
    alpha: float = 1.0
    beta: float = 1.0
    beam_width: int = 8
    max_len: int = 40
    length_norm: str = 'none'
    constraints: bool = True
    lm_scope: str = 'per-conversation'
    ne_order: int = 4
    mu: float = 0.9
    perturbation: Optional[PerturbationSpec] = None
    seed: int = 0
    workers: int = 1
    nbest: int = 1
    models: ModelPaths = field(default_factory=ModelPaths)

    def validate(self):
        self.fusion()
        self.decoding()
        if self.lm_scope not in LM_SCOPES:
            raise ConfigError(f"unknown lm_scope {self.lm_scope!r}, expected one of {LM_SCOPES}")
        if not 0.0 <= self.mu <= 1.0:
            raise ConfigError(f"mu must be in [0, 1], got {self.mu}")
        if self.ne_order < 1:
            raise ConfigError(f"ne_order must be >= 1, got {self.ne_order}")
        if self.workers < 1 or self.nbest < 1:
            raise ConfigError("workers and nbest must be positive")
        if self.perturbation is not None:
            self.perturbation.validate()

    def fusion(self) -> FusionConfig:
        return FusionConfig(mode=self.mode, alpha=self.alpha, beta=self.beta)

    def decoding(self) -> DecodeConfig:
        return DecodeConfig(beam_width=self.beam_width, max_len=self.max_len,
                            length_norm=self.length_norm, constraints=self.constraints)

    def to_dict(self):
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data['perturbation'] = self.perturbation.to_dict() if self.perturbation else None
        data['models'] = self.models.to_dict()
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        _known_keys(cls, data, 'experiment')
        perturbation = data.pop('perturbation', None)
        models = data.pop('models', None)
        return cls(
            perturbation=PerturbationSpec.from_dict(perturbation) if perturbation else None,
            models=ModelPaths.from_dict(models) if models else ModelPaths(),
            **data
        )


@dataclass
class SynthSpec:
    """Synthetic task: conversations, name density and channel noise"""
    n_conversations: int = 100
    utterances_per_conversation: int = 5
    fraction_with_names: float = 0.05
    grammar: str = 'clinic'
    rho: float = 0.15
    tag_rho: float = 0.05  # spans whose tags the channel drops
    name_pool: str = DEFAULT_NAME_POOL
    seed: int = 0
    train_utterances: int = 4000  # E2E / ID LM training transcripts
    train_fraction_with_names: float = 0.25
    n_names: int = 150  # size of the training and of the test name inventory
    variant_rate: float = 0.3  # test names whose first name is trained with a confusable surname
    confusion_size: int = 3
    lm_order: int = 3

    def validate(self):
        if self.n_conversations < 1 or self.utterances_per_conversation < 1:
            raise ConfigError("n_conversations and utterances_per_conversation must be positive")
        for key in ('fraction_with_names', 'train_fraction_with_names', 'variant_rate'):
            value = getattr(self, key)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{key} must be in [0, 1], got {value}")
        for key in ('rho', 'tag_rho'):
            value = getattr(self, key)
            if not 0.0 <= value <= 0.5:
                raise ConfigError(f"{key} must be in [0, 0.5], got {value}")
        if min(self.train_utterances, self.n_names, self.confusion_size, self.lm_order) < 1:
            raise ConfigError("train_utterances, n_names, confusion_size and lm_order must be positive")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data):
        _known_keys(cls, data, 'synth')
        return cls(**data)
