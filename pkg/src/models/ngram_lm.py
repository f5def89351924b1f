"""
Language model models: the autoregressive LM contract, backoff n-grams and
linear interpolation
"""
import functools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, Sequence, Tuple

import numpy as np

from ..utils.errors import ConfigError, VocabError

DEFAULT_FLOOR_LOGPROB = math.log(1e-9)
ROW_CACHE_SIZE = 4096  # rows kept per model and cache


@dataclass(frozen=True)
class LMState:
    """Most recent tokens consumed since the state was created"""
    context: Tuple[int, ...] = ()


def instance_cache(owner, name: str, function: Callable, maxsize: int = ROW_CACHE_SIZE) -> Callable:
    """LRU-cached wrapper of function stored on owner under name, created on first use"""
    cached = owner.__dict__.get(name)
    if cached is None:
        cached = owner.__dict__.setdefault(name, functools.lru_cache(maxsize=maxsize)(function))
    return cached


class LanguageModel(ABC):
    """
    Autoregressive scorer over a closed vocabulary

    Subclasses provide prob_row(context); state progression and log rows
    are shared. States are values: advance never mutates its input.
    """
    order: int
    vocab_size: int
    floor_logprob: float

    @abstractmethod
    def prob_row(self, context: Sequence[int]) -> np.ndarray:
        """Probability of every token after context (read-only array)"""

    @property
    def history_length(self) -> int:
        return self.order - 1

    def initial_state(self) -> LMState:
        return LMState(())

    def advance(self, state: LMState, token: int) -> LMState:
        self._check_token(token)
        keep = self.history_length
        if keep <= 0:
            return LMState(())
        return LMState((state.context + (token,))[-keep:])

    def row(self, state: LMState) -> np.ndarray:
        """Log-probability of every token; unreachable events get the floor"""
        return instance_cache(self, '_log_rows', self._log_row)(state.context)

    def _log_row(self, context: Tuple[int, ...]) -> np.ndarray:
        probs = self.prob_row(context)
        with np.errstate(divide='ignore'):
            logs = np.log(probs)
        logs[probs <= 0.0] = self.floor_logprob
        logs.setflags(write=False)
        return logs

    def logprob(self, state: LMState, token: int) -> float:
        self._check_token(token)
        return float(self.row(state)[token])

    def _check_token(self, token: int):
        if not 0 <= token < self.vocab_size:
            raise VocabError(f"token id {token} out of range [0, {self.vocab_size})")


@dataclass(eq=False)
class NGramLM(LanguageModel):
    """
    Backoff n-gram model in ARPA form

    p(w | c) = entries[c][w] if stored, else backoff[c] * p(w | c[1:]);
    contexts without a stored backoff weight use 1.
    """
    order: int
    vocab_size: int
    entries: Dict[Tuple[int, ...], Dict[int, float]]
    backoff: Dict[Tuple[int, ...], float] = field(default_factory=dict)
    floor_logprob: float = DEFAULT_FLOOR_LOGPROB

    def __post_init__(self):
        if self.order < 1:
            raise ConfigError(f"n-gram order must be >= 1, got {self.order}")

    def _truncate(self, context: Sequence[int]) -> Tuple[int, ...]:
        keep = self.order - 1
        if keep <= 0:
            return ()
        return tuple(context[-keep:])

    def prob_row(self, context: Sequence[int]) -> np.ndarray:
        return instance_cache(self, '_prob_rows', self._prob_row)(self._truncate(context))

    def _prob_row(self, context: Tuple[int, ...]) -> np.ndarray:
        if context:
            row = self.prob_row(context[1:]) * self.backoff.get(context, 1.0)
        else:
            row = np.zeros(self.vocab_size, dtype=np.float64)

        entry = self.entries.get(context)
        if entry:
            ids = np.fromiter(entry.keys(), dtype=np.int64, count=len(entry))
            values = np.fromiter(entry.values(), dtype=np.float64, count=len(entry))
            row[ids] = values

        row.setflags(write=False)
        return row

    def prob(self, context: Sequence[int], token: int) -> float:
        return float(self.prob_row(context)[token])

    def num_ngrams(self) -> Dict[int, int]:
        """Stored n-gram count per order"""
        counts = {n: 0 for n in range(1, self.order + 1)}
        for context, entry in self.entries.items():
            counts[len(context) + 1] += len(entry)
        return counts


@dataclass(eq=False)
class InterpolatedLM(LanguageModel):
    """Linear mixture mu * p_a + (1 - mu) * p_b sharing one history"""
    lm_a: LanguageModel
    lm_b: LanguageModel
    mu: float

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ConfigError(f"interpolation weight must be in [0, 1], got {self.mu}")
        if self.lm_a.vocab_size != self.lm_b.vocab_size:
            raise ConfigError(
                f"vocabulary size mismatch: {self.lm_a.vocab_size} vs {self.lm_b.vocab_size}")
        self.order = max(self.lm_a.order, self.lm_b.order)
        self.vocab_size = self.lm_a.vocab_size
        self.floor_logprob = self.lm_a.floor_logprob

    def prob_row(self, context: Sequence[int]) -> np.ndarray:
        if self.mu == 1.0:
            return self.lm_a.prob_row(context)
        if self.mu == 0.0:
            return self.lm_b.prob_row(context)
        row = self.mu * self.lm_a.prob_row(context) + (1.0 - self.mu) * self.lm_b.prob_row(context)
        row.setflags(write=False)
        return row
