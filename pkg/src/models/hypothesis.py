"""
Beam search hypothesis models
"""
from dataclasses import dataclass, field, replace
from typing import Any, List, Optional, Tuple


@dataclass(frozen=True)
class SpanTracker:
    """Open-tag bookkeeping for a partial transcript"""
    open: bool = False
    t_b: Optional[int] = None  # index of the most recent <ne> while open
    entity_count: int = 0  # closed spans so far
    position: int = 0  # tokens consumed
    ne_open: int = 0  # tag ids of the vocabulary, Vocab.build layout by default
    ne_close: int = 1

    @classmethod
    def for_vocab(cls, vocab) -> 'SpanTracker':
        return cls(ne_open=vocab.ne_open, ne_close=vocab.ne_close)

    def consume(self, token: int) -> 'SpanTracker':
        if token == self.ne_open:
            return replace(self, open=True, t_b=self.position, position=self.position + 1)
        if token == self.ne_close and self.open:
            return replace(self, open=False, t_b=None, entity_count=self.entity_count + 1,
                           position=self.position + 1)
        return replace(self, position=self.position + 1)


@dataclass(frozen=True)
class Hypothesis:
    """Partial or finished transcript with its accumulated fused score"""
    tokens: Tuple[int, ...]
    score: float
    state: Any = field(default=None, compare=False, repr=False)
    finished: bool = False

    @property
    def tracker(self) -> SpanTracker:
        return self.state.tracker

    def rank_score(self, length_norm: str = 'none') -> float:
        if length_norm == 'divide-by-length':
            # <eos> counts as a scored step once finished
            return self.score / (len(self.tokens) + (1 if self.finished else 0) or 1)
        return self.score

    def sort_key(self, length_norm: str = 'none'):
        """Best first: higher score, then lexicographically smaller token ids"""
        return (-self.rank_score(length_norm), self.tokens)


@dataclass
class DecodeResult:
    """Best hypothesis plus the ranked list of finished ones"""
    best: Hypothesis
    nbest: List[Hypothesis] = field(default_factory=list)

    @property
    def finished(self) -> bool:
        return self.best.finished
