"""
Alignment and evaluation report models
"""
from dataclasses import dataclass, field, fields
from typing import List, Optional, Tuple

OP_MATCH = 'match'
OP_SUBSTITUTE = 'substitute'
OP_DELETE = 'delete'
OP_INSERT = 'insert'


@dataclass(frozen=True)
class AlignOp:
    kind: str
    ref_index: Optional[int] = None
    hyp_index: Optional[int] = None


@dataclass(frozen=True)
class Alignment:
    """Edit operations in reference order"""
    ops: Tuple[AlignOp, ...] = ()

    @property
    def cost(self) -> int:
        return sum(1 for op in self.ops if op.kind != OP_MATCH)

    def count(self, kind: str) -> int:
        return sum(1 for op in self.ops if op.kind == kind)


def _percent(numerator: int, denominator: int) -> Optional[float]:
    if denominator == 0:
        return None
    return 100.0 * numerator / denominator


@dataclass
class EvalCounts:
    """Summable error and span counts; corpus rates come from the sums"""
    ref_words: int = 0
    errors: int = 0
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    in_tag_words: int = 0
    in_tag_errors: int = 0
    ref_spans: int = 0
    hyp_spans: int = 0
    tag_tp: int = 0
    utterances: int = 0
    undefined_wer: int = 0  # empty reference, non-empty hypothesis

    def __add__(self, other: 'EvalCounts') -> 'EvalCounts':
        return EvalCounts(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                             for f in fields(self)})

    @property
    def tag_fp(self) -> int:
        return self.hyp_spans - self.tag_tp

    @property
    def tag_fn(self) -> int:
        return self.ref_spans - self.tag_tp

    def to_dict(self):
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data['tag_fp'] = self.tag_fp
        data['tag_fn'] = self.tag_fn
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(**{f.name: data.get(f.name, 0) for f in fields(cls)})


@dataclass(frozen=True)
class TagPRF:
    tp: int
    predicted: int
    reference: int

    @property
    def precision(self) -> float:
        # nothing predicted counts as perfectly precise; see precision_flagged
        return 100.0 if self.predicted == 0 else 100.0 * self.tp / self.predicted

    @property
    def precision_flagged(self) -> bool:
        return self.predicted == 0

    @property
    def recall(self) -> Optional[float]:
        return _percent(self.tp, self.reference)


@dataclass
class EvalReport:
    """Metrics of one system over a corpus"""
    system: str
    counts: EvalCounts = field(default_factory=EvalCounts)
    exact_spans: bool = False

    @property
    def wer(self) -> Optional[float]:
        return _percent(self.counts.errors, self.counts.ref_words)

    @property
    def wert(self) -> Optional[float]:
        return _percent(self.counts.in_tag_errors, self.counts.in_tag_words)

    @property
    def tags(self) -> TagPRF:
        return TagPRF(self.counts.tag_tp, self.counts.hyp_spans, self.counts.ref_spans)

    def row(self) -> List[str]:
        """TSV cells: system, WER, WERT, tag_P, tag_R"""
        tags = self.tags
        precision = None if self.counts.ref_spans == 0 and tags.predicted == 0 else tags.precision
        return [self.system] + [_fmt(v) for v in (self.wer, self.wert, precision, tags.recall)]

    def to_dict(self):
        tags = self.tags
        return {
            'system': self.system,
            'wer': self.wer,
            'wert': self.wert,
            'tag_precision': tags.precision,
            'tag_precision_flagged': tags.precision_flagged,
            'tag_recall': tags.recall,
            'exact_spans': self.exact_spans,
            'counts': self.counts.to_dict()
        }


def _fmt(value: Optional[float]) -> str:
    return 'n.a.' if value is None else f'{value:.2f}'
