"""
Name list model
"""
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

from .vocab import RESERVED_TOKENS
from ..utils.errors import DataError

PROVENANCES = ('true', 'distractor', 'adversarial', 'mixed')


def normalize_name(name: Sequence[str]) -> Tuple[str, ...]:
    return tuple(part.lower() for part in name)


@dataclass(frozen=True)
class NameList:
    """Deduplicated list of names (token tuples) with where they came from"""
    names: Tuple[Tuple[str, ...], ...] = ()
    provenance: str = 'true'
    distance: Optional[int] = None  # adversarial lists only
    flagged: bool = False  # fewer names than requested were available
    shortfall: int = 0  # requested names missing at the target distance

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise DataError(f"unknown name provenance {self.provenance!r}")
        unique = []
        seen = set()
        for name in self.names:
            name = tuple(name)
            if not name:
                raise DataError("empty name in name list")
            bad = set(name).intersection(RESERVED_TOKENS)
            if bad:
                raise DataError(f"name {' '.join(name)} contains reserved token(s) {sorted(bad)}")
            key = normalize_name(name)
            if key not in seen:
                seen.add(key)
                unique.append(name)
        object.__setattr__(self, 'names', tuple(unique))

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name) -> bool:
        return normalize_name(name) in {normalize_name(n) for n in self.names}

    def union(self, other: 'NameList') -> 'NameList':
        provenance = self.provenance if self.provenance == other.provenance else 'mixed'
        return NameList(self.names + other.names, provenance=provenance,
                        flagged=self.flagged or other.flagged,
                        shortfall=self.shortfall + other.shortfall)

    @classmethod
    def merge(cls, lists: Iterable['NameList']) -> 'NameList':
        lists = list(lists)
        provenances = {l.provenance for l in lists}
        return cls(tuple(n for l in lists for n in l.names),
                   provenance=provenances.pop() if len(provenances) == 1 else 'mixed',
                   flagged=any(l.flagged for l in lists),
                   shortfall=sum(l.shortfall for l in lists))

    def to_dict(self):
        return {
            'names': [list(n) for n in self.names],
            'provenance': self.provenance,
            'distance': self.distance,
            'flagged': self.flagged,
            'shortfall': self.shortfall
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            names=tuple(tuple(n) for n in data.get('names', [])),
            provenance=data.get('provenance', 'true'),
            distance=data.get('distance'),
            flagged=data.get('flagged', False),
            shortfall=data.get('shortfall', 0)
        )
