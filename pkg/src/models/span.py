"""
Named-entity span model
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """Position of a <ne> token (begin) and its matching </ne> token (end)"""
    begin: int
    end: int

    def __post_init__(self):
        if not self.begin < self.end:
            raise ValueError(f"span begin {self.begin} must precede end {self.end}")

    def interior(self) -> range:
        """Indices strictly between the two tags"""
        return range(self.begin + 1, self.end)

    def contains(self, index: int) -> bool:
        return self.begin < index < self.end

    def to_dict(self):
        return {'begin': self.begin, 'end': self.end}

    @classmethod
    def from_dict(cls, data):
        return cls(**data)
