"""
Token inventory model
"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

from ..utils.errors import VocabError

NE_OPEN = "<ne>"
NE_CLOSE = "</ne>"
EOS = "<eos>"
UNK = "<unk>"
RESERVED_TOKENS = (NE_OPEN, NE_CLOSE, EOS, UNK)


@dataclass(frozen=True)
class Vocab:
    """Closed token inventory; a token's id is its position in the list"""
    tokens: Tuple[str, ...]
    _index: Dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, 'tokens', tokens)
        if not tokens:
            raise VocabError("vocabulary is empty")

        index = {}
        for i, token in enumerate(tokens):
            if token in index:
                raise VocabError(f"duplicate token {token!r} at lines {index[token] + 1} and {i + 1}")
            index[token] = i
        missing = [t for t in RESERVED_TOKENS if t not in index]
        if missing:
            raise VocabError(f"missing reserved token(s): {', '.join(missing)}")
        object.__setattr__(self, '_index', index)

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._index

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise VocabError(f"unknown token {token!r}") from None

    def token(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise VocabError(f"token id {token_id} out of range [0, {len(self.tokens)})")
        return self.tokens[token_id]

    @property
    def ne_open(self) -> int:
        return self._index[NE_OPEN]

    @property
    def ne_close(self) -> int:
        return self._index[NE_CLOSE]

    @property
    def eos(self) -> int:
        return self._index[EOS]

    @property
    def unk(self) -> int:
        return self._index[UNK]

    @property
    def reserved_ids(self) -> Tuple[int, ...]:
        return tuple(self._index[t] for t in RESERVED_TOKENS)

    def is_tag(self, token_id: int) -> bool:
        return token_id in (self.ne_open, self.ne_close)

    def encode(self, tokens: Iterable[str], allow_unk: bool = False) -> Tuple[int, ...]:
        """Map token strings to ids; unknown tokens become <unk> only if allowed"""
        ids = []
        for token in tokens:
            token_id = self._index.get(token)
            if token_id is None:
                if not allow_unk:
                    raise VocabError(f"unknown token {token!r}")
                token_id = self.unk
            ids.append(token_id)
        return tuple(ids)

    def decode(self, ids: Sequence[int]) -> List[str]:
        return [self.token(i) for i in ids]

    def to_dict(self):
        return {'tokens': list(self.tokens)}

    @classmethod
    def from_dict(cls, data):
        return cls(tokens=tuple(data['tokens']))

    @classmethod
    def build(cls, words: Iterable[str]) -> 'Vocab':
        """Reserved tokens first, then the distinct words in sorted order"""
        distinct = sorted(set(words) - set(RESERVED_TOKENS))
        return cls(tokens=RESERVED_TOKENS + tuple(distinct))
