"""
Transcript and corpus models
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..utils.errors import DataError, TagError
from ..utils.tags import extract_spans
from .span import Span
from .vocab import Vocab


def token_list(value, what: str) -> List[str]:
    """value as a list of token strings; a bare string would otherwise split into characters"""
    if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
        raise DataError(f"{what} must be a list of token strings, got {type(value).__name__}")
    return value


@dataclass(frozen=True)
class Utterance:
    """One reference transcript with inline tags and its observation key"""
    conversation_id: str
    utterance_id: str
    reference: Tuple[int, ...]
    observation: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'reference', tuple(self.reference))

    def validate(self, vocab: Vocab):
        """Check tag balance and the absence of <eos>"""
        if vocab.eos in self.reference:
            raise DataError(f"utt {self.utterance_id}: <eos> inside reference")
        try:
            extract_spans(self.reference, vocab.ne_open, vocab.ne_close)
        except TagError as e:
            raise TagError(f"utt {self.utterance_id}: {e}") from None

    def spans(self, vocab: Vocab) -> List[Span]:
        return extract_spans(self.reference, vocab.ne_open, vocab.ne_close)

    def to_dict(self, vocab: Vocab):
        return {
            'conv': self.conversation_id,
            'utt': self.utterance_id,
            'ref': vocab.decode(self.reference),
            'obs': self.observation
        }

    @classmethod
    def from_dict(cls, data, vocab: Vocab, allow_unk: bool = False):
        try:
            utterance = cls(
                conversation_id=str(data['conv']),
                utterance_id=str(data['utt']),
                reference=vocab.encode(token_list(data['ref'], 'ref'), allow_unk=allow_unk),
                observation=data.get('obs')
            )
        except KeyError as e:
            raise DataError(f"record missing field {e}") from None
        utterance.validate(vocab)
        return utterance


@dataclass(frozen=True)
class Conversation:
    """Utterances of one conversation plus its a-priori known names"""
    id: str
    utterances: Tuple[Utterance, ...] = ()
    names: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'utterances', tuple(self.utterances))
        object.__setattr__(self, 'names', tuple(tuple(n) for n in self.names))
        seen = set()
        for utterance in self.utterances:
            if utterance.utterance_id in seen:
                raise DataError(f"conv {self.id}: duplicate utterance id {utterance.utterance_id}")
            seen.add(utterance.utterance_id)

    def validate(self, vocab: Vocab):
        reserved = set(vocab.reserved_ids)
        for name in self.names:
            if not name:
                raise DataError(f"conv {self.id}: empty name")
            if reserved.intersection(name):
                raise DataError(f"conv {self.id}: name {vocab.decode(name)} contains reserved tokens")
        for utterance in self.utterances:
            utterance.validate(vocab)


@dataclass(frozen=True)
class Corpus:
    """All conversations of a data set"""
    conversations: Tuple[Conversation, ...] = ()
    _by_id: Dict[str, Conversation] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'conversations', tuple(self.conversations))
        by_id = {}
        for conversation in self.conversations:
            if conversation.id in by_id:
                raise DataError(f"duplicate conversation id {conversation.id}")
            by_id[conversation.id] = conversation
        object.__setattr__(self, '_by_id', by_id)

    def conversation(self, conversation_id: str) -> Conversation:
        try:
            return self._by_id[conversation_id]
        except KeyError:
            raise DataError(f"unknown conversation {conversation_id}") from None

    def utterances(self) -> List[Utterance]:
        """All utterances in corpus order"""
        return [u for c in self.conversations for u in c.utterances]

    def __len__(self):
        return sum(len(c.utterances) for c in self.conversations)
