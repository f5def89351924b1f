"""
Corpus service for vocabulary, corpus and name file I/O
"""
import json
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from ..models.corpus import Conversation, Corpus, Utterance, token_list
from ..models.vocab import Vocab
from ..utils.errors import DataError, VocabError
from ..utils.files import atomic_write_text
from ..utils.logger import setup_logger


def load_vocab(path) -> Vocab:
    """
    Load a vocabulary file, one token per line

    Args:
        path: UTF-8 text file; the zero-based line number is the token id

    Returns:
        Vocab
    """
    path = Path(path)
    if not path.exists():
        raise VocabError(f"vocabulary file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        tokens = [line.rstrip('\n') for line in f]
    # tolerate a trailing empty line after the final LF
    if tokens and tokens[-1] == '':
        tokens.pop()
    if not tokens:
        raise VocabError(f"vocabulary file is empty: {path}")
    return Vocab(tokens=tuple(tokens))


def save_vocab(vocab: Vocab, path):
    atomic_write_text(path, ''.join(f'{t}\n' for t in vocab.tokens))


def load_name_pool(path) -> List[Tuple[str, ...]]:
    """Name pool file: one name per line, components space-separated"""
    path = Path(path)
    if not path.exists():
        raise DataError(f"name pool not found: {path}")
    names = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            parts = tuple(line.split())
            if parts:
                names.append(parts)
    return names


def save_name_pool(names: Sequence[Sequence[str]], path):
    atomic_write_text(path, ''.join(' '.join(n) + '\n' for n in names))


class CorpusService:
    """Reads and writes JSON-lines corpora against a fixed vocabulary"""

    def __init__(self, vocab: Vocab, allow_unk: bool = False):
        """
        Initialize corpus service

        Args:
            vocab: Vocabulary used to encode tokens
            allow_unk: Map tokens absent from vocab to <unk> instead of failing
        """
        self.logger = setup_logger('corpus')
        self.vocab = vocab
        self.allow_unk = allow_unk

    def _read_jsonl(self, path) -> List[dict]:
        path = Path(path)
        if not path.exists():
            raise DataError(f"file not found: {path}")
        records = []
        with open(path, 'r', encoding='utf-8') as f:
            for line_no, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise DataError(f"{path.name}:{line_no}: malformed record: {e}") from None
                if not isinstance(record, dict):
                    raise DataError(f"{path.name}:{line_no}: record is not an object")
                records.append(record)
        return records

    def load_corpus(self, corpus_path, names_path=None) -> Corpus:
        """
        Load a corpus and optionally its companion name file

        Args:
            corpus_path: JSON-lines file, one utterance per line
            names_path: JSON-lines file with {"conv", "names"} per conversation

        Returns:
            Corpus with conversations in order of first appearance
        """
        utterances: Dict[str, List[Utterance]] = {}
        for n, record in enumerate(self._read_jsonl(corpus_path), 1):
            try:
                utterance = Utterance.from_dict(record, self.vocab, allow_unk=self.allow_unk)
            except DataError as e:
                raise type(e)(f"{Path(corpus_path).name}:{n}: {e}") from None
            utterances.setdefault(utterance.conversation_id, []).append(utterance)

        names: Dict[str, Tuple[Tuple[int, ...], ...]] = {}
        if names_path is not None:
            for n, record in enumerate(self._read_jsonl(names_path), 1):
                if 'conv' not in record or not isinstance(record.get('names'), list):
                    raise DataError(f"{Path(names_path).name}:{n}: expected {{\"conv\", \"names\"}}")
                conv_id = str(record['conv'])
                if conv_id in names:
                    raise DataError(f"{Path(names_path).name}:{n}: duplicate conversation {conv_id}")
                try:
                    names[conv_id] = tuple(
                        self.vocab.encode(token_list(name, 'name'), allow_unk=self.allow_unk)
                        for name in record['names'])
                except DataError as e:
                    raise type(e)(f"{Path(names_path).name}:{n}: {e}") from None

        order = list(utterances) + [c for c in names if c not in utterances]
        conversations = []
        for conv_id in order:
            conversation = Conversation(
                id=conv_id,
                utterances=tuple(utterances.get(conv_id, ())),
                names=names.get(conv_id, ())
            )
            conversation.validate(self.vocab)
            conversations.append(conversation)

        corpus = Corpus(conversations=tuple(conversations))
        self.logger.info(f"Loaded {len(corpus)} utterance(s) in {len(conversations)} conversation(s) from {corpus_path}")
        return corpus

    def save_corpus(self, corpus: Corpus, corpus_path, names_path=None):
        """Write the corpus file and, if requested, the companion name file"""
        lines = [json.dumps(u.to_dict(self.vocab), ensure_ascii=False)
                 for u in corpus.utterances()]
        atomic_write_text(corpus_path, ''.join(line + '\n' for line in lines))

        if names_path is not None:
            self.save_names(corpus, names_path)
        self.logger.info(f"Saved {len(corpus)} utterance(s) to {corpus_path}")

    def save_names(self, corpus: Corpus, names_path):
        lines = [json.dumps({'conv': c.id, 'names': [self.vocab.decode(n) for n in c.names]},
                            ensure_ascii=False)
                 for c in corpus.conversations]
        atomic_write_text(names_path, ''.join(line + '\n' for line in lines))

    def load_records(self, path) -> List[dict]:
        """Raw JSON-lines records (hypothesis files and the like)"""
        return self._read_jsonl(path)

    def load_text(self, path) -> List[Tuple[int, ...]]:
        """Plain text corpus: one tagged transcript per line, tokens space-separated"""
        path = Path(path)
        if not path.exists():
            raise DataError(f"file not found: {path}")
        sequences = []
        with open(path, 'r', encoding='utf-8') as f:
            for line_no, line in enumerate(f, 1):
                tokens = line.split()
                if not tokens:
                    continue
                try:
                    utterance = Utterance('', str(line_no),
                                          self.vocab.encode(tokens, allow_unk=self.allow_unk))
                    utterance.validate(self.vocab)
                except DataError as e:
                    raise type(e)(f"{path.name}:{line_no}: {e}") from None
                sequences.append(utterance.reference)
        self.logger.info(f"Loaded {len(sequences)} transcript(s) from {path}")
        return sequences


def save_text(lines: Sequence[Sequence[str]], path):
    atomic_write_text(path, ''.join(' '.join(tokens) + '\n' for tokens in lines))
