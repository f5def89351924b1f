import json

import pytest

from src.models.corpus import Conversation, Corpus, Utterance
from src.models.span import Span
from src.models.vocab import NE_CLOSE, NE_OPEN
from src.services.corpus_service import CorpusService, load_vocab, save_vocab
from src.utils.errors import DataError, TagError, VocabError
from src.utils.tags import extract_spans, restore_tags, span_contents, strip_tags


def _write_lines(path, lines):
    path.write_text(''.join(f'{line}\n' for line in lines), encoding='utf-8')
    return path


class TestVocab:
    def test_index_is_line_number(self, tmp_path):
        path = _write_lines(tmp_path / 'vocab.txt', ['a', 'b', '<ne>', '</ne>', '<eos>', '<unk>'])
        vocab = load_vocab(path)
        assert len(vocab) == 6
        assert vocab.index('a') == 0
        assert vocab.index('<eos>') == 4
        assert vocab.token(1) == 'b'

    def test_duplicate_token(self, tmp_path):
        path = _write_lines(tmp_path / 'vocab.txt', ['a', 'a', '<ne>', '</ne>', '<eos>', '<unk>'])
        with pytest.raises(VocabError, match='duplicate'):
            load_vocab(path)

    def test_missing_reserved(self, tmp_path):
        path = _write_lines(tmp_path / 'vocab.txt', ['a', '<ne>', '<eos>', '<unk>'])
        with pytest.raises(VocabError, match='</ne>'):
            load_vocab(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / 'vocab.txt'
        path.write_text('', encoding='utf-8')
        with pytest.raises(VocabError, match='empty'):
            load_vocab(path)

    def test_save_load_round_trip(self, tmp_path, vocab):
        save_vocab(vocab, tmp_path / 'v.txt')
        assert load_vocab(tmp_path / 'v.txt') == vocab

    def test_unknown_token(self, vocab):
        with pytest.raises(VocabError):
            vocab.encode(['zebra'])
        assert vocab.encode(['zebra'], allow_unk=True) == (vocab.unk,)


class TestTags:
    def test_extract_single_span(self):
        seq = ['hello', 'mr', NE_OPEN, 'moz', 'art', NE_CLOSE]
        assert extract_spans(seq) == [Span(2, 5)]

    def test_no_tags(self):
        assert extract_spans(['a', 'b', 'c']) == []

    def test_nested(self):
        with pytest.raises(TagError, match='nested'):
            extract_spans([NE_OPEN, 'a', NE_OPEN, 'b', NE_CLOSE])

    def test_unbalanced(self):
        with pytest.raises(TagError):
            extract_spans(['a', NE_CLOSE])
        with pytest.raises(TagError, match='unclosed'):
            extract_spans([NE_OPEN, 'a'])

    def test_span_count_matches_tag_count(self):
        seq = [NE_OPEN, 'a', NE_CLOSE, 'b', NE_OPEN, 'c', 'a', NE_CLOSE]
        spans = extract_spans(seq)
        assert len(spans) == seq.count(NE_OPEN) == seq.count(NE_CLOSE)

    def test_strip(self):
        assert strip_tags(['hello', NE_OPEN, 'moz', 'art', NE_CLOSE]) == (['hello', 'moz', 'art'], [(1, 3)])
        assert strip_tags(['a', 'b']) == (['a', 'b'], [])
        assert strip_tags([NE_OPEN, NE_CLOSE]) == ([], [(0, 0)])

    @pytest.mark.parametrize('seq', [
        ['hello', NE_OPEN, 'moz', 'art', NE_CLOSE],
        [NE_OPEN, 'a', NE_CLOSE, NE_OPEN, 'b', 'c', NE_CLOSE, 'a'],
        [NE_OPEN, NE_CLOSE, 'a'],
        ['a', 'b'],
    ])
    def test_strip_restore_identity(self, seq):
        stripped, ranges = strip_tags(seq)
        assert restore_tags(stripped, ranges) == seq

    def test_span_contents(self):
        seq = ['x', NE_OPEN, 'moz', 'art', NE_CLOSE, NE_OPEN, 'a', NE_CLOSE]
        assert span_contents(seq) == [('moz', 'art'), ('a',)]


class TestCorpus:
    def _corpus(self, vocab, ids):
        return Corpus((
            Conversation('c1', (
                Utterance('c1', 'u1', ids('hello mr <ne> moz art </ne>'), 'c1-u1'),
                Utterance('c1', 'u2', ids('the next patient'), 'c1-u2'),
            ), (ids('moz art'),)),
            Conversation('c2', (Utterance('c2', 'u1', ids('a b c'), None),), ()),
        ))

    def test_round_trip(self, tmp_path, vocab, ids):
        corpus = self._corpus(vocab, ids)
        service = CorpusService(vocab)
        service.save_corpus(corpus, tmp_path / 'c.jsonl', tmp_path / 'n.jsonl')
        assert service.load_corpus(tmp_path / 'c.jsonl', tmp_path / 'n.jsonl') == corpus

    def test_record_format(self, tmp_path, vocab, ids):
        CorpusService(vocab).save_corpus(self._corpus(vocab, ids), tmp_path / 'c.jsonl')
        first = json.loads((tmp_path / 'c.jsonl').read_text(encoding='utf-8').splitlines()[0])
        assert first == {'conv': 'c1', 'utt': 'u1', 'ref': ['hello', 'mr', '<ne>', 'moz', 'art', '</ne>'],
                         'obs': 'c1-u1'}

    def test_nested_tags_rejected(self, tmp_path, vocab):
        record = {'conv': 'c', 'utt': 'u3', 'ref': ['<ne>', 'a', '<ne>', 'b', '</ne>'], 'obs': None}
        (tmp_path / 'c.jsonl').write_text(json.dumps(record) + '\n', encoding='utf-8')
        with pytest.raises(TagError, match='u3'):
            CorpusService(vocab).load_corpus(tmp_path / 'c.jsonl')

    def test_unknown_token_permissive(self, tmp_path, vocab):
        record = {'conv': 'c', 'utt': 'u', 'ref': ['hello', 'zebra'], 'obs': None}
        (tmp_path / 'c.jsonl').write_text(json.dumps(record) + '\n', encoding='utf-8')
        with pytest.raises(VocabError):
            CorpusService(vocab).load_corpus(tmp_path / 'c.jsonl')
        corpus = CorpusService(vocab, allow_unk=True).load_corpus(tmp_path / 'c.jsonl')
        assert corpus.utterances()[0].reference == (vocab.index('hello'), vocab.unk)

    def test_malformed_record(self, tmp_path, vocab):
        (tmp_path / 'c.jsonl').write_text('{"conv": "c", \n', encoding='utf-8')
        with pytest.raises(DataError, match='c.jsonl:1'):
            CorpusService(vocab).load_corpus(tmp_path / 'c.jsonl')

    def test_reference_must_be_a_token_list(self, tmp_path, vocab):
        record = {'conv': 'c', 'utt': 'u', 'ref': 'a b c', 'obs': None}
        (tmp_path / 'c.jsonl').write_text(json.dumps(record) + '\n', encoding='utf-8')
        with pytest.raises(DataError, match='c.jsonl:1: ref must be a list'):
            CorpusService(vocab).load_corpus(tmp_path / 'c.jsonl')
        with pytest.raises(DataError, match='ref'):
            Utterance.from_dict({'conv': 'c', 'utt': 'u', 'ref': ['a', 1]}, vocab)

    def test_name_must_be_a_token_list(self, tmp_path, vocab):
        (tmp_path / 'c.jsonl').write_text(json.dumps({'conv': 'c', 'utt': 'u', 'ref': ['a']}) + '\n',
                                          encoding='utf-8')
        (tmp_path / 'n.jsonl').write_text(json.dumps({'conv': 'c', 'names': ['moz art']}) + '\n',
                                          encoding='utf-8')
        with pytest.raises(DataError, match='n.jsonl:1: name must be a list'):
            CorpusService(vocab).load_corpus(tmp_path / 'c.jsonl', tmp_path / 'n.jsonl')

    def test_eos_in_reference(self, vocab):
        with pytest.raises(DataError, match='<eos>'):
            Utterance('c', 'u', (vocab.index('a'), vocab.eos)).validate(vocab)

    def test_duplicate_ids(self, vocab, ids):
        utterance = Utterance('c', 'u', ids('a'))
        with pytest.raises(DataError, match='duplicate utterance'):
            Conversation('c', (utterance, utterance))
        with pytest.raises(DataError, match='duplicate conversation'):
            Corpus((Conversation('c'), Conversation('c')))

    def test_name_with_reserved_token(self, vocab, ids):
        with pytest.raises(DataError, match='reserved'):
            Conversation('c', (), (ids('moz </ne>'),)).validate(vocab)
