import os
import tempfile

import pytest

# keep test runs out of ~/.cdr/logs
os.environ.setdefault('CDR_LOG_DIR', tempfile.mkdtemp(prefix='cdr-test-logs-'))

from src.models.vocab import Vocab  # noqa: E402


@pytest.fixture
def vocab():
    return Vocab.build(['hello', 'mr', 'moz', 'art', 'ard', 'the', 'next', 'patient', 'a', 'b', 'c'])


@pytest.fixture
def ids(vocab):
    def encode(text):
        return vocab.encode(text.split())
    return encode


TRAIN_TEXT = [
    'hello mr <ne> moz art </ne>',
    'the next patient',
    'hello the next patient',
    'mr <ne> moz ard </ne> a b c',
    'a b c',
    'hello <ne> moz art </ne> the patient',
]


@pytest.fixture
def clinic(vocab, ids):
    """Tabular E2E plus ID and NE LMs over the fixture vocabulary"""
    import numpy as np

    from src.models.name_list import NameList
    from src.services.e2e_service import TabularE2E, channel_table, nearest_confusions
    from src.services.lm_service import train_ngram
    from src.services.tagging_service import build_ne_lm

    sequences = [ids(line) for line in TRAIN_TEXT]
    transition = train_ngram(sequences, vocab, order=3)
    id_lm = train_ngram(sequences, vocab, order=2)
    ne_lm = build_ne_lm(NameList((('moz', 'art'),)), vocab, id_lm)
    confusions = nearest_confusions(vocab, {
        'words': ['hello', 'mr', 'the', 'next', 'patient', 'a', 'b', 'c'],
        'names': ['moz', 'art', 'ard'],
    }, 2)
    rng = np.random.default_rng(0)
    observations = {
        'u1': channel_table(ids('hello mr <ne> moz art </ne>'), vocab, confusions, 0.2, rng),
        'u2': channel_table(ids('the next patient'), vocab, confusions, 0.2, rng),
        'u3': channel_table(ids('hello <ne> moz ard </ne> the patient'), vocab, confusions, 0.3, rng),
    }
    e2e = TabularE2E(vocab=vocab, transition=transition, observations=observations)
    return {
        'e2e': e2e,
        'transition': transition,
        'id_lm': id_lm,
        'ne_lm': ne_lm,
        'confusions': confusions,
    }
