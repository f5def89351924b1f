import itertools

import numpy as np
import pytest

from src.models.name_list import NameList
from src.models.ngram_lm import LMState
from src.services.tagging_service import (adversarial_candidates, build_ne_lm, extract_conv_names,
                                          insert_tags, levenshtein, name_distance,
                                          sample_adversarial, sample_distractors)
from src.utils.errors import DataError, PoolError
from src.utils.tags import strip_tags

POOL = [(first, last) for first, last in itertools.product(
    ['john', 'mary', 'ali', 'wei', 'anna', 'omar', 'lena', 'ivan'],
    ['smith', 'mozart', 'garcia', 'chen', 'novak', 'kim', 'jones', 'berg'])]
# near misses of john smith and ali chen
POOL += [('jon', 'smith'), ('ali', 'chan'), ('joan', 'smyth'), ('alia', 'chew'), ('jon', 'smyth'),
         ('jahn', 'smyth'), ('johnny', 'smith'), ('john', 'smithes')]


class TestInsertTags:
    def test_single_name(self):
        out = insert_tags(['hello', 'mr', 'moz', 'art'], [['moz', 'art']])
        assert out == ['hello', 'mr', '<ne>', 'moz', 'art', '</ne>']

    def test_longest_match_wins(self):
        out = insert_tags(['hello', 'mr', 'moz', 'art'], [['moz'], ['moz', 'art']])
        assert out == ['hello', 'mr', '<ne>', 'moz', 'art', '</ne>']

    def test_no_names_present(self):
        assert insert_tags(['the', 'next', 'patient'], [['moz', 'art']]) == ['the', 'next', 'patient']

    def test_case_insensitive_keeps_input(self):
        assert insert_tags(['Moz', 'Art'], [['moz', 'art']]) == ['<ne>', 'Moz', 'Art', '</ne>']

    def test_repeated_names(self):
        out = insert_tags(['moz', 'and', 'moz'], [['moz']])
        assert out == ['<ne>', 'moz', '</ne>', 'and', '<ne>', 'moz', '</ne>']

    def test_strip_then_insert_is_identity(self):
        tagged = ['dr', '<ne>', 'john', 'smith', '</ne>', 'sees', '<ne>', 'mary', 'kim', '</ne>']
        stripped, _ = strip_tags(tagged)
        assert insert_tags(stripped, [['john', 'smith'], ['mary', 'kim']]) == tagged

    def test_spans_are_list_entries(self):
        rng = np.random.default_rng(0)
        names = [['a', 'b'], ['c'], ['b', 'c', 'a']]
        for _ in range(100):
            tokens = [str(t) for t in rng.choice(['a', 'b', 'c', 'd'], size=rng.integers(0, 12))]
            out = insert_tags(tokens, names)
            stripped, ranges = strip_tags(out)
            assert stripped == tokens
            for start, end in ranges:
                assert stripped[start:end] in names


class TestConversationNames:
    def test_dedup(self):
        refs = [['<ne>', 'moz', 'art', '</ne>', 'hi'], ['see', '<ne>', 'moz', 'art', '</ne>']]
        assert extract_conv_names(refs).names == (('moz', 'art'),)

    def test_untagged(self):
        assert len(extract_conv_names([['a', 'b'], ['c']])) == 0

    def test_distinct_spans(self):
        names = extract_conv_names([['<ne>', 'a', 'b', '</ne>', '<ne>', 'a', '</ne>']])
        assert names.names == (('a', 'b'), ('a',))
        assert names.provenance == 'true'


class TestLevenshtein:
    @pytest.mark.parametrize('a, b, expected', [
        ('abc', 'abc', 0),
        ('a', '', 1),
        ('kitten', 'sitting', 3),
    ])
    def test_classic(self, a, b, expected):
        assert levenshtein(a, b) == expected

    def test_metric_properties(self):
        rng = np.random.default_rng(42)

        def word():
            return ''.join(rng.choice(list('abcd'), size=rng.integers(0, 11)))

        for _ in range(1000):
            a, b, c = word(), word(), word()
            assert levenshtein(a, b) == levenshtein(b, a)
            assert (levenshtein(a, b) == 0) == (a == b)
            assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)

    def test_name_distance(self):
        assert name_distance(('johm', 'smith'), ('john', 'smith')) == 1
        assert name_distance(('smith',), ('john', 'smith')) == 5
        assert name_distance(('ohn', 'smith'), ('john', 'smith')) == 1


class TestDistractors:
    def test_zero(self):
        assert len(sample_distractors(POOL, [('john', 'smith')], 0, seed=1)) == 0

    def test_count_and_exclusion(self):
        truenames = [('john', 'smith'), ('mary', 'kim')]
        sample = sample_distractors(POOL, truenames, 40, seed=3)
        assert len(sample) == 40
        assert sample.provenance == 'distractor'
        assert not any(name in sample for name in truenames)

    def test_deterministic(self):
        one = sample_distractors(POOL, [('john', 'smith')], 16, seed=5)
        two = sample_distractors(POOL, [('john', 'smith')], 16, seed=5)
        assert one == two

    def test_smaller_count_is_prefix(self):
        small = sample_distractors(POOL, [('john', 'smith')], 3, seed=11)
        large = sample_distractors(POOL, [('john', 'smith')], 8, seed=11)
        assert large.names[:3] == small.names

    def test_pool_too_small(self):
        with pytest.raises(PoolError):
            sample_distractors(POOL, [('john', 'smith')], len(POOL), seed=0)

    def test_full_pool_asset(self):
        from src.models.experiment_config import DEFAULT_NAME_POOL
        from src.services.corpus_service import load_name_pool
        pool = load_name_pool(DEFAULT_NAME_POOL)
        sample = sample_distractors(pool, [('john', 'smith')], 256, seed=0)
        assert len(sample) == 256
        assert ('john', 'smith') not in sample


class TestAdversarial:
    def test_candidates_cover_recombinations(self):
        candidates = adversarial_candidates([('john', 'smith'), ('mary', 'kim')])
        assert ('john', 'kim') in candidates
        assert ('smith',) in candidates
        assert candidates == sorted(candidates)

    def test_exact_distance(self):
        truenames = [('john', 'smith'), ('ali', 'chen')]
        for d in (1, 2, 4):
            sample = sample_adversarial(POOL, truenames, d, count=16, seed=0)
            assert sample.distance == d
            for name in sample:
                assert min(name_distance(name, t) for t in truenames) == d

    def test_single_component_at_distance_five(self):
        pool = [('john', 'smith'), ('mary', 'kim')]
        sample = sample_adversarial(pool, [('john', 'smith')], 5, count=16, seed=0)
        assert ('smith',) in sample
        assert ('smith',) not in sample_adversarial(pool, [('john', 'smith')], 4, count=16, seed=0)

    def test_deterministic(self):
        truenames = [('john', 'smith')]
        one = sample_adversarial(POOL, truenames, 2, count=4, seed=11)
        two = sample_adversarial(POOL, truenames, 2, count=4, seed=11)
        assert one == two
        assert len(one) == 4

    def test_flagged_when_short(self):
        sample = sample_adversarial([('john', 'smith'), ('john', 'smyth')], [('john', 'smith')], 1,
                                    count=16, seed=0)
        assert sample.flagged
        assert ('john', 'smyth') in sample

    def test_nothing_at_distance(self):
        sample = sample_adversarial([('john', 'smith')], [('john', 'smith')], 1, seed=0)
        assert len(sample) == 0
        assert sample.flagged
        assert sample.shortfall == 16

    def test_shortfall_counts_missing_names(self):
        pool = [('john', 'smith'), ('jon', 'smith'), ('joan', 'smith'), ('jo', 'smith')]
        sample = sample_adversarial(pool, [('john', 'smith')], 1, count=3, seed=0)
        assert set(sample) == {('jon', 'smith'), ('joan', 'smith')}
        assert sample.flagged
        assert sample.shortfall == 1

    def test_full_count_is_not_flagged(self):
        sample = sample_adversarial(POOL, [('john', 'smith')], 1, count=2, seed=0)
        assert len(sample) == 2
        assert not sample.flagged
        assert sample.shortfall == 0


class TestNameLM:
    def test_single_name(self, vocab, ids, clinic):
        id_lm = clinic['id_lm']
        ne_lm = build_ne_lm(NameList((('moz', 'art'),)), vocab, id_lm, mu=0.9)
        after_open = LMState((vocab.ne_open,))
        moz = vocab.index('moz')
        expected = 0.9 * 1.0 + 0.1 * id_lm.prob((vocab.ne_open,), moz)
        assert np.exp(ne_lm.logprob(after_open, moz)) == pytest.approx(expected)

        full = LMState(ids('<ne> moz art'))
        assert np.exp(ne_lm.logprob(full, vocab.ne_close)) >= 0.9

    def test_shared_first_token(self, vocab, ids, clinic):
        id_lm = clinic['id_lm']
        names = NameList((('moz', 'art'), ('moz', 'ard'), ('moz', 'art')))
        assert len(names) == 2
        ne_lm = build_ne_lm(names, vocab, id_lm, mu=0.9)
        state = LMState(ids('<ne> moz'))
        for word in ('art', 'ard'):
            expected = 0.9 * 0.5 + 0.1 * id_lm.prob(ids('<ne> moz'), vocab.index(word))
            assert np.exp(ne_lm.logprob(state, vocab.index(word))) == pytest.approx(expected)

    def test_empty_list(self, vocab, clinic):
        with pytest.raises(DataError):
            build_ne_lm(NameList(()), vocab, clinic['id_lm'])

    def test_reserved_token_in_name(self):
        with pytest.raises(DataError):
            NameList((('moz', '<ne>'),))
