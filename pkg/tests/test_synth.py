import itertools

import numpy as np
import pytest

from src.models.experiment_config import SynthSpec
from src.models.vocab import Vocab
from src.services.e2e_service import nearest_confusions
from src.services.synth_service import GRAMMARS, SynthService, has_neighbours
from src.utils.errors import ConfigError, PoolError
from src.utils.tags import span_contents

POOL = list(itertools.product(['anna', 'omar', 'wei', 'lena', 'ivan', 'mary'],
                              ['berg', 'novak', 'chen', 'garcia']))


def _generate(**kwargs):
    settings = dict(n_conversations=3, utterances_per_conversation=4, fraction_with_names=0.5,
                    train_utterances=60, rho=0.2, seed=1)
    settings.update(kwargs)
    return SynthService(SynthSpec(**settings)).generate(POOL)


class TestSynth:
    def test_shape(self):
        out = _generate()
        assert len(out.corpus) == 12
        assert len(out.train_text) == 60
        assert [c.id for c in out.corpus.conversations] == ['c0000', 'c0001', 'c0002']
        assert out.stats['test_utterances_with_names'] == 6

    def test_names_recur_within_conversation(self):
        out = _generate()
        vocab = out.vocab
        for conversation in out.corpus.conversations:
            assert len(conversation.names) == 2
            known = {tuple(vocab.decode(n)) for n in conversation.names}
            for utterance in conversation.utterances:
                for span in span_contents(vocab.decode(utterance.reference)):
                    assert span in known

    def test_every_utterance_has_observation(self):
        out = _generate(tag_rho=0.0)
        for utterance in out.corpus.utterances():
            table = out.e2e.observations[utterance.observation]
            assert table.shape == (len(utterance.reference) + 1, len(out.vocab))

    def test_no_names(self):
        out = _generate(fraction_with_names=0.0)
        tags = {out.vocab.ne_open, out.vocab.ne_close}
        for utterance in out.corpus.utterances():
            assert not tags.intersection(utterance.reference)

    def test_deterministic(self):
        one, two = _generate(seed=5), _generate(seed=5)
        assert one.corpus == two.corpus
        assert one.train_text == two.train_text
        for key, table in one.e2e.observations.items():
            np.testing.assert_array_equal(table, two.e2e.observations[key])

    def test_noiseless_channel_points_at_reference(self):
        out = _generate(rho=0.0, tag_rho=0.0)
        for utterance in out.corpus.utterances():
            table = out.e2e.observations[utterance.observation]
            assert list(np.argmax(table[:-1], axis=1)) == list(utterance.reference)

    def test_test_names_unseen_in_training(self):
        out = _generate(fraction_with_names=1.0)
        train_spans = {s for text in out.train_text for s in span_contents(list(text))}
        for conversation in out.corpus.conversations:
            for name in conversation.names:
                assert tuple(out.vocab.decode(name)) not in train_spans

    def test_grammar_words_in_vocab(self):
        out = _generate()
        assert all(w in out.vocab for w in GRAMMARS['clinic'].words())

    def test_pool_too_small(self):
        with pytest.raises(PoolError):
            SynthService(SynthSpec(seed=0)).generate(POOL[:3])

    def test_unknown_grammar(self):
        with pytest.raises(ConfigError):
            SynthService(SynthSpec(grammar='airport'))

    def test_dropped_tags_shorten_observations(self):
        out = _generate(n_conversations=10, fraction_with_names=0.5, tag_rho=0.5)
        named = [u for u in out.corpus.utterances() if out.vocab.ne_open in u.reference]
        lengths = [out.e2e.observations[u.observation].shape[0] for u in named]
        assert any(n < len(u.reference) + 1 for n, u in zip(lengths, named))
        # a dropped span loses both tags
        assert all((len(u.reference) + 1 - n) % 2 == 0 for n, u in zip(lengths, named))

    def test_test_surnames_unseen_in_training(self):
        out = _generate(fraction_with_names=1.0, train_fraction_with_names=1.0)
        train_words = {w for text in out.train_text for w in text}
        for conversation in out.corpus.conversations:
            for name in conversation.names:
                assert out.vocab.decode(name)[-1] not in train_words

    def test_variants_enter_training(self):
        out = _generate(variant_rate=1.0, train_fraction_with_names=1.0)
        train_spans = {s for text in out.train_text for s in span_contents(list(text))}
        for conversation in out.corpus.conversations:
            for name in conversation.names:
                first, surname = out.vocab.decode(name)
                if surname in out.variants:
                    assert (first, out.variants[surname]) in train_spans

    def test_no_variants_without_rate(self):
        out = _generate(variant_rate=0.0)
        assert out.stats['test_names_with_variants'] == 0
        assert out.stats['train_names'] == 12


class TestSurnameSplit:
    SURNAMES = ['abcd', 'abce', 'abef', 'aefg', 'efgh']

    def test_has_neighbours(self):
        assert has_neighbours('abcd', self.SURNAMES, (1, 2, 3, 4))
        assert not has_neighbours('abcd', ['abcd', 'abce', 'abef', 'efgh'], (1, 2, 3, 4))
        assert not has_neighbours('abef', self.SURNAMES, (1,))

    def test_test_surnames_are_eligible(self):
        service = SynthService(SynthSpec(seed=0))
        train, test = service.split_surnames(self.SURNAMES, np.random.default_rng(0))
        assert len(test) == 1
        assert test[0] in ('abcd', 'abce')
        assert sorted(train + test) == self.SURNAMES

    def test_falls_back_to_all_surnames(self):
        service = SynthService(SynthSpec(seed=0))
        train, test = service.split_surnames(['berg', 'novak', 'chen', 'garcia'],
                                             np.random.default_rng(0))
        assert len(test) == 2
        assert not set(train) & set(test)

    def test_variant_is_nearest_confusable_surname(self):
        vocab = Vocab.build(['smith', 'smyth', 'smithe', 'berg'])
        confusions = nearest_confusions(vocab, {'names': ['smith', 'smyth', 'smithe', 'berg']}, 3)
        variants = SynthService.find_variants(['smith'], ['smyth', 'smithe', 'berg'], vocab, confusions)
        # smyth and smithe are both one edit away; the lower id wins
        assert variants == {'smith': 'smithe'}

    def test_no_variant_outside_confusions(self):
        vocab = Vocab.build(['smith', 'smyth', 'berg', 'berk'])
        confusions = nearest_confusions(vocab, {'names': ['smith', 'smyth', 'berg', 'berk']}, 1)
        assert SynthService.find_variants(['smith'], ['berg', 'berk'], vocab, confusions) == {}
