"""
Accuracy trends of the fusion modes on the default synthetic task
"""
import pytest

from src.controllers.decode_controller import DecodeController
from src.models.corpus import Conversation, Corpus
from src.models.experiment_config import (DEFAULT_NAME_POOL, ExperimentConfig, ModelPaths,
                                          PerturbationSpec, SynthSpec)
from src.services.config_service import ConfigService
from src.services.corpus_service import load_name_pool
from src.services.decoder_service import decode_batch
from src.services.eval_service import EvalService
from src.services.lm_service import train_ngram
from src.services.synth_service import SynthService
from src.services.tagging_service import adversarial_candidates, sample_adversarial


def _task(**settings):
    out = SynthService(SynthSpec(seed=0, **settings)).generate(load_name_pool(DEFAULT_NAME_POOL))
    id_lm = train_ngram([out.vocab.encode(t) for t in out.train_text], out.vocab, order=3)
    return out, id_lm


def _named_only(out) -> Corpus:
    """Utterances with a name, grouped by conversation; WERT only counts these"""
    conversations = []
    for conversation in out.corpus.conversations:
        kept = tuple(u for u in conversation.utterances if out.vocab.ne_open in u.reference)
        if kept:
            conversations.append(Conversation(conversation.id, kept, conversation.names))
    return Corpus(tuple(conversations))


def _evaluate(task, corpus, mode, perturbation=None):
    out, id_lm = task
    config = ExperimentConfig(mode=mode, beam_width=8, max_len=24, perturbation=perturbation,
                              models=ModelPaths(name_pool=DEFAULT_NAME_POOL))
    scorers = DecodeController(ConfigService()).build_scorers(config, corpus, out.vocab, out.e2e,
                                                              id_lm)
    utterances = corpus.utterances()
    results = decode_batch([(s, u.observation) for s, u in zip(scorers, utterances)],
                           config.decoding())
    pairs = [(out.vocab.decode(u.reference), out.vocab.decode(r.best.tokens))
             for u, r in zip(utterances, results)]
    return EvalService().evaluate(mode, pairs)


@pytest.fixture(scope='module')
def task():
    # 2000 utterances, 5% of them with a name
    return _task(n_conversations=400)


@pytest.fixture(scope='module')
def reports(task):
    out, _ = task
    return {
        'plain': _evaluate(task, out.corpus, 'plain'),
        'csf': _evaluate(task, _named_only(out), 'csf'),
        'cdr': _evaluate(task, out.corpus, 'cdr'),
    }


@pytest.fixture(scope='module')
def wert():
    """cdr WERT under name list noise on a name-dense task (500 named utterances)"""
    dense = _task(n_conversations=200, fraction_with_names=0.5)
    named = _named_only(dense[0])
    found = {0: _evaluate(dense, named, 'cdr').wert}
    for count in (16, 256):
        found[count] = _evaluate(dense, named, 'cdr', PerturbationSpec('distractor', count)).wert
    for d in (1, 2):
        found[f'd{d}'] = _evaluate(dense, named, 'cdr', PerturbationSpec('adversarial', 16, d)).wert
    return found


class TestTask:
    def test_size(self, task):
        out, _ = task
        assert len(out.corpus) >= 500
        assert out.stats['test_utterances_with_names'] == round(0.05 * len(out.corpus))
        assert len(_named_only(out)) == out.stats['test_utterances_with_names']

    @pytest.mark.parametrize('d', [1, 2, 4])
    def test_every_conversation_has_near_misses(self, task, d):
        out, _ = task
        pool = load_name_pool(DEFAULT_NAME_POOL)
        candidates = adversarial_candidates(pool)
        for conversation in _named_only(out).conversations:
            names = [tuple(out.vocab.decode(n)) for n in conversation.names]
            assert len(sample_adversarial(pool, names, d, 16, seed=0, candidates=candidates))


class TestFusionOrdering:
    def test_plain_baseline_in_range(self, reports):
        assert 30.0 <= reports['plain'].wert <= 60.0

    def test_contextual_fusion_beats_plain(self, reports):
        assert reports['csf'].wert <= reports['plain'].wert - 5.0

    def test_density_ratio_beats_shallow_fusion(self, reports):
        assert reports['cdr'].wert <= reports['csf'].wert - 5.0

    def test_overall_wer_unchanged(self, reports):
        assert abs(reports['cdr'].wer - reports['plain'].wer) <= 0.5

    def test_tags_are_not_perfect(self, reports):
        tags = reports['plain'].tags
        assert tags.recall < 100.0 or tags.precision < 100.0


class TestBiasingListNoise:
    def test_few_distractors_barely_matter(self, wert):
        assert abs(wert[16] - wert[0]) <= 0.15 * wert[0]

    def test_many_distractors_do_not_help(self, wert):
        assert wert[256] >= wert[16]

    @pytest.mark.parametrize('d', [1, 2])
    def test_near_misses_hurt_more_than_random_names(self, wert, d):
        assert wert[f'd{d}'] >= wert[16]
