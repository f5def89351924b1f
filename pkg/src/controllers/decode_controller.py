"""
Decode controller: resolves biasing name lists per scope, builds fused
scorers and runs batch beam search
"""
import json
from typing import Callable, Dict, List, Optional, Tuple

from ..models.corpus import Corpus, Utterance
from ..models.decode_config import FusionConfig
from ..models.experiment_config import ExperimentConfig
from ..models.name_list import NameList, normalize_name
from ..models.ngram_lm import LanguageModel
from ..models.vocab import Vocab
from ..services.config_service import ConfigService
from ..services.corpus_service import CorpusService, load_name_pool, load_vocab
from ..services.decoder_service import decode_batch
from ..services.e2e_service import E2EModel, load_tabular
from ..services.lm_service import parse_arpa
from ..services.scorer_service import FusionScorer
from ..services.tagging_service import (adversarial_candidates, build_ne_lm, extract_conv_names,
                                        sample_adversarial, sample_distractors)
from ..utils.errors import CdrError, ConfigError, DataError, error_kind
from ..utils.files import atomic_write_text
from ..utils.logger import setup_logger
from ..utils.tags import span_contents


class DecodeController:
    """Handles `cdr decode`"""

    def __init__(self, config_service: ConfigService):
        self.config_service = config_service
        self.logger = setup_logger('decode')
        self._models: Dict[Tuple[str, ...], tuple] = {}
        self.perturbation_shortfall = {'conversations': 0, 'names': 0}

    def _load_models(self, config: ExperimentConfig) -> Tuple[Vocab, Corpus, E2EModel, Optional[LanguageModel]]:
        paths = config.models
        key = (paths.vocab, paths.corpus, paths.names or '', paths.e2e, paths.id_lm)
        if key in self._models:
            return self._models[key]
        for role in ('vocab', 'corpus', 'e2e'):
            if not getattr(paths, role):
                raise ConfigError(f"missing model path: {role}")
        if config.mode != 'plain' and not paths.id_lm:
            raise ConfigError(f"mode {config.mode} needs an ID LM (--id-lm)")

        vocab = load_vocab(paths.vocab)
        corpus = CorpusService(vocab).load_corpus(paths.corpus, paths.names)
        e2e = load_tabular(paths.e2e, vocab)
        id_lm = parse_arpa(paths.id_lm, vocab) if paths.id_lm else None
        self._models[key] = (vocab, corpus, e2e, id_lm)
        return self._models[key]

    def _perturbation(self, config: ExperimentConfig, truenames: NameList, index: int,
                      pool: List[Tuple[str, ...]], candidates) -> NameList:
        spec = config.perturbation
        if spec is None or spec.kind == 'none' or spec.count == 0:
            return NameList((), provenance='distractor')
        seed = spec.seed + index
        if spec.kind == 'distractor':
            return sample_distractors(pool, truenames.names, spec.count, seed)
        if not len(truenames):
            return NameList((), provenance='adversarial', distance=spec.distance)
        return sample_adversarial(pool, truenames.names, spec.distance, spec.count, seed,
                                  candidates=candidates)

    def resolve_name_lists(self, config: ExperimentConfig, corpus: Corpus,
                           vocab: Vocab) -> Dict[str, NameList]:
        """
        Biasing names per utterance id

        per-conversation: the conversation's known names (found spans when
        none are listed) plus its perturbation names. global: the union of
        all of those. per-utterance-oracle: the utterance's own spans plus
        its conversation's perturbation; utterances without names map to an
        empty list and are decoded without biasing.
        """
        pool: List[Tuple[str, ...]] = []
        candidates = None
        spec = config.perturbation
        if spec is not None and spec.kind != 'none' and spec.count > 0:
            if not config.models.name_pool:
                raise ConfigError("name perturbation needs a name pool (--name-pool)")
            pool = load_name_pool(config.models.name_pool)
            if spec.kind == 'adversarial':
                candidates = adversarial_candidates(pool)

        if config.lm_scope == 'per-utterance-oracle':
            if not any(vocab.ne_open in u.reference for u in corpus.utterances()):
                raise DataError("per-utterance-oracle scope needs tagged references")

        per_conversation: Dict[str, NameList] = {}
        extras: Dict[str, NameList] = {}
        for index, conversation in enumerate(corpus.conversations):
            texts = [vocab.decode(u.reference) for u in conversation.utterances]
            if conversation.names:
                known = NameList(tuple(tuple(vocab.decode(n)) for n in conversation.names))
            else:
                known = extract_conv_names(texts)
            extras[conversation.id] = self._perturbation(config, known, index, pool, candidates)
            per_conversation[conversation.id] = NameList.merge([known, extras[conversation.id]])

        short = [extra for extra in extras.values() if extra.flagged]
        self.perturbation_shortfall = {'conversations': len(short),
                                       'names': sum(extra.shortfall for extra in short)}
        if short:
            self.logger.warning(f"{len(short)} conversation(s) got fewer {spec.kind} names than requested "
                                f"({self.perturbation_shortfall['names']} missing)")

        lists: Dict[str, NameList] = {}
        if config.lm_scope == 'global':
            union = NameList.merge(per_conversation.values())
            for utterance in corpus.utterances():
                lists[utterance.utterance_id] = union
        elif config.lm_scope == 'per-conversation':
            for conversation in corpus.conversations:
                for utterance in conversation.utterances:
                    lists[utterance.utterance_id] = per_conversation[conversation.id]
        else:
            for conversation in corpus.conversations:
                for utterance in conversation.utterances:
                    own = span_contents(vocab.decode(utterance.reference))
                    if own:
                        lists[utterance.utterance_id] = NameList.merge(
                            [NameList(tuple(own)), extras[conversation.id]])
                    else:
                        lists[utterance.utterance_id] = NameList(())
        return lists

    def build_scorers(self, config: ExperimentConfig, corpus: Corpus, vocab: Vocab,
                      e2e: E2EModel, id_lm: Optional[LanguageModel]) -> List[FusionScorer]:
        """One scorer per utterance, shared between utterances with the same name list"""
        plain = FusionScorer(e2e, FusionConfig(mode='plain'))
        if config.mode == 'plain':
            return [plain for _ in corpus.utterances()]

        fusion = config.fusion()
        lists = self.resolve_name_lists(config, corpus, vocab)
        cache: Dict[Tuple, FusionScorer] = {}
        scorers = []
        for utterance in corpus.utterances():
            names = lists[utterance.utterance_id]
            if not len(names):
                scorers.append(plain)
                continue
            key = tuple(sorted(normalize_name(n) for n in names))
            if key not in cache:
                ne_lm = build_ne_lm(names, vocab, id_lm, order=config.ne_order, mu=config.mu)
                cache[key] = FusionScorer(e2e, fusion, id_lm=id_lm, bias_lm=ne_lm)
            scorers.append(cache[key])
        self.logger.info(f"Built {len(cache)} biasing scorer(s) for scope {config.lm_scope}")
        return scorers

    def decode(self, config: ExperimentConfig, out_path: str, explain: bool = False,
               progress_callback: Callable = None) -> Tuple[bool, str, dict]:
        """
        Decode every utterance of the corpus

        Args:
            config: Experiment configuration including model paths
            out_path: Hypothesis JSON-lines output
            explain: Add the per-component score decomposition to each line
            progress_callback: Optional callback(current, total, message)

        Returns:
            Tuple of (success, message, stats_dict)
        """
        self.logger.info(f"Starting decode: mode {config.mode}, scope {config.lm_scope}, "
                         f"alpha {config.alpha}, beta {config.beta}")
        stats = {'utterances': 0, 'unfinished': 0, 'biased_utterances': 0}
        try:
            config.validate()
            vocab, corpus, e2e, id_lm = self._load_models(config)
            self.perturbation_shortfall = {'conversations': 0, 'names': 0}
            utterances = corpus.utterances()
            missing = [u.utterance_id for u in utterances if u.observation is None]
            if missing:
                raise DataError(f"utterances without observation: {', '.join(missing[:10])}")

            scorers = self.build_scorers(config, corpus, vocab, e2e, id_lm)
            jobs = [(scorer, u.observation) for scorer, u in zip(scorers, utterances)]

            def progress(done, total):
                if progress_callback:
                    progress_callback(done, total, f"Decoded {done}/{total}")

            results = decode_batch(jobs, config.decoding(), workers=config.workers, progress=progress)

            lines = []
            for utterance, scorer, result in zip(utterances, scorers, results):
                lines.append(json.dumps(self._record(utterance, scorer, result, vocab, config, explain),
                                        ensure_ascii=False))
                stats['utterances'] += 1
                stats['unfinished'] += 0 if result.finished else 1
                stats['biased_utterances'] += 1 if scorer.mode != 'plain' else 0
            atomic_write_text(out_path, ''.join(line + '\n' for line in lines))

            paths = config.models
            self.config_service.write_manifest(
                out_path, config.to_dict(),
                {'vocab': paths.vocab, 'corpus': paths.corpus, 'names': paths.names,
                 'e2e': paths.e2e, 'id_lm': paths.id_lm, 'name_pool': paths.name_pool},
                config.seed, extra={'perturbation_shortfall': dict(self.perturbation_shortfall)})
            stats['perturbation_shortfall'] = dict(self.perturbation_shortfall)

            message = f"Decode completed: {stats['utterances']} utterances"
            if stats['unfinished']:
                message += f", {stats['unfinished']} unfinished"
            self.logger.info(message)
            return True, message, stats

        except CdrError as e:
            stats['error_kind'] = error_kind(e)
            error_msg = f"Decode failed: {e}"
            self.logger.error(error_msg)
            return False, error_msg, stats

    def _record(self, utterance: Utterance, scorer: FusionScorer, result, vocab: Vocab,
                config: ExperimentConfig, explain: bool) -> dict:
        best = result.best
        record = {
            'conv': utterance.conversation_id,
            'utt': utterance.utterance_id,
            'hyp': vocab.decode(best.tokens),
            'score': best.score,
            'finished': best.finished
        }
        if config.nbest > 1:
            record['nbest'] = [{'hyp': vocab.decode(h.tokens), 'score': h.score}
                               for h in result.nbest[:config.nbest]]
        if explain:
            record['explain'] = scorer.decompose(utterance.observation, best.tokens,
                                                 include_eos=best.finished).to_dict()
        return record
