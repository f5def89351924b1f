"""
Eval controller for scoring hypothesis files against a reference corpus
"""
from typing import Dict, List, Sequence, Tuple

from ..models.corpus import token_list
from ..models.eval_report import EvalReport
from ..models.vocab import Vocab
from ..services.config_service import ConfigService
from ..services.corpus_service import CorpusService, load_vocab
from ..services.eval_service import EvalService
from ..utils.errors import CdrError, DataError, error_kind
from ..utils.logger import setup_logger


class EvalController:
    """Handles `cdr eval`"""

    def __init__(self, config_service: ConfigService):
        self.config_service = config_service
        self.logger = setup_logger('eval')

    def _pairs(self, service: CorpusService, vocab: Vocab, corpus, hyp_path: str) -> List[Tuple[List[str], List[str]]]:
        hyps: Dict[Tuple[str, str], List[str]] = {}
        for n, record in enumerate(service.load_records(hyp_path), 1):
            try:
                key = (str(record['conv']), str(record['utt']))
                hyp = token_list(record['hyp'], 'hyp')
            except (KeyError, TypeError, DataError) as e:
                raise DataError(f"{hyp_path}:{n}: malformed hypothesis record: {e}") from None
            if key in hyps:
                raise DataError(f"{hyp_path}:{n}: duplicate hypothesis for {key[1]}")
            hyps[key] = hyp

        refs = {(u.conversation_id, u.utterance_id): vocab.decode(u.reference)
                for u in corpus.utterances()}
        missing = sorted(k[1] for k in refs if k not in hyps)
        extra = sorted(k[1] for k in hyps if k not in refs)
        if missing or extra:
            details = []
            if missing:
                details.append(f"missing: {', '.join(missing[:20])}")
            if extra:
                details.append(f"unexpected: {', '.join(extra[:20])}")
            raise DataError(f"{hyp_path}: utterance id mismatch ({'; '.join(details)})")
        return [(refs[k], hyps[k]) for k in refs]

    def evaluate(self, corpus_path: str, vocab_path: str, systems: Sequence[Tuple[str, str]],
                 out_path: str = None, exact_spans: bool = False) -> Tuple[bool, str, dict]:
        """
        Score one or more systems

        Args:
            corpus_path: Reference corpus
            vocab_path: Vocabulary file
            systems: (system name, hypothesis file) pairs
            out_path: Report TSV; a .counts.json sidecar is written next to it
            exact_spans: Exact-boundary span matching for tag precision/recall

        Returns:
            Tuple of (success, message, stats_dict); stats['reports'] holds per-system dicts
        """
        self.logger.info(f"Starting evaluation of {len(systems)} system(s) against {corpus_path}")
        stats = {'reports': {}}
        try:
            vocab = load_vocab(vocab_path)
            service = CorpusService(vocab)
            corpus = service.load_corpus(corpus_path)
            evaluator = EvalService(exact_spans=exact_spans)

            reports: List[EvalReport] = []
            for system, hyp_path in systems:
                reports.append(evaluator.evaluate(system, self._pairs(service, vocab, corpus, hyp_path)))
            if out_path:
                evaluator.write_reports(reports, out_path)

            stats['reports'] = {r.system: r.to_dict() for r in reports}
            message = f"Evaluation completed: {len(reports)} system(s)"
            self.logger.info(message)
            return True, message, stats

        except CdrError as e:
            stats['error_kind'] = error_kind(e)
            error_msg = f"Evaluation failed: {e}"
            self.logger.error(error_msg)
            return False, error_msg, stats
