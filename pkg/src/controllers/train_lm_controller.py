"""
Train-LM controller for estimating an n-gram model from a text corpus
"""
from typing import Tuple

from ..services.config_service import ConfigService
from ..services.corpus_service import CorpusService, load_vocab
from ..services.lm_service import serialize_arpa, train_ngram
from ..utils.errors import CdrError, error_kind
from ..utils.logger import setup_logger


class TrainLMController:
    """Handles `cdr train-lm`"""

    def __init__(self, config_service: ConfigService):
        self.config_service = config_service
        self.logger = setup_logger('train-lm')

    def train(self, text_path: str, vocab_path: str, out_path: str, order: int = 3,
              smoothing: str = 'witten-bell', k: float = 0.0) -> Tuple[bool, str, dict]:
        """
        Train an n-gram on a text corpus and write it as ARPA

        Args:
            text_path: One tagged transcript per line
            vocab_path: Vocabulary file
            out_path: ARPA output
            order: Model order
            smoothing: 'witten-bell' or 'add-k'
            k: Add-k constant

        Returns:
            Tuple of (success, message, stats_dict)
        """
        self.logger.info(f"Starting LM training on {text_path}")
        stats = {'order': order, 'smoothing': smoothing}
        try:
            vocab = load_vocab(vocab_path)
            sequences = CorpusService(vocab).load_text(text_path)
            lm = train_ngram(sequences, vocab, order=order, smoothing=smoothing, k=k)
            serialize_arpa(lm, vocab, out_path)

            stats['sequences'] = len(sequences)
            stats['ngrams'] = lm.num_ngrams()
            self.config_service.write_manifest(out_path, {'order': order, 'smoothing': smoothing, 'k': k},
                                               {'text': text_path, 'vocab': vocab_path}, seed=0)
            message = f"Trained {order}-gram on {len(sequences)} transcripts: {out_path}"
            self.logger.info(message)
            return True, message, stats

        except CdrError as e:
            stats['error_kind'] = error_kind(e)
            error_msg = f"LM training failed: {e}"
            self.logger.error(error_msg)
            return False, error_msg, stats
