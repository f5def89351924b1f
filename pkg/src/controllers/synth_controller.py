"""
Synth controller for generating the synthetic task files
"""
from pathlib import Path
from typing import Tuple

from ..models.experiment_config import SynthSpec
from ..services.config_service import ConfigService
from ..services.corpus_service import CorpusService, load_name_pool, save_text, save_vocab
from ..services.e2e_service import save_tabular
from ..services.lm_service import serialize_arpa
from ..services.synth_service import SynthService
from ..utils.errors import CdrError, error_kind
from ..utils.logger import setup_logger

OUTPUT_FILES = {
    'vocab': 'vocab.txt',
    'train_text': 'train.txt',
    'corpus': 'test.jsonl',
    'names': 'test.names.jsonl',
    'transition_lm': 'transition.arpa',
    'e2e': 'e2e.jsonl'
}


class SynthController:
    """Handles `cdr synth`"""

    def __init__(self, config_service: ConfigService):
        self.config_service = config_service
        self.logger = setup_logger('synth')

    def synth(self, spec: SynthSpec, out_dir: str) -> Tuple[bool, str, dict]:
        """
        Generate the synthetic task into out_dir

        Args:
            spec: Synthesis settings
            out_dir: Output directory (created if missing)

        Returns:
            Tuple of (success, message, stats_dict)
        """
        self.logger.info(f"Starting synthesis (seed {spec.seed}) into {out_dir}")
        stats = {'files': {}}
        try:
            out = Path(out_dir)
            paths = {role: out / name for role, name in OUTPUT_FILES.items()}

            pool = load_name_pool(spec.name_pool)
            result = SynthService(spec).generate(pool)

            save_vocab(result.vocab, paths['vocab'])
            save_text(result.train_text, paths['train_text'])
            CorpusService(result.vocab).save_corpus(result.corpus, paths['corpus'], paths['names'])
            serialize_arpa(result.transition, result.vocab, paths['transition_lm'])
            save_tabular(result.e2e, paths['e2e'], OUTPUT_FILES['transition_lm'])

            self.config_service.write_manifest(out / 'synth', spec.to_dict(),
                                               {'name_pool': spec.name_pool}, spec.seed,
                                               extra={'outputs': OUTPUT_FILES})
            stats.update(result.stats)
            stats['files'] = {role: str(p) for role, p in paths.items()}

            message = (f"Synthesis completed: {stats['test_utterances']} test utterances, "
                       f"{stats['train_utterances']} training transcripts")
            self.logger.info(message)
            return True, message, stats

        except CdrError as e:
            stats['error_kind'] = error_kind(e)
            error_msg = f"Synthesis failed: {e}"
            self.logger.error(error_msg)
            return False, error_msg, stats
