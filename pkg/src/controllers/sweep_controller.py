"""
Sweep controller: one decode + eval run per grid cell
"""
import copy
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Tuple

from ..models.experiment_config import ExperimentConfig, PerturbationSpec
from ..services.config_service import ConfigService
from ..utils.errors import CdrError, ConfigError, error_kind
from ..utils.files import atomic_write_text
from ..utils.logger import setup_logger
from .decode_controller import DecodeController
from .eval_controller import EvalController

SWEEP_KINDS = ('distractors', 'adversarial', 'mu', 'alpha-beta')
DEFAULT_GRIDS = {
    'distractors': [0, 1, 2, 4, 8, 16, 32, 64, 128, 256],
    'adversarial': [1, 2, 4],
    'mu': [0.5, 0.7, 0.9, 0.99],
    'alpha-beta': [(a, b) for a in (0.0, 0.5, 1.0) for b in (0.5, 1.0, 1.5)]
}
ADVERSARIAL_NAMES = 16
SWEEP_COLUMNS = ('kind', 'setting', 'mode', 'WER', 'WERT', 'tag_P', 'tag_R')


def parse_grid(kind: str, text: Optional[str]) -> List[Any]:
    """Comma-separated grid; alpha-beta cells are written alpha:beta"""
    if kind not in SWEEP_KINDS:
        raise ConfigError(f"unknown sweep kind {kind!r}, expected one of {SWEEP_KINDS}")
    if not text:
        return list(DEFAULT_GRIDS[kind])
    cells = []
    try:
        for item in text.split(','):
            item = item.strip()
            if kind in ('distractors', 'adversarial'):
                cells.append(int(item))
            elif kind == 'mu':
                cells.append(float(item))
            else:
                alpha, beta = item.split(':')
                cells.append((float(alpha), float(beta)))
    except ValueError:
        raise ConfigError(f"malformed {kind} grid {text!r}") from None
    if not cells:
        raise ConfigError("empty sweep grid")
    return cells


class SweepController:
    """Handles `cdr sweep`"""

    def __init__(self, config_service: ConfigService):
        self.config_service = config_service
        self.logger = setup_logger('sweep')
        self.decoder = DecodeController(config_service)
        self.evaluator = EvalController(config_service)

    def _cell_config(self, base: ExperimentConfig, kind: str, cell) -> Tuple[str, ExperimentConfig]:
        config = copy.deepcopy(base)
        seed = base.perturbation.seed if base.perturbation else base.seed
        if kind == 'distractors':
            config.perturbation = PerturbationSpec(kind='distractor', count=cell, seed=seed)
            return str(cell), config
        if kind == 'adversarial':
            config.perturbation = PerturbationSpec(kind='adversarial', count=ADVERSARIAL_NAMES,
                                                   distance=cell, seed=seed)
            return f'd={cell}', config
        if kind == 'mu':
            config.mu = cell
            return f'mu={cell}', config
        config.alpha, config.beta = cell
        return f'alpha={cell[0]},beta={cell[1]}', config

    def _flush(self, rows: List[List[str]], curve: List[Tuple[str, str]], out_path: str):
        atomic_write_text(out_path, '\n'.join('\t'.join(r) for r in [list(SWEEP_COLUMNS)] + rows) + '\n')
        atomic_write_text(f'{out_path}.curve.tsv',
                          '\n'.join('\t'.join(p) for p in [('x', 'WERT')] + curve) + '\n')

    def sweep(self, base: ExperimentConfig, kind: str, grid: Sequence[Any], out_path: str,
              work_dir: str = None, progress_callback: Callable = None) -> Tuple[bool, str, dict]:
        """
        Run every grid cell; rows are flushed after each cell

        Args:
            base: Configuration shared by all cells
            kind: distractors, adversarial, mu or alpha-beta
            grid: Cell values
            out_path: Long-format TSV, one row per cell; <out>.curve.tsv holds (x, WERT)
            work_dir: Directory for per-cell hypothesis files (default <out>.cells)
            progress_callback: Optional callback(current, total, message)

        Returns:
            Tuple of (success, message, stats_dict)
        """
        self.logger.info(f"Starting {kind} sweep over {len(grid)} cell(s)")
        stats = {'cells': 0, 'rows': [], 'perturbation_shortfall': {}}
        shortfall = stats['perturbation_shortfall']
        rows: List[List[str]] = []
        curve: List[Tuple[str, str]] = []
        work = Path(work_dir) if work_dir else Path(f'{out_path}.cells')
        try:
            if kind not in SWEEP_KINDS:
                raise ConfigError(f"unknown sweep kind {kind!r}, expected one of {SWEEP_KINDS}")
            for n, cell in enumerate(grid, 1):
                setting, config = self._cell_config(base, kind, cell)
                if progress_callback:
                    progress_callback(n, len(grid), f"Cell {setting}")
                hyp_path = work / f'{kind}-{n:03d}.hyp.jsonl'

                ok, message, decode_stats = self.decoder.decode(config, str(hyp_path))
                if not ok:
                    raise _CellFailed(setting, message, decode_stats.get('error_kind', 'data'))
                ok, message, eval_stats = self.evaluator.evaluate(
                    config.models.corpus, config.models.vocab, [(setting, str(hyp_path))])
                if not ok:
                    raise _CellFailed(setting, message, eval_stats.get('error_kind', 'data'))

                shortfall[setting] = decode_stats['perturbation_shortfall']
                report = eval_stats['reports'][setting]
                row = [kind, setting, config.mode] + [_fmt(report[k]) for k in
                                                      ('wer', 'wert', 'tag_precision', 'tag_recall')]
                rows.append(row)
                x = str(cell) if kind != 'alpha-beta' else f'{cell[0]}:{cell[1]}'
                curve.append((x, _fmt(report['wert'])))
                self._flush(rows, curve, out_path)
                stats['cells'] += 1
                stats['rows'].append(row)

            self.config_service.write_manifest(out_path, {'kind': kind, 'grid': list(grid),
                                                          'base': base.to_dict()},
                                               {'vocab': base.models.vocab, 'corpus': base.models.corpus,
                                                'e2e': base.models.e2e, 'id_lm': base.models.id_lm,
                                                'name_pool': base.models.name_pool},
                                               base.seed,
                                               extra={'perturbation_shortfall': shortfall})
            message = f"Sweep completed: {stats['cells']} cell(s) written to {out_path}"
            self.logger.info(message)
            return True, message, stats

        except _CellFailed as e:
            stats['error_kind'] = e.kind
            error_msg = f"Sweep aborted at cell {e.setting}: {e.message} ({stats['cells']} cell(s) kept)"
            self.logger.error(error_msg)
            return False, error_msg, stats
        except CdrError as e:
            stats['error_kind'] = error_kind(e)
            error_msg = f"Sweep failed: {e} ({stats['cells']} cell(s) kept)"
            self.logger.error(error_msg)
            return False, error_msg, stats


class _CellFailed(Exception):
    def __init__(self, setting: str, message: str, kind: str = 'data'):
        super().__init__(message)
        self.setting = setting
        self.message = message
        self.kind = kind


def _fmt(value) -> str:
    return 'n.a.' if value is None else f'{value:.2f}'
