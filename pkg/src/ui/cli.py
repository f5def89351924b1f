"""
Command-line front end: cdr synth|train-lm|tag|decode|eval|sweep
"""
import argparse
import sys
from typing import List, Optional

from .. import __version__
from ..controllers.decode_controller import DecodeController
from ..controllers.eval_controller import EvalController
from ..controllers.sweep_controller import SweepController, parse_grid
from ..controllers.synth_controller import SynthController
from ..controllers.tag_controller import TagController
from ..controllers.train_lm_controller import TrainLMController
from ..services.config_service import ConfigService
from ..utils.errors import CdrError, ConfigError, error_kind
from ..utils.logger import setup_logger

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

_EXIT_CODES = {'usage': EXIT_USAGE, 'data': EXIT_DATA, 'internal': EXIT_INTERNAL}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; usage errors here exit with 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_model_flags(parser):
    group = parser.add_argument_group('models')
    group.add_argument('--vocab', help='vocabulary file')
    group.add_argument('--corpus', help='reference corpus (JSON lines)')
    group.add_argument('--names', help='companion per-conversation name file')
    group.add_argument('--e2e', help='E2E emulator file')
    group.add_argument('--id-lm', help='ID language model (ARPA)')
    group.add_argument('--name-pool', help='name pool for distractors and adversarial names')


def _add_experiment_flags(parser):
    group = parser.add_argument_group('experiment')
    group.add_argument('--mode', choices=['plain', 'sf', 'dr', 'csf', 'cdr'])
    group.add_argument('--alpha', type=float, help='ID LM weight (default 1.0)')
    group.add_argument('--beta', type=float, help='biasing LM weight (default 1.0)')
    group.add_argument('--beam-width', type=int)
    group.add_argument('--max-len', type=int)
    group.add_argument('--length-norm', choices=['none', 'divide-by-length'])
    group.add_argument('--no-constraints', action='store_true', help='disable tag grammar masking')
    group.add_argument('--lm-scope', choices=['per-utterance-oracle', 'per-conversation', 'global'])
    group.add_argument('--mu', type=float, help='name model weight in the NE LM (default 0.9)')
    group.add_argument('--ne-order', type=int)
    group.add_argument('--perturb', choices=['none', 'distractor', 'adversarial'])
    group.add_argument('--perturb-count', type=int)
    group.add_argument('--perturb-distance', type=int)
    group.add_argument('--workers', type=int)
    group.add_argument('--seed', type=int, help='falls back to $CDR_SEED, then 0')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='cdr', description='Contextual density ratio decoding toolkit')
    parser.add_argument('--version', action='version', version=f'cdr {__version__}')
    parser.add_argument('--config', help='YAML or JSON configuration file')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True

    p = sub.add_parser('synth', help='generate the synthetic task')
    p.add_argument('--out-dir', required=True)
    p.add_argument('--n-conversations', type=int)
    p.add_argument('--utterances-per-conversation', type=int)
    p.add_argument('--fraction-with-names', type=float)
    p.add_argument('--rho', type=float, help='substitution rate of the acoustic channel')
    p.add_argument('--tag-rho', type=float, help='rate at which the channel drops the tags of a span')
    p.add_argument('--variant-rate', type=float,
                   help='share of test names trained with a confusable surname')
    p.add_argument('--name-pool')
    p.add_argument('--train-utterances', type=int)
    p.add_argument('--seed', type=int)

    p = sub.add_parser('train-lm', help='train an n-gram LM on a text corpus')
    p.add_argument('--text', required=True, help='one tagged transcript per line')
    p.add_argument('--vocab', required=True)
    p.add_argument('--order', type=int, default=3)
    p.add_argument('--smoothing', choices=['witten-bell', 'add-k'], default='witten-bell')
    p.add_argument('--k', type=float, default=0.0)
    p.add_argument('--out', required=True)

    p = sub.add_parser('tag', help='tag names in a corpus by name-list intersection')
    p.add_argument('--corpus', required=True)
    p.add_argument('--vocab', required=True)
    p.add_argument('--name-list', required=True, help='one name per line')
    p.add_argument('--out', required=True)
    p.add_argument('--out-names', help='per-conversation names found')
    p.add_argument('--allow-unk', action='store_true')

    p = sub.add_parser('decode', help='decode a corpus with a fused scorer')
    _add_model_flags(p)
    _add_experiment_flags(p)
    p.add_argument('--nbest', type=int, help='write the K best finished hypotheses')
    p.add_argument('--explain', action='store_true', help='add the score decomposition')
    p.add_argument('--out', required=True)

    p = sub.add_parser('eval', help='score hypothesis files')
    p.add_argument('--corpus', required=True)
    p.add_argument('--vocab', required=True)
    p.add_argument('--hyp', action='append', required=True, metavar='[SYSTEM=]PATH')
    p.add_argument('--exact-spans', action='store_true', help='exact-boundary span matching')
    p.add_argument('--out', required=True)

    p = sub.add_parser('sweep', help='decode and evaluate over a grid')
    _add_model_flags(p)
    _add_experiment_flags(p)
    p.add_argument('--kind', required=True, choices=['distractors', 'adversarial', 'mu', 'alpha-beta'])
    p.add_argument('--grid', help='comma-separated cells; alpha-beta cells as alpha:beta')
    p.add_argument('--work-dir')
    p.add_argument('--out', required=True)
    return parser


def _experiment_overrides(args) -> dict:
    overrides = {
        'mode': args.mode,
        'alpha': args.alpha,
        'beta': args.beta,
        'beam_width': args.beam_width,
        'max_len': args.max_len,
        'length_norm': args.length_norm,
        'constraints': False if args.no_constraints else None,
        'lm_scope': args.lm_scope,
        'mu': args.mu,
        'ne_order': args.ne_order,
        'workers': args.workers,
        'seed': args.seed,
        'nbest': getattr(args, 'nbest', None),
        'models': {
            'vocab': args.vocab,
            'corpus': args.corpus,
            'names': args.names,
            'e2e': args.e2e,
            'id_lm': args.id_lm,
            'name_pool': args.name_pool
        }
    }
    if args.perturb is not None:
        overrides['perturbation'] = {
            'kind': args.perturb,
            'count': args.perturb_count,
            'distance': args.perturb_distance
        }
    return overrides


def _systems(args: List[str]):
    systems = []
    for arg in args:
        name, sep, path = arg.partition('=')
        if not sep:
            name, path = arg, arg
        systems.append((name, path))
    return systems


def _dispatch(args, config_service: ConfigService):
    if args.command == 'synth':
        spec = config_service.synth({
            'n_conversations': args.n_conversations,
            'utterances_per_conversation': args.utterances_per_conversation,
            'fraction_with_names': args.fraction_with_names,
            'rho': args.rho,
            'tag_rho': args.tag_rho,
            'variant_rate': args.variant_rate,
            'name_pool': args.name_pool,
            'train_utterances': args.train_utterances,
            'seed': args.seed
        })
        return SynthController(config_service).synth(spec, args.out_dir)
    if args.command == 'train-lm':
        return TrainLMController(config_service).train(args.text, args.vocab, args.out,
                                                       order=args.order, smoothing=args.smoothing,
                                                       k=args.k)
    if args.command == 'tag':
        return TagController(config_service).tag(args.corpus, args.vocab, args.name_list, args.out,
                                                 args.out_names, allow_unk=args.allow_unk)
    if args.command == 'decode':
        config = config_service.experiment(_experiment_overrides(args))
        return DecodeController(config_service).decode(config, args.out, explain=args.explain)
    if args.command == 'eval':
        return EvalController(config_service).evaluate(args.corpus, args.vocab, _systems(args.hyp),
                                                       args.out, exact_spans=args.exact_spans)
    config = config_service.experiment(_experiment_overrides(args))
    grid = parse_grid(args.kind, args.grid)
    return SweepController(config_service).sweep(config, args.kind, grid, args.out,
                                                 work_dir=args.work_dir)


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logger = setup_logger('cli')
    try:
        config_service = ConfigService(args.config)
        success, message, stats = _dispatch(args, config_service)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except CdrError as e:
        logger.error(str(e))
        return _EXIT_CODES[error_kind(e)]
    except Exception:
        logger.exception(f"Internal error in {args.command}")
        return EXIT_INTERNAL

    print(message)
    if success:
        return EXIT_OK
    return _EXIT_CODES.get(stats.get('error_kind'), EXIT_INTERNAL)
