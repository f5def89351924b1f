"""
Language model service: n-gram estimation, interpolation and ARPA I/O
"""
import math
import re
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

from ..models.ngram_lm import DEFAULT_FLOOR_LOGPROB, InterpolatedLM, LanguageModel, NGramLM
from ..models.vocab import Vocab
from ..utils.errors import ArpaError, ConfigError, DataError
from ..utils.files import atomic_write_text
from ..utils.logger import setup_logger

SMOOTHING_KINDS = ('witten-bell', 'add-k')

_FLOOR_PATTERN = re.compile(r'^#\s*floor_logprob\s*=\s*(\S+)\s*$')
_SECTION_PATTERN = re.compile(r'^\\(\d+)-grams:$')
_COUNT_PATTERN = re.compile(r'^ngram\s+(\d+)\s*=\s*(\d+)$')

logger = setup_logger('lm')


def count_ngrams(sequences: Iterable[Sequence[int]], order: int,
                 eos: int) -> Dict[Tuple[int, ...], Counter]:
    """Counts of every (context, token) event, contexts of length 0..order-1"""
    counts: Dict[Tuple[int, ...], Counter] = {}
    for seq in sequences:
        tokens = list(seq) + [eos]
        for i, token in enumerate(tokens):
            for n in range(min(i, order - 1) + 1):
                context = tuple(tokens[i - n:i])
                counts.setdefault(context, Counter())[token] += 1
    return counts


def train_ngram(sequences: Sequence[Sequence[int]], vocab: Vocab, order: int = 3,
                smoothing: str = 'witten-bell', k: float = 0.0,
                floor_logprob: float = DEFAULT_FLOOR_LOGPROB) -> NGramLM:
    """
    Estimate a backoff n-gram model; every sequence is terminated with <eos>

    Args:
        sequences: Token-id sequences
        vocab: Vocabulary (size and <eos> id)
        order: Model order, >= 1
        smoothing: 'witten-bell' or 'add-k'
        k: Additive constant for add-k; add-k with k=0 is plain MLE
        floor_logprob: Log-probability of events with no backoff path

    Returns:
        NGramLM
    """
    if order < 1:
        raise ConfigError(f"n-gram order must be >= 1, got {order}")
    if smoothing not in SMOOTHING_KINDS:
        raise ConfigError(f"unknown smoothing {smoothing!r}, expected one of {SMOOTHING_KINDS}")
    if k < 0:
        raise ConfigError(f"add-k constant must be >= 0, got {k}")
    sequences = list(sequences)
    if not sequences:
        raise DataError("empty training set")
    for seq in sequences:
        for token in seq:
            if not 0 <= token < len(vocab):
                raise DataError(f"token id {token} out of range for vocabulary of {len(vocab)}")

    counts = count_ngrams(sequences, order, vocab.eos)
    lm = NGramLM(order=order, vocab_size=len(vocab), entries={}, backoff={},
                 floor_logprob=floor_logprob)

    # lower orders first: Witten-Bell interpolates with the finished lower model
    for context in sorted(counts, key=lambda c: (len(c), c)):
        followers = counts[context]
        if smoothing == 'witten-bell':
            _witten_bell_context(lm, context, followers)
        else:
            _add_k_context(lm, context, followers, k)

    logger.info(f"Trained {order}-gram ({smoothing}) on {len(sequences)} sequence(s): "
                f"{sum(lm.num_ngrams().values())} n-grams")
    return lm


def _witten_bell_context(lm: NGramLM, context: Tuple[int, ...], followers: Counter):
    total = sum(followers.values())
    distinct = len(followers)
    lam = total / (total + distinct)

    if not context:
        uniform = (1.0 - lam) / lm.vocab_size
        lm.entries[context] = {
            w: lam * followers.get(w, 0) / total + uniform for w in range(lm.vocab_size)
        }
        return

    lower = lm.prob_row(context[1:])
    lm.entries[context] = {
        w: lam * c / total + (1.0 - lam) * float(lower[w]) for w, c in followers.items()
    }
    lm.backoff[context] = 1.0 - lam


def _add_k_context(lm: NGramLM, context: Tuple[int, ...], followers: Counter, k: float):
    total = sum(followers.values())
    if k > 0:
        denominator = total + k * lm.vocab_size
        lm.entries[context] = {w: (followers.get(w, 0) + k) / denominator
                               for w in range(lm.vocab_size)}
        return
    lm.entries[context] = {w: c / total for w, c in followers.items()}
    if context:
        # MLE leaves no mass for unseen events; keep the weight positive
        lm.backoff[context] = math.exp(lm.floor_logprob)


def interpolate(lm_a: LanguageModel, lm_b: LanguageModel, mu: float) -> InterpolatedLM:
    """Scorer returning ln(mu * p_a + (1 - mu) * p_b) per token"""
    return InterpolatedLM(lm_a=lm_a, lm_b=lm_b, mu=mu)


def serialize_arpa(lm: NGramLM, vocab: Vocab, path):
    """
    Write an ARPA-style text file

    A '# floor_logprob=' comment before \\data\\ records the floor.
    """
    if len(vocab) != lm.vocab_size:
        raise ConfigError(f"vocabulary size {len(vocab)} does not match model ({lm.vocab_size})")

    by_order: Dict[int, List[Tuple[Tuple[int, ...], float]]] = {n: [] for n in range(1, lm.order + 1)}
    for context in sorted(lm.entries, key=lambda c: (len(c), c)):
        for token in sorted(lm.entries[context]):
            by_order[len(context) + 1].append((context + (token,), lm.entries[context][token]))

    lines = [f'# floor_logprob={lm.floor_logprob!r}', '', '\\data\\']
    for n in range(1, lm.order + 1):
        lines.append(f'ngram {n}={len(by_order[n])}')
    for n in range(1, lm.order + 1):
        lines.append('')
        lines.append(f'\\{n}-grams:')
        for ngram, prob in by_order[n]:
            text = ' '.join(vocab.decode(ngram))
            line = f'{math.log10(prob):.10f}\t{text}'
            if n < lm.order:
                bow = lm.backoff.get(ngram)
                line += f'\t{math.log10(bow) if bow is not None else 0.0:.10f}'
            lines.append(line)
    lines.append('')
    lines.append('\\end\\')
    atomic_write_text(path, '\n'.join(lines) + '\n')
    logger.info(f"Wrote {lm.order}-gram model to {path}")


def parse_arpa(path, vocab: Vocab, floor_logprob: float = None) -> NGramLM:
    """
    Read an ARPA-style text file

    Args:
        path: ARPA file
        vocab: Vocabulary naming the tokens in the file
        floor_logprob: Overrides the floor recorded in the file

    Returns:
        NGramLM
    """
    path = Path(path)
    if not path.exists():
        raise ArpaError(f"ARPA file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        lines = [line.rstrip('\n') for line in f]

    recorded_floor = None
    declared: Dict[int, int] = {}
    listed: Dict[int, int] = {}
    entries: Dict[Tuple[int, ...], Dict[int, float]] = {}
    backoff: Dict[Tuple[int, ...], float] = {}
    section = 'preamble'
    current = 0

    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        where = f"{path.name}:{line_no}"
        if section == 'preamble':
            match = _FLOOR_PATTERN.match(line)
            if match:
                recorded_floor = float(match.group(1))
            elif line == '\\data\\':
                section = 'data'
            continue
        if not line:
            continue
        if line == '\\end\\':
            section = 'end'
            break
        match = _SECTION_PATTERN.match(line)
        if match:
            current = int(match.group(1))
            if current not in declared:
                raise ArpaError(f"{where}: section \\{current}-grams: not declared in \\data\\")
            if current in listed:
                raise ArpaError(f"{where}: duplicate section \\{current}-grams:")
            listed[current] = 0
            section = 'ngrams'
            continue
        if section == 'data':
            match = _COUNT_PATTERN.match(line)
            if not match:
                raise ArpaError(f"{where}: malformed header line {line!r}")
            declared[int(match.group(1))] = int(match.group(2))
            continue

        fields = raw.split('\t')
        order = max(declared) if declared else 0
        if len(fields) not in (2, 3):
            raise ArpaError(f"{where}: expected log10prob<TAB>tokens[<TAB>log10backoff]")
        try:
            log_prob = float(fields[0])
            tokens = tuple(vocab.index(t) for t in fields[1].split())
            log_bow = float(fields[2]) if len(fields) == 3 else None
        except (ValueError, DataError) as e:
            raise ArpaError(f"{where}: {e}") from None
        if len(tokens) != current:
            raise ArpaError(f"{where}: {len(tokens)} token(s) in \\{current}-grams: section")
        if log_bow is not None and current == order:
            raise ArpaError(f"{where}: backoff weight at highest order")
        entries.setdefault(tokens[:-1], {})[tokens[-1]] = 10.0 ** log_prob
        if log_bow is not None and log_bow != 0.0:
            backoff[tokens] = 10.0 ** log_bow
        listed[current] += 1

    if section != 'end':
        raise ArpaError(f"{path.name}: missing \\end\\")
    if not declared:
        raise ArpaError(f"{path.name}: no n-gram counts declared")
    for n, count in sorted(declared.items()):
        if listed.get(n, 0) != count:
            raise ArpaError(f"{path.name}: declared {count} {n}-grams, found {listed.get(n, 0)}")
    if not listed.get(1):
        raise ArpaError(f"{path.name}: empty \\1-grams: section")

    if floor_logprob is None:
        floor_logprob = recorded_floor if recorded_floor is not None else DEFAULT_FLOOR_LOGPROB
    lm = NGramLM(order=max(declared), vocab_size=len(vocab), entries=entries, backoff=backoff,
                 floor_logprob=floor_logprob)
    logger.info(f"Loaded {lm.order}-gram model from {path}")
    return lm
