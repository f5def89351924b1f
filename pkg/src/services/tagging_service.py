"""
Tagging service: name-list tag insertion, per-conversation names, NE LMs
and name-list perturbation
"""
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import Levenshtein
import numpy as np

from ..models.name_list import NameList, normalize_name
from ..models.ngram_lm import LanguageModel
from ..models.vocab import NE_CLOSE, NE_OPEN, Vocab
from ..utils.errors import DataError, PoolError
from ..utils.logger import setup_logger
from ..utils.tags import span_contents
from .lm_service import interpolate, train_ngram

ADVERSARIAL_DISTANCES = (1, 2, 4)

logger = setup_logger('tagging')


def insert_tags(tokens: Sequence[str], names: Iterable[Sequence[str]]) -> List[str]:
    """
    Wrap every name occurrence in <ne> ... </ne>

    Greedy leftmost-longest: scanning left to right, the longest name
    starting at the current token wins and the scan resumes after it.
    Matching ignores case; the output keeps the input tokens.
    """
    by_first: Dict[str, List[Tuple[str, ...]]] = {}
    for name in {normalize_name(n) for n in names if n}:
        by_first.setdefault(name[0], []).append(name)
    for candidates in by_first.values():
        candidates.sort(key=lambda n: (-len(n), n))

    lowered = [t.lower() for t in tokens]
    out: List[str] = []
    i = 0
    while i < len(tokens):
        for name in by_first.get(lowered[i], ()):
            if tuple(lowered[i:i + len(name)]) == name:
                out.append(NE_OPEN)
                out.extend(tokens[i:i + len(name)])
                out.append(NE_CLOSE)
                i += len(name)
                break
        else:
            out.append(tokens[i])
            i += 1
    return out


def extract_conv_names(references: Iterable[Sequence[str]]) -> NameList:
    """Distinct span contents over a conversation's tagged references"""
    names = []
    for reference in references:
        names.extend(span_contents(reference))
    return NameList(tuple(names), provenance='true')


def levenshtein(a: str, b: str) -> int:
    return Levenshtein.distance(a, b)


def name_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Character edit distance between space-joined lowercase names"""
    return Levenshtein.distance(' '.join(a).lower(), ' '.join(b).lower())


def _exclude(pool: Iterable[Sequence[str]], truenames: Iterable[Sequence[str]]) -> List[Tuple[str, ...]]:
    excluded = {normalize_name(n) for n in truenames}
    seen = set()
    kept = []
    for name in pool:
        key = normalize_name(name)
        if key not in excluded and key not in seen:
            seen.add(key)
            kept.append(tuple(name))
    return kept


def sample_distractors(pool: Sequence[Sequence[str]], truenames: Iterable[Sequence[str]],
                       count: int, seed: int) -> NameList:
    """
    Uniform sample without replacement from the pool minus the true names

    For a fixed seed, a smaller count gives a prefix of a larger one, so
    distractor sweeps only ever add names.

    Raises:
        PoolError: If fewer than count names remain
    """
    if count < 0:
        raise DataError(f"distractor count must be >= 0, got {count}")
    if count == 0:
        return NameList((), provenance='distractor')
    candidates = _exclude(pool, truenames)
    if len(candidates) < count:
        raise PoolError(f"name pool has {len(candidates)} usable names, {count} requested")
    rng = np.random.default_rng(seed)
    picks = rng.permutation(len(candidates))[:count]
    return NameList(tuple(candidates[i] for i in picks), provenance='distractor')


def adversarial_candidates(pool: Sequence[Sequence[str]]) -> List[Tuple[str, ...]]:
    """
    Pool names plus first-name x surname recombinations and single components,
    sorted for reproducible sampling
    """
    firsts = sorted({n[0] for n in pool if len(n) >= 2})
    lasts = sorted({n[-1] for n in pool if len(n) >= 2})
    candidates = {tuple(n) for n in pool}
    candidates.update((f, s) for f in firsts for s in lasts)
    candidates.update((part,) for n in pool for part in n)
    return sorted(candidates)


def sample_adversarial(pool: Sequence[Sequence[str]], truenames: Sequence[Sequence[str]], d: int,
                       count: int = 16, seed: int = 0,
                       candidates: Optional[Sequence[Tuple[str, ...]]] = None) -> NameList:
    """
    Sample names whose distance to the nearest true name is exactly d

    When fewer than count candidates lie at distance d, all of them are
    returned in a flagged list whose shortfall counts the missing names.

    Args:
        pool: Name pool
        truenames: Names of the conversation
        d: Target character distance
        count: Names to draw
        seed: RNG seed
        candidates: Precomputed adversarial_candidates(pool)

    Returns:
        NameList; empty and flagged when no candidate lies at distance d
    """
    if not truenames:
        raise DataError("adversarial sampling needs at least one true name")
    if candidates is None:
        candidates = adversarial_candidates(pool)
    joined_true = [' '.join(t).lower() for t in truenames]
    exact = [name for name in _exclude(candidates, truenames)
             if min(Levenshtein.distance(' '.join(name).lower(), t) for t in joined_true) == d]

    if len(exact) < count:
        logger.warning(f"Only {len(exact)} adversarial name(s) at distance {d} from {joined_true}, "
                       f"{count} requested")
        return NameList(tuple(exact), provenance='adversarial', distance=d, flagged=True,
                        shortfall=count - len(exact))
    picks = np.random.default_rng(seed).choice(len(exact), size=count, replace=False)
    return NameList(tuple(exact[i] for i in picks), provenance='adversarial', distance=d)


def build_ne_lm(names: NameList, vocab: Vocab, id_lm: LanguageModel, order: int = 4,
                mu: float = 0.9, smoothing: str = 'add-k', k: float = 0.0) -> LanguageModel:
    """
    NE LM: an n-gram over <ne> name </ne> sequences interpolated with the ID LM

    Args:
        names: Biasing names
        vocab: Vocabulary
        id_lm: In-domain LM (the interpolation partner)
        order: Name model order
        mu: Weight of the name model
        smoothing: Name model smoothing; add-k with k=0 keeps it a count ratio
        k: Add-k constant

    Returns:
        Interpolated scorer mu * q_names + (1 - mu) * p_ID
    """
    if not len(names):
        raise DataError("cannot build an NE LM from an empty name list")
    sequences = [(vocab.ne_open,) + vocab.encode(name) + (vocab.ne_close,) for name in names]
    name_lm = train_ngram(sequences, vocab, order=order, smoothing=smoothing, k=k,
                          floor_logprob=id_lm.floor_logprob)
    return interpolate(name_lm, id_lm, mu)
