"""
Beam search over a fused scorer, the exhaustive oracle and batch decoding
"""
import heapq
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..models.decode_config import DecodeConfig
from ..models.hypothesis import DecodeResult, Hypothesis, SpanTracker
from ..models.vocab import Vocab
from ..utils.errors import SearchSpaceError
from ..utils.logger import setup_logger
from .e2e_service import enumeration_size

MAX_EXHAUSTIVE = 1_000_000

logger = setup_logger('decoder')


Candidate = Tuple[float, Tuple[int, ...], Hypothesis, int]


def tag_grammar_mask(tracker: SpanTracker, row: np.ndarray, vocab: Vocab) -> np.ndarray:
    """Copy of row with the transitions that would break tag balance set to -inf"""
    masked = np.array(row, dtype=np.float64)
    if tracker.open:
        masked[vocab.ne_open] = -np.inf
        masked[vocab.eos] = -np.inf
    else:
        masked[vocab.ne_close] = -np.inf
    return masked


def _ranked_tokens(row: np.ndarray, limit: int) -> np.ndarray:
    """Finite entries of row, best first, ties by token id"""
    finite = np.flatnonzero(np.isfinite(row))
    order = np.lexsort((finite, -row[finite]))
    return finite[order[:limit]]


def _candidate_key(candidate: Candidate):
    return -candidate[0], candidate[1]


def _fill_slots(expansions: Sequence[Sequence[Candidate]], width: int) -> List[Optional[Candidate]]:
    """
    Slot j takes the best unused extension of the parents in slots 0..j

    The first k slots never depend on the later ones, so the beam of width
    k is a prefix of the beam of any larger width. A slot with no eligible
    candidate stays empty.
    """
    heap: List[Tuple[tuple, int, int]] = []
    slots: List[Optional[Candidate]] = []
    for j in range(width):
        if j < len(expansions) and expansions[j]:
            heapq.heappush(heap, (_candidate_key(expansions[j][0]), j, 0))
        if not heap:
            if j >= len(expansions):
                break
            slots.append(None)
            continue
        _, parent, rank = heapq.heappop(heap)
        slots.append(expansions[parent][rank])
        if rank + 1 < len(expansions[parent]):
            heapq.heappush(heap, (_candidate_key(expansions[parent][rank + 1]), parent, rank + 1))
    return slots


def beam_decode(scorer, observation: str, config: DecodeConfig) -> DecodeResult:
    """
    Breadth-synchronous beam search

    Every live hypothesis hands its <eos> extension to the completed pool
    and its best other extensions to the slot filling of the next step, so
    <eos> never takes a beam slot. Candidates rank by score, ties broken by
    the lexicographically smaller token sequence. Since the beam of a
    smaller width is always a prefix of a wider one, widening the beam
    never lowers the returned score. At max_len only <eos> is tried.

    Args:
        scorer: Object with vocab, nonpositive, init(observation), step(state, token), row(state)
        observation: Observation key
        config: Beam settings

    Returns:
        DecodeResult; best is flagged unfinished if nothing reached <eos>
    """
    vocab: Vocab = scorer.vocab
    eos = vocab.eos
    slots: List[Optional[Hypothesis]] = [Hypothesis(tokens=(), score=0.0,
                                                    state=scorer.init(observation))]
    frontier = [h for h in slots if h is not None]
    completed: List[Hypothesis] = []
    # dr/cdr rows can carry positive scores, so only pure log-prob modes may stop early
    early_stop = scorer.nonpositive and config.length_norm == 'none'

    for depth in range(config.max_len + 1):
        expansions: List[List[Candidate]] = []
        for hyp in slots:
            if hyp is None:
                expansions.append([])
                continue
            row = scorer.row(hyp.state)
            if config.constraints:
                row = tag_grammar_mask(hyp.tracker, row, vocab)
            if np.isfinite(row[eos]):
                completed.append(Hypothesis(tokens=hyp.tokens, score=hyp.score + float(row[eos]),
                                            state=hyp.state, finished=True))
            if depth == config.max_len:
                expansions.append([])
                continue
            row = np.array(row, dtype=np.float64)
            row[eos] = -np.inf
            expansions.append([(hyp.score + float(row[w]), hyp.tokens + (int(w),), hyp, int(w))
                               for w in _ranked_tokens(row, config.beam_width)])

        picks = _fill_slots(expansions, config.beam_width)
        if all(p is None for p in picks):
            break
        slots = [None if p is None else
                 Hypothesis(tokens=p[1], score=p[0], state=scorer.step(p[2].state, p[3]))
                 for p in picks]
        frontier = [h for h in slots if h is not None]
        if early_stop and completed:
            if max(h.score for h in frontier) <= max(h.score for h in completed):
                break

    if completed:
        nbest = sorted(completed, key=lambda h: h.sort_key(config.length_norm))
        return DecodeResult(best=nbest[0], nbest=nbest)

    best = min(frontier, key=lambda h: h.sort_key(config.length_norm))
    logger.warning(f"{observation}: no hypothesis reached <eos> within {config.max_len} tokens")
    return DecodeResult(best=best, nbest=[])


def exhaustive_decode(scorer, observation: str, max_len: int, constraints: bool = True,
                      length_norm: str = 'none') -> Hypothesis:
    """
    Exact argmax over every complete sequence up to max_len

    Scores accumulate in the same order as beam_decode, so a beam wide
    enough to keep every prefix returns the same hypothesis.
    """
    vocab: Vocab = scorer.vocab
    eos = vocab.eos
    size = enumeration_size(len(vocab) - 1, max_len)
    if size > MAX_EXHAUSTIVE:
        raise SearchSpaceError(f"{size} sequences to search, limit is {MAX_EXHAUSTIVE}")

    best: Optional[Hypothesis] = None

    def visit(state, tokens: Tuple[int, ...], score: float):
        nonlocal best
        row = scorer.row(state)
        if constraints:
            row = tag_grammar_mask(state.tracker, row, vocab)
        if np.isfinite(row[eos]):
            done = Hypothesis(tokens=tokens, score=score + float(row[eos]), state=state,
                              finished=True)
            if best is None or done.sort_key(length_norm) < best.sort_key(length_norm):
                best = done
        if len(tokens) == max_len:
            return
        for w in range(len(vocab)):
            if w != eos and np.isfinite(row[w]):
                visit(scorer.step(state, w), tokens + (w,), score + float(row[w]))

    visit(scorer.init(observation), (), 0.0)
    if best is None:
        raise SearchSpaceError(f"{observation}: no complete sequence within {max_len} tokens")
    return best


def rescore(scorer, observation: str, tokens: Sequence[int], finished: bool = True) -> float:
    """Sum of fused token scores of a transcript replayed from a fresh state"""
    state = scorer.init(observation)
    score = 0.0
    for token in tokens:
        score += float(scorer.row(state)[token])
        state = scorer.step(state, token)
    if finished:
        score += float(scorer.row(state)[scorer.vocab.eos])
    return score


def decode_batch(jobs: Sequence[Tuple[object, str]], config: DecodeConfig,
                 workers: int = 1,
                 progress: Optional[Callable[[int, int], None]] = None) -> List[DecodeResult]:
    """
    Decode (scorer, observation) pairs, results in input order

    Args:
        jobs: Scorer and observation key per utterance
        config: Beam settings
        workers: Thread count; results do not depend on it
        progress: Called with (done, total) as results arrive
    """
    total = len(jobs)

    def run(job):
        scorer, observation = job
        return beam_decode(scorer, observation, config)

    if workers <= 1:
        results = []
        for n, job in enumerate(jobs, 1):
            results.append(run(job))
            if progress:
                progress(n, total)
        return results

    results = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for n, result in enumerate(pool.map(run, jobs), 1):
            results.append(result)
            if progress:
                progress(n, total)
    return results
