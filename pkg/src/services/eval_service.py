"""
Evaluation service: alignment, WER, WERT and tag precision/recall
"""
import json
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from ..models.eval_report import (OP_DELETE, OP_INSERT, OP_MATCH, OP_SUBSTITUTE, AlignOp,
                                  Alignment, EvalCounts, EvalReport, TagPRF)
from ..models.span import Span
from ..models.vocab import NE_CLOSE, NE_OPEN
from ..utils.files import atomic_write_text
from ..utils.logger import setup_logger
from ..utils.tags import extract_spans, strip_tags

REPORT_COLUMNS = ('system', 'WER', 'WERT', 'tag_P', 'tag_R')


def _edit_matrix(ref: Sequence[Hashable], hyp: Sequence[Hashable]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    ids: Dict[Hashable, int] = {}
    r = np.array([ids.setdefault(t, len(ids)) for t in ref], dtype=np.int64)
    h = np.array([ids.setdefault(t, len(ids)) for t in hyp], dtype=np.int64)
    n, m = len(r), len(h)
    cols = np.arange(m + 1)
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[0] = cols
    for i in range(1, n + 1):
        # best of diagonal and vertical moves, then a running min for horizontal ones
        step = np.empty(m + 1, dtype=np.int64)
        step[0] = i
        step[1:] = np.minimum(dist[i - 1, :-1] + (h != r[i - 1]), dist[i - 1, 1:] + 1)
        dist[i] = np.minimum.accumulate(step - cols) + cols
    return dist, r, h


def align(ref: Sequence[Hashable], hyp: Sequence[Hashable]) -> Alignment:
    """
    Minimal unit-cost alignment

    Traceback from the end prefers match, then substitution, deletion and
    insertion, so the result is deterministic.
    """
    dist, r, h = _edit_matrix(ref, hyp)
    i, j = len(r), len(h)
    ops: List[AlignOp] = []
    while i > 0 or j > 0:
        here = dist[i, j]
        if i > 0 and j > 0 and r[i - 1] == h[j - 1] and here == dist[i - 1, j - 1]:
            ops.append(AlignOp(OP_MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and here == dist[i - 1, j - 1] + 1:
            ops.append(AlignOp(OP_SUBSTITUTE, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and here == dist[i - 1, j] + 1:
            ops.append(AlignOp(OP_DELETE, i - 1, None))
            i -= 1
        else:
            ops.append(AlignOp(OP_INSERT, None, j - 1))
            j -= 1
    ops.reverse()
    return Alignment(tuple(ops))


def edit_distance(ref: Sequence[Hashable], hyp: Sequence[Hashable]) -> int:
    dist, _, _ = _edit_matrix(ref, hyp)
    return int(dist[-1, -1])


def wer(ref: Sequence[Hashable], hyp: Sequence[Hashable], open_tag=NE_OPEN,
        close_tag=NE_CLOSE) -> Optional[float]:
    """Percent word error on tag-stripped sequences; None for an empty reference with output"""
    ref_words, _ = strip_tags(ref, open_tag, close_tag)
    hyp_words, _ = strip_tags(hyp, open_tag, close_tag)
    if not ref_words:
        return 0.0 if not hyp_words else None
    return 100.0 * edit_distance(ref_words, hyp_words) / len(ref_words)


def _inside(spans: Sequence[Span], index: int) -> Optional[Span]:
    for span in spans:
        if span.contains(index):
            return span
    return None


def wert_counts(ref: Sequence[Hashable], alignment: Alignment,
                ref_spans: Sequence[Span]) -> Tuple[int, int]:
    """
    (in-tag errors, in-tag reference words) over a tag-inclusive alignment

    Substitutions and deletions count when their reference index lies
    strictly inside a span. An insertion counts only when the reference
    positions aligned on both of its sides lie strictly inside the same span.
    """
    words = sum(s.end - s.begin - 1 for s in ref_spans)
    ops = alignment.ops
    errors = 0
    for n, op in enumerate(ops):
        if op.kind in (OP_SUBSTITUTE, OP_DELETE):
            if _inside(ref_spans, op.ref_index) is not None:
                errors += 1
        elif op.kind == OP_INSERT:
            left = next((o.ref_index for o in reversed(ops[:n]) if o.ref_index is not None), -1)
            right = next((o.ref_index for o in ops[n + 1:] if o.ref_index is not None), len(ref))
            span = _inside(ref_spans, left)
            if span is not None and span is _inside(ref_spans, right):
                errors += 1
    return errors, words


def wert(ref: Sequence[Hashable], hyp: Sequence[Hashable], open_tag=NE_OPEN,
         close_tag=NE_CLOSE) -> Optional[float]:
    """Percent word error within reference tags; None when the reference has no span"""
    ref_spans = extract_spans(ref, open_tag, close_tag)
    extract_spans(hyp, open_tag, close_tag)
    errors, words = wert_counts(ref, align(ref, hyp), ref_spans)
    if words == 0:
        return None
    return 100.0 * errors / words


def tag_prf(ref_spans: Sequence[Span], hyp_spans: Sequence[Span], alignment: Alignment,
            exact: bool = False) -> TagPRF:
    """
    Span detection counts

    Each hypothesis span is projected onto the reference through the
    matched and substituted positions of the alignment. Pairs are matched
    one-to-one, largest projected overlap first; a pair with at least one
    overlapping word is a hit. With exact=True a hit instead needs both
    tags aligned as matches onto the reference span's tags.
    """
    hyp_to_ref = {op.hyp_index: op.ref_index for op in alignment.ops
                  if op.kind in (OP_MATCH, OP_SUBSTITUTE)}
    matched = {op.hyp_index: op.ref_index for op in alignment.ops if op.kind == OP_MATCH}

    pairs = []
    for h, hs in enumerate(hyp_spans):
        if exact:
            for r, rs in enumerate(ref_spans):
                if matched.get(hs.begin) == rs.begin and matched.get(hs.end) == rs.end:
                    pairs.append((1, r, h))
            continue
        projected = {hyp_to_ref[i] for i in hs.interior() if i in hyp_to_ref}
        for r, rs in enumerate(ref_spans):
            overlap = sum(1 for i in rs.interior() if i in projected)
            if overlap >= 1:
                pairs.append((overlap, r, h))

    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    used_ref, used_hyp = set(), set()
    for _, r, h in pairs:
        if r not in used_ref and h not in used_hyp:
            used_ref.add(r)
            used_hyp.add(h)
    return TagPRF(tp=len(used_ref), predicted=len(hyp_spans), reference=len(ref_spans))


def utterance_counts(ref: Sequence[Hashable], hyp: Sequence[Hashable], open_tag=NE_OPEN,
                     close_tag=NE_CLOSE, exact_spans: bool = False) -> EvalCounts:
    """Every count of one utterance pair"""
    ref_spans = extract_spans(ref, open_tag, close_tag)
    hyp_spans = extract_spans(hyp, open_tag, close_tag)
    ref_words, _ = strip_tags(ref, open_tag, close_tag)
    hyp_words, _ = strip_tags(hyp, open_tag, close_tag)

    counts = EvalCounts(utterances=1)
    if ref_words or not hyp_words:
        plain = align(ref_words, hyp_words)
        counts.ref_words = len(ref_words)
        counts.substitutions = plain.count(OP_SUBSTITUTE)
        counts.deletions = plain.count(OP_DELETE)
        counts.insertions = plain.count(OP_INSERT)
        counts.errors = plain.cost
    else:
        counts.undefined_wer = 1

    tagged = align(ref, hyp)
    counts.in_tag_errors, counts.in_tag_words = wert_counts(ref, tagged, ref_spans)
    tags = tag_prf(ref_spans, hyp_spans, tagged, exact=exact_spans)
    counts.ref_spans = tags.reference
    counts.hyp_spans = tags.predicted
    counts.tag_tp = tags.tp
    return counts


class EvalService:
    """Scores hypothesis sets against a reference corpus"""

    def __init__(self, exact_spans: bool = False):
        self.logger = setup_logger('eval')
        self.exact_spans = exact_spans

    def evaluate(self, system: str, pairs: Sequence[Tuple[Sequence[str], Sequence[str]]]) -> EvalReport:
        """
        Aggregate counts over (reference, hypothesis) token sequences

        Corpus rates are computed from summed counts.
        """
        counts = EvalCounts()
        for ref, hyp in pairs:
            counts = counts + utterance_counts(ref, hyp, exact_spans=self.exact_spans)
        if counts.undefined_wer:
            self.logger.warning(f"{system}: {counts.undefined_wer} utterance(s) with empty reference "
                                f"and non-empty hypothesis excluded from WER")
        report = EvalReport(system=system, counts=counts, exact_spans=self.exact_spans)
        self.logger.info(f"{system}: WER {_show(report.wer)} WERT {_show(report.wert)} "
                         f"over {counts.utterances} utterance(s)")
        return report

    def write_reports(self, reports: Sequence[EvalReport], path):
        """TSV (system, WER, WERT, tag_P, tag_R) plus <path>.counts.json"""
        lines = ['\t'.join(REPORT_COLUMNS)]
        lines.extend('\t'.join(report.row()) for report in reports)
        atomic_write_text(path, '\n'.join(lines) + '\n')
        sidecar = {report.system: report.to_dict() for report in reports}
        atomic_write_text(f'{path}.counts.json', json.dumps(sidecar, indent=2, sort_keys=True) + '\n')
        self.logger.info(f"Wrote report for {len(reports)} system(s) to {path}")


def _show(value: Optional[float]) -> str:
    return 'n.a.' if value is None else f'{value:.2f}'
