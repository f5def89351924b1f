"""
Named-entity tag utilities

Work on any token sequence (strings or ids); pass the tag values used by
that sequence through open_tag / close_tag.
"""
from typing import Hashable, List, Sequence, Tuple

from ..models.span import Span
from ..models.vocab import NE_CLOSE, NE_OPEN
from .errors import TagError


def extract_spans(seq: Sequence[Hashable], open_tag=NE_OPEN, close_tag=NE_CLOSE) -> List[Span]:
    """
    Locate every <ne> ... </ne> pair

    Args:
        seq: Token sequence with inline tags
        open_tag: Value of the opening tag in seq
        close_tag: Value of the closing tag in seq

    Returns:
        Spans in left-to-right order

    Raises:
        TagError: On nested or unbalanced tags
    """
    spans = []
    begin = None
    for position, token in enumerate(seq):
        if token == open_tag:
            if begin is not None:
                raise TagError(f"nested {NE_OPEN} at position {position} (open since {begin})")
            begin = position
        elif token == close_tag:
            if begin is None:
                raise TagError(f"{NE_CLOSE} without matching {NE_OPEN} at position {position}")
            spans.append(Span(begin, position))
            begin = None
    if begin is not None:
        raise TagError(f"unclosed {NE_OPEN} at position {begin}")
    return spans


def strip_tags(seq: Sequence[Hashable], open_tag=NE_OPEN,
               close_tag=NE_CLOSE) -> Tuple[List[Hashable], List[Tuple[int, int]]]:
    """
    Remove tags, remembering where span contents ended up

    Returns:
        (stripped sequence, half-open word ranges of former span contents)
    """
    spans = extract_spans(seq, open_tag, close_tag)
    stripped = [t for t in seq if t != open_tag and t != close_tag]

    ranges = []
    for n, span in enumerate(spans):
        # each earlier span removed two tags, plus this span's own <ne>
        start = span.begin - 2 * n
        ranges.append((start, start + (span.end - span.begin - 1)))
    return stripped, ranges


def restore_tags(stripped: Sequence[Hashable], ranges: Sequence[Tuple[int, int]],
                 open_tag=NE_OPEN, close_tag=NE_CLOSE) -> List[Hashable]:
    """Inverse of strip_tags"""
    out = []
    cursor = 0
    for start, end in ranges:
        out.extend(stripped[cursor:start])
        out.append(open_tag)
        out.extend(stripped[start:end])
        out.append(close_tag)
        cursor = end
    out.extend(stripped[cursor:])
    return out


def span_contents(seq: Sequence[Hashable], open_tag=NE_OPEN, close_tag=NE_CLOSE) -> List[Tuple]:
    """Token tuples found between each tag pair"""
    return [tuple(seq[s.begin + 1:s.end]) for s in extract_spans(seq, open_tag, close_tag)]
