"""
Fused scorers: plain E2E, shallow fusion, density ratio and their
span-gated (contextual) variants
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..models.decode_config import FusionConfig
from ..models.hypothesis import SpanTracker
from ..models.ngram_lm import LanguageModel, LMState
from ..models.vocab import Vocab
from ..utils.errors import ConfigError, DataError, StaleStateError
from .e2e_service import E2EModel, E2EState


@dataclass(frozen=True)
class FusionState:
    """Component states of one hypothesis; copying the reference forks it"""
    e2e: E2EState
    id_lm: Optional[LMState]
    bias: Optional[LMState]  # NE LM inside a span for csf/cdr, whole-utterance LM for sf/dr
    tracker: SpanTracker


@dataclass(frozen=True)
class ScoreDecomposition:
    e2e: float
    bias: float
    id_lm: float
    total: float

    def to_dict(self):
        return {'e2e': self.e2e, 'bias': self.bias, 'id': self.id_lm, 'total': self.total}


def fuse_dr(e2e_row: np.ndarray, id_row: np.ndarray, ood_row: np.ndarray,
            alpha: float, beta: float) -> np.ndarray:
    """Elementwise log p_e2e - alpha * log p_ID + beta * log q_OOD"""
    if not (len(e2e_row) == len(id_row) == len(ood_row)):
        raise DataError(f"row length mismatch: {len(e2e_row)}, {len(id_row)}, {len(ood_row)}")
    return e2e_row + beta * ood_row - alpha * id_row


def fuse_contextual(e2e_row: np.ndarray, id_row: Optional[np.ndarray], ne_row: np.ndarray,
                    tracker: SpanTracker, token: int, alpha: float, beta: float,
                    mode: str) -> float:
    """
    Score of one token under span-gated fusion

    Inside an open span every token but the opening tag itself gets
    beta * log q_NE (and - alpha * log p_ID for cdr); everything else is
    scored by the E2E model alone.
    """
    if mode not in ('csf', 'cdr'):
        raise ConfigError(f"contextual fusion needs mode csf or cdr, got {mode!r}")
    score = float(e2e_row[token])
    if not tracker.open or token == tracker.ne_open:
        return score
    score = score + beta * float(ne_row[token])
    if mode == 'cdr':
        score = score - alpha * float(id_row[token])
    return score


def contextual_row(e2e_row: np.ndarray, id_row: Optional[np.ndarray], ne_row: Optional[np.ndarray],
                   tracker: SpanTracker, alpha: float, beta: float, mode: str) -> np.ndarray:
    """fuse_contextual for every token at once"""
    if not tracker.open:
        return e2e_row
    row = e2e_row + beta * ne_row
    if mode == 'cdr':
        row = row - alpha * id_row
    row[tracker.ne_open] = e2e_row[tracker.ne_open]
    return row


class FusionScorer:
    """
    Autoregressive scorer combining an E2E emulator with optional ID and
    biasing LMs according to a FusionConfig

    The ID LM consumes every token, tags included. For csf/cdr the biasing
    LM is the NE LM: it restarts from <ne> at each span opening and is
    dropped again once </ne> is consumed.
    """

    def __init__(self, e2e: E2EModel, config: FusionConfig,
                 id_lm: Optional[LanguageModel] = None,
                 bias_lm: Optional[LanguageModel] = None):
        """
        Initialize fusion scorer

        Args:
            e2e: E2E emulator
            config: Mode and weights
            id_lm: In-domain LM, required by dr and cdr
            bias_lm: OOD LM for sf/dr, NE LM for csf/cdr
        """
        if config.uses_id and id_lm is None:
            raise ConfigError(f"mode {config.mode} needs an ID language model")
        if config.uses_bias and bias_lm is None:
            raise ConfigError(f"mode {config.mode} needs a biasing language model")
        size = len(e2e.vocab)
        for lm in (id_lm, bias_lm):
            if lm is not None and lm.vocab_size != size:
                raise ConfigError(f"LM vocabulary size {lm.vocab_size} does not match {size}")
        self.e2e = e2e
        self.config = config
        self.vocab: Vocab = e2e.vocab
        self.id_lm = id_lm if config.uses_id else None
        self.bias_lm = bias_lm if config.uses_bias else None

    @property
    def mode(self) -> str:
        return self.config.mode

    @property
    def nonpositive(self) -> bool:
        """No token score is positive, so a hypothesis score never grows"""
        return self.config.nonpositive

    def init(self, observation: str) -> FusionState:
        bias = None
        if self.bias_lm is not None and not self.config.contextual:
            bias = self.bias_lm.initial_state()
        return FusionState(
            e2e=self.e2e.init(observation),
            id_lm=self.id_lm.initial_state() if self.id_lm is not None else None,
            bias=bias,
            tracker=SpanTracker.for_vocab(self.vocab)
        )

    def step(self, state: FusionState, token: int) -> FusionState:
        vocab = self.vocab
        bias = state.bias
        if self.bias_lm is not None:
            if not self.config.contextual:
                bias = self.bias_lm.advance(bias, token)
            elif token == vocab.ne_open:
                bias = self.bias_lm.advance(self.bias_lm.initial_state(), token)
            elif state.tracker.open and token != vocab.ne_close:
                bias = self.bias_lm.advance(bias, token)
            else:
                bias = None
        return FusionState(
            e2e=self.e2e.step(state.e2e, token),
            id_lm=self.id_lm.advance(state.id_lm, token) if self.id_lm is not None else None,
            bias=bias,
            tracker=state.tracker.consume(token)
        )

    def row(self, state: FusionState) -> np.ndarray:
        """Fused score of every next token (not normalized outside plain mode)"""
        config = self.config
        e2e_row = self.e2e.row(state.e2e)
        if config.mode == 'plain':
            return e2e_row
        if config.mode == 'sf':
            return e2e_row + config.beta * self.bias_lm.row(state.bias)
        if config.mode == 'dr':
            return fuse_dr(e2e_row, self.id_lm.row(state.id_lm), self.bias_lm.row(state.bias),
                           config.alpha, config.beta)

        if not state.tracker.open:
            return e2e_row
        if state.bias is None:
            raise StaleStateError("open span without an NE LM state")
        id_row = self.id_lm.row(state.id_lm) if config.mode == 'cdr' else None
        return contextual_row(e2e_row, id_row, self.bias_lm.row(state.bias), state.tracker,
                              config.alpha, config.beta, config.mode)

    def decompose(self, observation: str, tokens: Sequence[int],
                  include_eos: bool = True) -> ScoreDecomposition:
        """
        Recompute a hypothesis score from the component models alone

        Returns the summed E2E, biasing and ID log-probabilities over the
        positions where each term applies, plus their weighted total.
        """
        config = self.config
        vocab = self.vocab
        sequence = list(tokens) + ([vocab.eos] if include_eos else [])

        e2e_state = self.e2e.init(observation)
        id_state = self.id_lm.initial_state() if self.id_lm is not None else None
        bias_state = self.bias_lm.initial_state() if self.bias_lm is not None else None
        tracker = SpanTracker.for_vocab(vocab)
        e2e_sum = bias_sum = id_sum = 0.0

        for token in sequence:
            e2e_sum += float(self.e2e.row(e2e_state)[token])
            if config.contextual:
                scored = tracker.open and token != vocab.ne_open
            else:
                scored = config.mode != 'plain'
            if scored:
                bias_sum += self.bias_lm.logprob(bias_state, token)
                if config.uses_id:
                    id_sum += self.id_lm.logprob(id_state, token)

            if token == vocab.eos:
                break
            e2e_state = self.e2e.step(e2e_state, token)
            if id_state is not None:
                id_state = self.id_lm.advance(id_state, token)
            if bias_state is not None:
                if config.contextual and token == vocab.ne_open:
                    bias_state = self.bias_lm.advance(self.bias_lm.initial_state(), token)
                elif not config.contextual or tracker.open:
                    bias_state = self.bias_lm.advance(bias_state, token)
            tracker = tracker.consume(token)

        total = e2e_sum
        if config.mode != 'plain':
            total = total + config.beta * bias_sum
        if config.uses_id:
            total = total - config.alpha * id_sum
        return ScoreDecomposition(e2e=e2e_sum, bias=bias_sum, id_lm=id_sum, total=total)


def decompose_score(scorer: FusionScorer, observation: str, tokens: Sequence[int],
                    include_eos: bool = True) -> ScoreDecomposition:
    return scorer.decompose(observation, tokens, include_eos=include_eos)
