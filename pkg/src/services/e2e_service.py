"""
E2E emulators: the per-step posterior p_e2e(w | prefix, x) behind the fused scorers

TabularE2E composes a per-position acoustic-evidence table with a transition
n-gram. EnumerablePosterior spells out every sequence of a tiny vocabulary so
the internal prior, the OOD prior and the exact per-step conditionals are all
known.
"""
import itertools
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import Levenshtein
import numpy as np

from ..models.ngram_lm import DEFAULT_FLOOR_LOGPROB, LanguageModel, LMState, instance_cache
from ..models.vocab import RESERVED_TOKENS, Vocab
from ..utils.errors import ConfigError, DataError, ObservationError, SearchSpaceError
from ..utils.files import atomic_write_text
from ..utils.logger import setup_logger
from ..utils.tags import extract_spans
from .lm_service import parse_arpa, train_ngram

MAX_ENUMERATION = 40_000

logger = setup_logger('e2e')


@dataclass(frozen=True)
class E2EState:
    observation: str
    position: int
    lm_state: LMState


class E2EModel(ABC):
    """Per-step posterior over the vocabulary given an observation"""
    vocab: Vocab

    @abstractmethod
    def row(self, state: E2EState) -> np.ndarray:
        """Normalized log-distribution over the next token"""

    @abstractmethod
    def has_observation(self, observation: str) -> bool:
        pass

    def init(self, observation: str) -> E2EState:
        if not self.has_observation(observation):
            raise ObservationError(f"unknown observation {observation!r}")
        return E2EState(observation, 0, LMState(()))

    def step(self, state: E2EState, token: int) -> E2EState:
        return E2EState(state.observation, state.position + 1,
                        self.history_lm.advance(state.lm_state, token))

    @property
    @abstractmethod
    def history_lm(self) -> LanguageModel:
        """Model whose state carries the prefix"""


def _log_normalize(logits: np.ndarray) -> np.ndarray:
    return logits - np.logaddexp.reduce(logits)


# ---------------------------------------------------------------------------
# Tabular emulator
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class TabularE2E(E2EModel):
    """
    p_e2e(w | prefix, x) proportional to p_tr(w | prefix) * kappa(w; x, t)

    observations maps an observation key to its (positions x vocab) table of
    log kappa. Past the last row only <eos> keeps probability mass.
    """
    vocab: Vocab
    transition: LanguageModel
    observations: Dict[str, np.ndarray]
    floor_logprob: float = DEFAULT_FLOOR_LOGPROB

    def __post_init__(self):
        for key, table in self.observations.items():
            if table.ndim != 2 or table.shape[1] != len(self.vocab):
                raise DataError(f"observation {key!r}: expected (T, {len(self.vocab)}) table, "
                                f"got {table.shape}")
        if self.transition.vocab_size != len(self.vocab):
            raise ConfigError(f"transition LM vocabulary size {self.transition.vocab_size} "
                              f"does not match {len(self.vocab)}")
        past_end = np.full(len(self.vocab), self.floor_logprob)
        past_end[self.vocab.eos] = 0.0
        past_end.setflags(write=False)
        self._past_end = past_end

    @property
    def history_lm(self) -> LanguageModel:
        return self.transition

    def has_observation(self, observation: str) -> bool:
        return observation in self.observations

    def row(self, state: E2EState) -> np.ndarray:
        table = self.observations.get(state.observation)
        if table is None:
            raise ObservationError(f"unknown observation {state.observation!r}")
        if state.position >= table.shape[0]:
            return self._past_end
        row = _log_normalize(self.transition.row(state.lm_state) + table[state.position])
        row.setflags(write=False)
        return row


def nearest_confusions(vocab: Vocab, classes: Mapping[str, Sequence[str]],
                       size: int) -> Dict[int, Tuple[int, ...]]:
    """
    Confusion set per token: the `size` nearest tokens of the same class by
    edit distance, ties broken by token id

    Args:
        vocab: Vocabulary
        classes: Class name -> member tokens (e.g. template words, name words)
        size: Confusion set size

    Returns:
        token id -> confusable token ids (never the token itself)
    """
    confusions: Dict[int, Tuple[int, ...]] = {}
    for members in classes.values():
        ids = sorted({vocab.index(t) for t in members})
        for w in ids:
            word = vocab.token(w)
            others = sorted((Levenshtein.distance(word, vocab.token(o)), o) for o in ids if o != w)
            confusions[w] = tuple(o for _, o in others[:size])
    return confusions


def _heard_tags(reference: Sequence[int], vocab: Vocab, tag_rho: float, spurious_rho: float,
                rng: np.random.Generator) -> List[int]:
    """
    Reference as the channel delivers it: each span loses both tags with
    probability tag_rho, and an utterance without spans gains one around a
    random word with probability spurious_rho
    """
    spans = extract_spans(reference, vocab.ne_open, vocab.ne_close)
    if not spans:
        if spurious_rho > 0.0 and len(reference) and rng.random() < spurious_rho:
            i = int(rng.integers(len(reference)))
            return (list(reference[:i]) + [vocab.ne_open, reference[i], vocab.ne_close]
                    + list(reference[i + 1:]))
        return list(reference)
    if tag_rho <= 0.0:
        return list(reference)
    dropped = set()
    for span in spans:
        if rng.random() < tag_rho:
            dropped.update((span.begin, span.end))
    return [token for i, token in enumerate(reference) if i not in dropped]


def channel_table(reference: Sequence[int], vocab: Vocab,
                  confusions: Mapping[int, Sequence[int]], rho: float,
                  rng: np.random.Generator,
                  floor_logprob: float = DEFAULT_FLOOR_LOGPROB,
                  tag_rho: float = 0.0, spurious_rho: float = 0.0) -> np.ndarray:
    """
    Sample a noisy observation of a tagged reference and return its log-kappa table

    Tags are first dropped or inserted as described in _heard_tags; every
    tag that remains is observed exactly. Each word is kept with probability
    1 - rho, otherwise replaced by a uniform draw from its confusion set.
    Row t then scores every candidate w by P(observed_t | w). A final row
    makes <eos> the only evidence after the last token.
    """
    for what, rate in (('substitution', rho), ('tag drop', tag_rho), ('spurious tag', spurious_rho)):
        if not 0.0 <= rate <= 1.0:
            raise ConfigError(f"{what} rate must be in [0, 1], got {rate}")

    inverse: Dict[int, List[int]] = {}
    for w, confusers in confusions.items():
        for o in confusers:
            inverse.setdefault(o, []).append(w)

    heard = _heard_tags(reference, vocab, tag_rho, spurious_rho, rng)
    tags = (vocab.ne_open, vocab.ne_close)
    table = np.full((len(heard) + 1, len(vocab)), floor_logprob)
    for t, y in enumerate(heard):
        confusers = confusions.get(y, ())
        if y in tags or not confusers or rng.random() >= rho:
            observed = y
        else:
            observed = int(confusers[rng.integers(len(confusers))])

        if y in tags:
            table[t, observed] = 0.0
            continue
        if rho < 1.0:
            table[t, observed] = np.log1p(-rho)
        if rho > 0.0:
            for w in inverse.get(observed, ()):
                table[t, w] = np.log(rho / len(confusions[w]))
    table[len(heard), vocab.eos] = 0.0
    return table


def save_tabular(e2e: TabularE2E, path, transition_path):
    """JSON lines: one {"obs", "rows"} record per observation; first line names the transition LM"""
    lines = [json.dumps({'transition_lm': str(transition_path),
                         'floor_logprob': e2e.floor_logprob})]
    for key in sorted(e2e.observations):
        lines.append(json.dumps({'obs': key, 'rows': e2e.observations[key].tolist()}))
    atomic_write_text(path, '\n'.join(lines) + '\n')
    logger.info(f"Wrote {len(e2e.observations)} observation table(s) to {path}")


def load_tabular(path, vocab: Vocab, transition: Optional[LanguageModel] = None) -> TabularE2E:
    """
    Read an emulator written by save_tabular

    Args:
        path: Emulator file
        vocab: Vocabulary of the tables
        transition: Transition LM; parsed from the recorded ARPA path if omitted
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"E2E emulator file not found: {path}")
    header = None
    observations: Dict[str, np.ndarray] = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path.name}:{line_no}: malformed record: {e}") from None
            if header is None:
                header = record
                continue
            try:
                observations[str(record['obs'])] = np.asarray(record['rows'], dtype=np.float64)
            except KeyError as e:
                raise DataError(f"{path.name}:{line_no}: record missing field {e}") from None
    if header is None or 'transition_lm' not in header:
        raise DataError(f"{path.name}: missing transition_lm header")

    if transition is None:
        arpa = Path(header['transition_lm'])
        if not arpa.is_absolute():
            arpa = path.parent / arpa
        transition = parse_arpa(arpa, vocab)
    return TabularE2E(vocab=vocab, transition=transition, observations=observations,
                      floor_logprob=float(header.get('floor_logprob', DEFAULT_FLOOR_LOGPROB)))


# ---------------------------------------------------------------------------
# Enumerable emulator
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SequenceDistributionLM(LanguageModel):
    """
    Exact autoregressive view of an explicit distribution over sequences

    p(w | prefix) = M(prefix + w) / M(prefix), p(<eos> | prefix) =
    P(prefix) / M(prefix), where M sums the mass of all sequences that start
    with the prefix. The whole prefix is kept as context.
    """
    vocab_size: int
    eos: int
    max_len: int
    sequences: Sequence[Tuple[int, ...]]
    weights: np.ndarray
    floor_logprob: float = DEFAULT_FLOOR_LOGPROB
    _mass: Dict[Tuple[int, ...], float] = field(default_factory=dict, init=False, repr=False)
    _complete: Dict[Tuple[int, ...], float] = field(default_factory=dict, init=False, repr=False)
    def __post_init__(self):
        self.order = self.max_len + 2
        for seq, weight in zip(self.sequences, self.weights):
            weight = float(weight)
            self._complete[seq] = weight
            for n in range(len(seq) + 1):
                prefix = seq[:n]
                self._mass[prefix] = self._mass.get(prefix, 0.0) + weight

    def sequence_prob(self, seq: Sequence[int]) -> float:
        return self._complete.get(tuple(seq), 0.0)

    def prob_row(self, context: Sequence[int]) -> np.ndarray:
        return instance_cache(self, '_prob_rows', self._prob_row)(tuple(context))

    def _prob_row(self, context: Tuple[int, ...]) -> np.ndarray:
        row = np.zeros(self.vocab_size, dtype=np.float64)
        total = self._mass.get(context, 0.0)
        if total > 0.0:
            for w in range(self.vocab_size):
                if w != self.eos:
                    row[w] = self._mass.get(context + (w,), 0.0) / total
            row[self.eos] = self._complete.get(context, 0.0) / total
        row.setflags(write=False)
        return row


@dataclass(eq=False)
class EnumerablePosterior:
    """
    Every sequence up to max_len over the non-<eos> tokens, with an internal
    prior, an OOD prior and, per observation, the channel likelihood p(x|y)
    """
    vocab: Vocab
    max_len: int
    sequences: List[Tuple[int, ...]]
    prior: np.ndarray
    ood_prior: np.ndarray
    likelihood: Dict[str, np.ndarray]
    floor_logprob: float = DEFAULT_FLOOR_LOGPROB
    _lms: Dict[Tuple[str, str], SequenceDistributionLM] = field(default_factory=dict, init=False,
                                                                repr=False)

    def posterior(self, observation: str) -> np.ndarray:
        """p(y | x) proportional to p(x | y) p_int(y)"""
        joint = self._likelihood(observation) * self.prior
        return joint / joint.sum()

    def ood_posterior(self, observation: str) -> np.ndarray:
        """q(y | x) proportional to p(x | y) q(y)"""
        joint = self._likelihood(observation) * self.ood_prior
        return joint / joint.sum()

    def _likelihood(self, observation: str) -> np.ndarray:
        try:
            return self.likelihood[observation]
        except KeyError:
            raise ObservationError(f"unknown observation {observation!r}") from None

    def _sequence_lm(self, kind: str, observation: str = '') -> SequenceDistributionLM:
        lm = self._lms.get((kind, observation))
        if lm is None:
            if kind == 'posterior':
                weights = self.posterior(observation)
            else:
                weights = self.prior if kind == 'prior' else self.ood_prior
            lm = SequenceDistributionLM(vocab_size=len(self.vocab), eos=self.vocab.eos,
                                        max_len=self.max_len, sequences=self.sequences,
                                        weights=weights, floor_logprob=self.floor_logprob)
            self._lms[(kind, observation)] = lm
        return lm

    def internal_lm(self) -> SequenceDistributionLM:
        """Exact marginal of the internal prior"""
        return self._sequence_lm('prior')

    def ood_lm(self) -> SequenceDistributionLM:
        return self._sequence_lm('ood')

    def posterior_lm(self, observation: str) -> SequenceDistributionLM:
        return self._sequence_lm('posterior', observation)

    def e2e(self) -> 'EnumerableE2E':
        return EnumerableE2E(self)


@dataclass(eq=False)
class EnumerableE2E(E2EModel):
    """Exact per-step conditionals of an EnumerablePosterior"""
    posterior: EnumerablePosterior

    def __post_init__(self):
        self.vocab = self.posterior.vocab

    @property
    def history_lm(self) -> LanguageModel:
        return self.posterior.internal_lm()

    def has_observation(self, observation: str) -> bool:
        return observation in self.posterior.likelihood

    def row(self, state: E2EState) -> np.ndarray:
        return self.posterior.posterior_lm(state.observation).row(state.lm_state)


def enumeration_size(alphabet: int, max_len: int) -> int:
    return sum(alphabet ** n for n in range(max_len + 1))


def build_enumerable(vocab_size: int, max_len: int,
                     channel_concentration: Optional[float] = 1.0,
                     prior_concentration: Optional[float] = 1.0,
                     ood_concentration: Optional[float] = 1.0,
                     n_observations: int = 1, seed: int = 0) -> EnumerablePosterior:
    """
    Build a random EnumerablePosterior over a tiny vocabulary

    Args:
        vocab_size: Vocabulary size including the four reserved tokens
        max_len: Longest sequence (without <eos>)
        channel_concentration: Gamma shape of the per-sequence likelihoods;
            None gives a uniform channel
        prior_concentration: Gamma shape of the internal prior; None gives the
            prior that picks every next token (including <eos>) uniformly
        ood_concentration: As prior_concentration, for the OOD prior
        n_observations: Observations 'x0', 'x1', ... with independent channels
        seed: RNG seed

    Returns:
        EnumerablePosterior
    """
    if vocab_size <= len(RESERVED_TOKENS):
        raise ConfigError(f"vocab_size must exceed the {len(RESERVED_TOKENS)} reserved tokens, "
                          f"got {vocab_size}")
    if max_len < 1:
        raise ConfigError(f"max_len must be >= 1, got {max_len}")
    size = enumeration_size(vocab_size - 1, max_len)
    if size > MAX_ENUMERATION:
        raise SearchSpaceError(f"{size} sequences to enumerate, limit is {MAX_ENUMERATION}")

    words = [f'w{i}' for i in range(vocab_size - len(RESERVED_TOKENS))]
    vocab = Vocab.build(words)
    alphabet = [i for i in range(len(vocab)) if i != vocab.eos]
    sequences = [seq for n in range(max_len + 1) for seq in itertools.product(alphabet, repeat=n)]
    lengths = np.array([len(s) for s in sequences])

    rng = np.random.default_rng(seed)

    def draw_prior(concentration):
        if concentration is None:
            # uniform next-token choice, <eos> forced at max_len
            exponent = np.where(lengths < max_len, lengths + 1, lengths)
            return np.power(float(vocab_size), -exponent.astype(np.float64))
        weights = rng.gamma(concentration, size=len(sequences))
        return weights / weights.sum()

    prior = draw_prior(prior_concentration)
    ood_prior = draw_prior(ood_concentration)
    likelihood = {}
    for n in range(n_observations):
        if channel_concentration is None:
            likelihood[f'x{n}'] = np.ones(len(sequences))
        else:
            likelihood[f'x{n}'] = rng.gamma(channel_concentration, size=len(sequences))

    logger.debug(f"Enumerated {len(sequences)} sequences (vocab {vocab_size}, max_len {max_len}, "
                 f"seed {seed})")
    return EnumerablePosterior(vocab=vocab, max_len=max_len, sequences=sequences, prior=prior,
                               ood_prior=ood_prior, likelihood=likelihood)


def internal_lm_gap(posterior: EnumerablePosterior, n_samples: int = 10_000, order: int = 3,
                    seed: int = 0) -> float:
    """
    Mean absolute log-probability gap between the exact internal marginal and
    an n-gram trained on samples from the internal prior, over the sampled
    token positions
    """
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(posterior.sequences), size=n_samples, p=posterior.prior)
    samples = [posterior.sequences[i] for i in picks]
    ngram = train_ngram(samples, posterior.vocab, order=order)
    exact = posterior.internal_lm()

    gaps = []
    eos = posterior.vocab.eos
    for seq in samples[:1000]:
        exact_state, ngram_state = exact.initial_state(), ngram.initial_state()
        for token in list(seq) + [eos]:
            gaps.append(abs(exact.logprob(exact_state, token) - ngram.logprob(ngram_state, token)))
            if token != eos:
                exact_state = exact.advance(exact_state, token)
                ngram_state = ngram.advance(ngram_state, token)
    gap = float(np.mean(gaps))
    logger.info(f"Internal LM gap ({order}-gram, {n_samples} samples): {gap:.4f} nats/token")
    return gap
