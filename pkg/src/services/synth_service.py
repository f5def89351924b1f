"""
Synthetic task generation: templated conversations with recurring names,
a noisy substitution channel and the E2E training transcripts
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import Levenshtein
import numpy as np

from ..models.corpus import Conversation, Corpus, Utterance
from ..models.experiment_config import SynthSpec
from ..models.ngram_lm import NGramLM
from ..models.vocab import Vocab
from ..utils.errors import ConfigError, PoolError
from ..utils.logger import setup_logger
from .e2e_service import TabularE2E, channel_table, nearest_confusions
from .lm_service import train_ngram
from .tagging_service import ADVERSARIAL_DISTANCES, insert_tags

NAME_SLOT = '{name}'
NAMES_PER_CONVERSATION = 2
# test surnames need pool neighbours at every distance up to the largest adversarial one
NEIGHBOUR_DISTANCES = tuple(range(1, max(ADVERSARIAL_DISTANCES) + 1))


@dataclass(frozen=True)
class Grammar:
    """Templates are space-separated; 'a|b' picks one alternative, {name} takes a name"""
    plain: Tuple[str, ...]
    with_name: Tuple[str, ...]

    def words(self) -> List[str]:
        words = set()
        for template in self.plain + self.with_name:
            for slot in template.split():
                if slot != NAME_SLOT:
                    words.update(slot.split('|'))
        return sorted(words)


GRAMMARS: Dict[str, Grammar] = {
    'clinic': Grammar(
        plain=(
            'good morning|afternoon how are you feeling today after the new medication we gave you',
            'please take a seat and tell me what brings you in to the clinic today',
            'the pain started last week and it gets a little worse in the evening',
            'i have had a headache|fever|cough since monday|yesterday and it does not seem to go away',
            'take two tablets every morning|evening with a glass of water right after breakfast',
            'we will check your blood pressure and your heart rate first and then talk',
            'your results look fine|normal so there is really nothing to worry about at the moment',
            'come back in two weeks so we can see how well the treatment works for you',
            'do you have any allergies to medication or to certain foods that we should know about',
            'thank you for coming in today and we will see you again soon',
            'does it hurt when i press here or only when you move your arm',
            'let me write a prescription for something to help with the pain at night',
            'have you been sleeping well lately or do you wake up during the night',
            'the nurse will take a blood sample before you leave the clinic today',
            'i would like you to rest for a few days and drink plenty of water',
            'is anyone in your family known to have heart problems or diabetes or high blood pressure',
            'we should do an x ray first to make sure that nothing is broken',
            'you can pick up the medicine at the pharmacy on the ground floor of the building',
            'if the fever comes back please call the clinic straight away and ask for the nurse',
            'how many cups of coffee do you usually drink in a day at work',
        ),
        with_name=(
            'good morning|afternoon {name} how are you feeling today',
            'hello {name} please take a seat and tell me what brings you in',
            'thank you {name} see you again in two weeks',
            'this is doctor {name} from the clinic calling about your results',
            'the next patient is {name} please come to room two',
            '{name} your results look fine|normal so there is nothing to worry about',
            'i will ask doctor {name} to have a look at the x ray',
            'could you spell the name {name} for me please',
            '{name} called this morning|afternoon to move the appointment to monday',
            'please send the blood results to {name} before the end of the day',
        )
    )
}


@dataclass
class SynthOutput:
    vocab: Vocab
    train_text: List[Tuple[str, ...]]  # tagged E2E / ID LM training transcripts
    corpus: Corpus
    transition: NGramLM
    e2e: TabularE2E
    stats: Dict[str, int] = field(default_factory=dict)
    variants: Dict[str, str] = field(default_factory=dict)  # test surname -> confusable training surname


def has_neighbours(word: str, others: Sequence[str], distances: Sequence[int]) -> bool:
    """True if some other word lies at each of the given edit distances"""
    found = {Levenshtein.distance(word, other) for other in others if other != word}
    return all(d in found for d in distances)


class SynthService:
    """
    Builds a synthetic task deterministically from a SynthSpec

    Surnames are split so that test surnames never occur in training text,
    while first names are shared. For a variant_rate share of the test
    names, training also sees the same first name with a training surname
    the channel confuses with the test one, so the recognizer's prior
    pulls towards the wrong spelling.
    """

    def __init__(self, spec: SynthSpec):
        spec.validate()
        if spec.grammar not in GRAMMARS:
            raise ConfigError(f"unknown grammar {spec.grammar!r}, expected one of {sorted(GRAMMARS)}")
        self.logger = setup_logger('synth')
        self.spec = spec
        self.grammar = GRAMMARS[spec.grammar]

    def _fill(self, template: str, name: Sequence[str], rng: np.random.Generator) -> List[str]:
        tokens = []
        for slot in template.split():
            if slot == NAME_SLOT:
                tokens.extend(name)
            else:
                choices = slot.split('|')
                tokens.append(choices[rng.integers(len(choices))] if len(choices) > 1 else slot)
        return tokens

    def _utterance(self, names: Sequence[Tuple[str, ...]], with_name: bool,
                   rng: np.random.Generator) -> List[str]:
        """Tagged utterance text"""
        if not with_name:
            template = self.grammar.plain[rng.integers(len(self.grammar.plain))]
            return self._fill(template, (), rng)
        template = self.grammar.with_name[rng.integers(len(self.grammar.with_name))]
        name = names[rng.integers(len(names))]
        return insert_tags(self._fill(template, name, rng), names)

    def _name_flags(self, total: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
        flags = np.zeros(total, dtype=bool)
        flags[rng.permutation(total)[:int(round(fraction * total))]] = True
        return flags

    def split_surnames(self, surnames: Sequence[str],
                       rng: np.random.Generator) -> Tuple[List[str], List[str]]:
        """
        (training, test) surnames

        Test surnames are half of those with pool neighbours at every
        distance in NEIGHBOUR_DISTANCES; all other surnames go to training.
        """
        eligible = [s for s in surnames if has_neighbours(s, surnames, NEIGHBOUR_DISTANCES)]
        if len(eligible) < 2:
            self.logger.warning(f"{len(eligible)} surname(s) have neighbours at distances "
                                f"{NEIGHBOUR_DISTANCES}, splitting all {len(surnames)} instead")
            eligible = list(surnames)
        order = rng.permutation(len(eligible))
        test = sorted(eligible[i] for i in order[:len(eligible) // 2])
        held_out = set(test)
        return [s for s in surnames if s not in held_out], test

    @staticmethod
    def find_variants(test_surnames: Sequence[str], train_surnames: Sequence[str], vocab: Vocab,
                      confusions: Dict[int, Tuple[int, ...]]) -> Dict[str, str]:
        """
        For each test surname, the closest training surname whose confusion
        set contains it; ties go to the lower vocabulary id
        """
        variants = {}
        for surname in test_surnames:
            target = vocab.index(surname)
            best: Optional[Tuple[int, int, str]] = None
            for other in train_surnames:
                if target in confusions.get(vocab.index(other), ()):
                    key = (Levenshtein.distance(surname, other), vocab.index(other), other)
                    best = key if best is None or key < best else best
            if best is not None:
                variants[surname] = best[2]
        return variants

    @staticmethod
    def draw_names(firsts: Sequence[str], surnames: Sequence[str], count: int,
                   rng: np.random.Generator) -> List[Tuple[str, str]]:
        """Up to count distinct first name x surname pairs"""
        total = len(firsts) * len(surnames)
        picks = rng.choice(total, size=min(count, total), replace=False)
        return [(firsts[i // len(surnames)], surnames[i % len(surnames)]) for i in picks]

    def generate(self, pool: Sequence[Tuple[str, ...]]) -> SynthOutput:
        """
        Generate the task

        Args:
            pool: Name pool; its first names and surnames are recombined

        Returns:
            SynthOutput with vocabulary, training text, test corpus and E2E emulator
        """
        spec = self.spec
        firsts = sorted({n[0] for n in pool if len(n) >= 2})
        surnames = sorted({n[-1] for n in pool if len(n) >= 2})
        if not firsts or len(surnames) < 2:
            raise PoolError(f"name pool too small: {len(firsts)} first name(s), {len(surnames)} surname(s)")
        rng = np.random.default_rng(spec.seed)

        words = set(self.grammar.words())
        name_words = {part for name in pool for part in name}
        vocab = Vocab.build(words | name_words)
        confusions = nearest_confusions(vocab, {'words': sorted(words), 'names': sorted(name_words)},
                                        spec.confusion_size)

        train_surnames, test_surnames = self.split_surnames(surnames, rng)
        variants = self.find_variants(test_surnames, train_surnames, vocab, confusions)
        test_names = self.draw_names(firsts, test_surnames, spec.n_names, rng)
        if len(test_names) < NAMES_PER_CONVERSATION:
            raise PoolError(f"name pool too small: {len(test_names)} test name(s)")
        train_names = self.draw_names(firsts, train_surnames, spec.n_names, rng)
        with_variants = 0
        for first, surname in test_names:
            if surname in variants and rng.random() < spec.variant_rate:
                train_names.append((first, variants[surname]))
                with_variants += 1

        # transcripts the emulated E2E model (and the ID LM) were trained on;
        # named ones cycle through every training name
        flags = self._name_flags(spec.train_utterances, spec.train_fraction_with_names, rng)
        order = rng.permutation(len(train_names))
        train_text = []
        named = 0
        for with_name in flags:
            names = []
            if with_name:
                names = [train_names[order[named % len(order)]]]
                named += 1
            train_text.append(tuple(self._utterance(names, bool(with_name), rng)))

        total = spec.n_conversations * spec.utterances_per_conversation
        flags = self._name_flags(total, spec.fraction_with_names, rng).reshape(
            spec.n_conversations, spec.utterances_per_conversation)
        conversations_text = []
        for c in range(spec.n_conversations):
            picks = rng.choice(len(test_names), size=NAMES_PER_CONVERSATION, replace=False)
            names = [test_names[i] for i in picks]
            texts = [self._utterance(names, bool(f), rng) for f in flags[c]]
            conversations_text.append((f'c{c:04d}', names, texts))

        transition = train_ngram([vocab.encode(t) for t in train_text], vocab, order=spec.lm_order)

        # spurious spans on unnamed utterances about as often as spans are dropped
        spurious_rho = spec.tag_rho * spec.fraction_with_names
        conversations = []
        tables = {}
        for conv_id, names, texts in conversations_text:
            utterances = []
            for u, text in enumerate(texts):
                utt_id = f'{conv_id}-u{u:02d}'
                reference = vocab.encode(text)
                tables[utt_id] = channel_table(reference, vocab, confusions, spec.rho, rng,
                                               floor_logprob=transition.floor_logprob,
                                               tag_rho=spec.tag_rho, spurious_rho=spurious_rho)
                utterances.append(Utterance(conv_id, utt_id, reference, observation=utt_id))
            conversations.append(Conversation(conv_id, tuple(utterances),
                                              tuple(vocab.encode(n) for n in names)))

        corpus = Corpus(tuple(conversations))
        e2e = TabularE2E(vocab=vocab, transition=transition, observations=tables,
                         floor_logprob=transition.floor_logprob)
        stats = {
            'vocab_size': len(vocab),
            'train_utterances': len(train_text),
            'train_names': len(train_names),
            'test_surnames': len(test_surnames),
            'test_names': len(test_names),
            'test_names_with_variants': with_variants,
            'test_utterances': len(corpus),
            'test_utterances_with_names': int(flags.sum()),
            'conversations': len(conversations)
        }
        self.logger.info(f"Generated {stats['test_utterances']} test utterance(s) "
                         f"({stats['test_utterances_with_names']} with names), "
                         f"{stats['train_utterances']} training transcript(s), "
                         f"{with_variants} test name(s) with a confusable training variant")
        return SynthOutput(vocab=vocab, train_text=train_text, corpus=corpus,
                           transition=transition, e2e=e2e, stats=stats, variants=variants)
