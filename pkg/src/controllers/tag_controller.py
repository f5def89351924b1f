"""
Tag controller for marking names in an untagged corpus
"""
from typing import Tuple

from ..models.corpus import Conversation, Corpus, Utterance
from ..services.config_service import ConfigService
from ..services.corpus_service import CorpusService, load_name_pool, load_vocab
from ..services.tagging_service import extract_conv_names, insert_tags
from ..utils.errors import CdrError, DataError, error_kind
from ..utils.logger import setup_logger


class TagController:
    """Handles `cdr tag`"""

    def __init__(self, config_service: ConfigService):
        self.config_service = config_service
        self.logger = setup_logger('tag')

    def tag(self, corpus_path: str, vocab_path: str, name_list_path: str, out_path: str,
            names_out_path: str = None, allow_unk: bool = False) -> Tuple[bool, str, dict]:
        """
        Insert tags by intersecting transcripts with a name list

        Args:
            corpus_path: Corpus whose references carry no tags
            vocab_path: Vocabulary file
            name_list_path: Name file, one name per line
            out_path: Tagged corpus output
            names_out_path: Per-conversation name file output (names found in each conversation)
            allow_unk: Map unknown tokens to <unk>

        Returns:
            Tuple of (success, message, stats_dict)
        """
        self.logger.info(f"Starting tagging of {corpus_path}")
        stats = {'utterances': 0, 'tagged_utterances': 0, 'spans': 0}
        try:
            vocab = load_vocab(vocab_path)
            service = CorpusService(vocab, allow_unk=allow_unk)
            corpus = service.load_corpus(corpus_path)
            names = load_name_pool(name_list_path)

            conversations = []
            for conversation in corpus.conversations:
                utterances = []
                tagged_texts = []
                for utterance in conversation.utterances:
                    text = vocab.decode(utterance.reference)
                    if any(vocab.is_tag(t) for t in utterance.reference):
                        raise DataError(f"utt {utterance.utterance_id}: reference is already tagged")
                    tagged = insert_tags(text, names)
                    tagged_texts.append(tagged)
                    spans = (len(tagged) - len(text)) // 2
                    stats['utterances'] += 1
                    stats['spans'] += spans
                    stats['tagged_utterances'] += 1 if spans else 0
                    utterances.append(Utterance(utterance.conversation_id, utterance.utterance_id,
                                                vocab.encode(tagged), utterance.observation))
                found = extract_conv_names(tagged_texts)
                conversations.append(Conversation(conversation.id, tuple(utterances),
                                                  tuple(vocab.encode(n) for n in found)))

            tagged_corpus = Corpus(tuple(conversations))
            service.save_corpus(tagged_corpus, out_path, names_out_path)

            message = (f"Tagging completed: {stats['spans']} spans in "
                       f"{stats['tagged_utterances']} of {stats['utterances']} utterances")
            self.logger.info(message)
            return True, message, stats

        except CdrError as e:
            stats['error_kind'] = error_kind(e)
            error_msg = f"Tagging failed: {e}"
            self.logger.error(error_msg)
            return False, error_msg, stats
