# core/llm_integration.py

import logging
from typing import Dict, Mapping, Optional, Sequence, Tuple

from config.service_params import get_service_params
from core.service_base import FixtureStore, JsonHttpService, ServiceClient
from utils.errors import ConfigError, EmptyContent
from utils.text_processing import cosine_similarity, first_sentences, tf_vector, tokenize

logger = logging.getLogger("convergex.clients")


class Summarizer(ServiceClient):
    """
    Text summarization behind an instruction prompt.

    The fixture answers from a stored response when one exists and otherwise
    echoes the first echo_sentences sentences of the content.
    """

    service = "summarizer"

    def __init__(self, fixtures: Optional[FixtureStore] = None, http: Optional[JsonHttpService] = None,
                 echo_sentences: int = 3, abbreviations: Optional[Sequence[str]] = None):
        super().__init__(fixtures, http, get_service_params(self.service))
        self.echo_sentences = echo_sentences
        self.abbreviations = abbreviations

    def summarize(self, instruction: str, content: str, preset: Optional[str] = None) -> str:
        """
        Summarize content following an instruction.

        Args:
            instruction: Prompt text
            content: Text to summarize
            preset: Preset name, used for generation parameters on live calls

        Returns:
            Non-empty summary text

        Raises:
            EmptyContent: if content is blank
            ServiceError: on service failure
        """
        if not content or not content.strip():
            raise EmptyContent("nothing to summarize")
        request = {"content": content, "instruction": instruction}
        response = self._fetch("summarize", request, get_service_params(self.service, preset))
        if response is None:
            return first_sentences(content, self.echo_sentences, self.abbreviations)

        summary = self._expect_dict(response, "summary")["summary"]
        if not isinstance(summary, str) or not summary.strip():
            raise self._bad("summary must be a non-empty string")
        return summary.strip()


class ZeroShotClassifier(ServiceClient):
    """
    Assigns one of a set of labels to a text.

    The fixture scores each label by the cosine similarity of term-frequency
    vectors between the text and the label's description (the label itself
    unless a description is given); ties go to the earlier label.
    """

    service = "zero_shot"

    def __init__(self, fixtures: Optional[FixtureStore] = None, http: Optional[JsonHttpService] = None,
                 descriptions: Optional[Mapping[str, str]] = None):
        super().__init__(fixtures, http, get_service_params(self.service))
        self.descriptions: Dict[str, str] = dict(descriptions or {})

    def classify(self, text: str, labels: Sequence[str]) -> Tuple[str, float]:
        """
        Returns:
            (label, confidence) with label in labels and confidence in [0, 1]

        Raises:
            ConfigError: if labels is empty
            ServiceError: on service failure
        """
        if not labels:
            raise ConfigError("zero-shot classification needs at least one label")
        request = {"labels": list(labels), "text": text}
        response = self._fetch("classify", request)
        if response is None:
            return self._fixture_classify(text, labels)

        body = self._expect_dict(response, "label", "confidence")
        label, confidence = body["label"], body["confidence"]
        if label not in labels:
            raise self._bad(f"label {label!r} not among the requested labels")
        if not isinstance(confidence, (int, float)) or not 0.0 <= confidence <= 1.0:
            raise self._bad(f"confidence {confidence!r} outside [0, 1]")
        return label, float(confidence)

    def _fixture_classify(self, text: str, labels: Sequence[str]) -> Tuple[str, float]:
        text_vector = tf_vector(tokenize(text).tokens)
        best_label, best_score = labels[0], -1.0
        for label in labels:
            description = self.descriptions.get(label, label)
            score = cosine_similarity(text_vector, tf_vector(tokenize(description).tokens))
            if score > best_score:
                best_label, best_score = label, score
        logger.debug(f"zero-shot fixture label={best_label!r} confidence={best_score:.3f}")
        return best_label, min(max(best_score, 0.0), 1.0)
