"""
Entity extraction used by the entity-rank layout signal.

The default extractor takes maximal runs of capitalized tokens, drops leading
stopwords and lowercases the result. Anything implementing `EntityExtractor`
(a learned NER, for instance) can be passed in its place.
"""

import re
from functools import lru_cache
from typing import Iterable, Optional, Protocol

STOPWORDS = frozenset(
	{
		'a',
		'an',
		'and',
		'as',
		'at',
		'after',
		'before',
		'but',
		'by',
		'during',
		'for',
		'from',
		'he',
		'her',
		'his',
		'however',
		'i',
		'if',
		'in',
		'into',
		'it',
		'its',
		'of',
		'on',
		'or',
		'she',
		'since',
		'that',
		'the',
		'their',
		'there',
		'these',
		'they',
		'this',
		'those',
		'to',
		'was',
		'we',
		'were',
		'when',
		'while',
		'with',
	}
)

_TOKEN = re.compile(r"\w+(?:['’.\-]\w+)*|[^\w\s]")
_POSSESSIVE = re.compile(r"['’]s$")


class EntityExtractor(Protocol):
	def extract(self, text: str) -> set[str]: ...


class CapitalizedSpanExtractor:
	"""Maximal capitalized n-grams, stopwords excluded as heads."""

	def __init__(self, stopwords: Iterable[str] = STOPWORDS):
		self.stopwords = frozenset(word.lower() for word in stopwords)

	def extract(self, text: str) -> set[str]:
		entities: set[str] = set()
		run: list[str] = []
		for token in _TOKEN.findall(text):
			if token[0].isupper():
				run.append(token)
				continue
			self._close_run(run, entities)
			run = []
		self._close_run(run, entities)
		return entities

	def _close_run(self, run: list[str], entities: set[str]) -> None:
		words = [_POSSESSIVE.sub('', token).lower() for token in run]
		while words and words[0] in self.stopwords:
			words = words[1:]
		if words:
			entities.add(' '.join(words))


_default_extractor = CapitalizedSpanExtractor()


@lru_cache(maxsize=65536)
def _extract_default(text: str) -> frozenset[str]:
	return frozenset(_default_extractor.extract(text))


def extract_entities(text: str, extractor: Optional[EntityExtractor] = None) -> set[str]:
	"""Normalized entity strings found in `text`; empty set when there are none."""
	if extractor is None:
		return set(_extract_default(text))
	return set(extractor.extract(text))


def shared_entity_count(first: set[str], second: set[str]) -> int:
	"""Distinct entities (types, not mentions) present in both sets."""
	return len(first & second)
