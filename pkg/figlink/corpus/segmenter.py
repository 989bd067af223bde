"""Rule-based sentence segmentation."""

import re

from figlink.data.models import Sentence
from figlink.errors import EmptyText

ABBREVIATIONS = frozenset(
	{
		'dr.',
		'mr.',
		'mrs.',
		'ms.',
		'prof.',
		'st.',
		'jr.',
		'sr.',
		'e.g.',
		'i.e.',
		'etc.',
		'fig.',
		'no.',
		'u.s.',
		'vs.',
	}
)

# terminator, optional closing quotes/brackets, then whitespace
_BOUNDARY = re.compile(r'([.!?]["\')\]’”]*)(\s+)(?=\S)')
_OPENERS = '("\'[“‘'


def normalize_whitespace(text: str) -> str:
	return ' '.join(text.split())


def _is_abbreviation(text: str, terminator_end: int) -> bool:
	token = text[:terminator_end].rsplit(' ', 1)[-1].lstrip(_OPENERS).lower()
	return token in ABBREVIATIONS


def split_sentences(text: str) -> list[str]:
	"""Split normalized text on terminators followed by an uppercase word."""
	normalized = normalize_whitespace(text)
	pieces = []
	start = 0
	for match in _BOUNDARY.finditer(normalized):
		if not normalized[match.end()].isupper():
			continue
		if _is_abbreviation(normalized, match.start(1) + 1):
			continue
		pieces.append(normalized[start : match.end(1)])
		start = match.end()
	if start < len(normalized):
		pieces.append(normalized[start:])
	return pieces


def segment_sentences(text: str) -> list[Sentence]:
	"""Deterministically split text into sentences.

	Joining the sentence texts with single spaces gives back the
	whitespace-normalized input.

	Raises:
	    EmptyText: If the text is empty after whitespace normalization
	"""
	pieces = split_sentences(text)
	if not pieces:
		raise EmptyText('Cannot segment empty text')
	return [Sentence.from_text(index, piece) for index, piece in enumerate(pieces)]
