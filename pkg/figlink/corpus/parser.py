"""
Structured article payload -> Document.

A payload looks like::

    {
        "id": "optional",
        "title": "...",
        "sections": [
            {"heading": "...", "text": "..." | "sentences": [...] | "paragraphs": [...],
             "figures": [{"image_ref" | "src": "...", "caption": "..."}]}
        ]
    }

Each figure's ground-truth section is the section it is nested in.
"""

import hashlib
import logging
from typing import Any

from figlink.corpus.segmenter import normalize_whitespace, segment_sentences
from figlink.data.models import Document, Figure, Section, Sentence
from figlink.errors import MalformedPayload, UnresolvableImage

logger = logging.getLogger(__name__)


def derive_document_id(title: str) -> str:
	return hashlib.sha1(title.encode('utf-8')).hexdigest()[:12]


def _section_sentences(raw_section: dict[str, Any]) -> list[Sentence]:
	if raw_section.get('sentences') is not None:
		texts = [normalize_whitespace(str(text)) for text in raw_section['sentences']]
	else:
		paragraphs = raw_section.get('paragraphs')
		if paragraphs is None:
			paragraphs = [raw_section.get('text') or '']
		texts = []
		for paragraph in paragraphs:
			if normalize_whitespace(str(paragraph)):
				texts.extend(sentence.text for sentence in segment_sentences(paragraph))
	return [
		Sentence.from_text(index, text)
		for index, text in enumerate(text for text in texts if text)
	]


def _parse_figure(raw_figure: dict[str, Any], figure_index: int, section_index: int) -> Figure:
	image_ref = raw_figure.get('image_ref') or raw_figure.get('src')
	if not image_ref:
		raise UnresolvableImage(
			f'Figure {figure_index} has no image locator',
			{'figure_index': figure_index, 'section_index': section_index},
		)
	return Figure(
		figure_index=figure_index,
		image_ref=str(image_ref),
		caption=raw_figure.get('caption') or '',
		gt_section_index=section_index,
	)


def parse_document(raw: dict[str, Any]) -> Document:
	"""Parse a structured article payload into a Document.

	Sections without any text are dropped; figures nested in them are dropped
	with a warning since they have no section to link to.

	Raises:
	    MalformedPayload: Missing title or no (non-empty) sections
	    UnresolvableImage: A figure without an image locator
	"""
	title = normalize_whitespace(str(raw.get('title') or ''))
	if not title:
		raise MalformedPayload('Payload has no title', {'id': raw.get('id')})

	raw_sections = raw.get('sections') or []
	if not raw_sections:
		raise MalformedPayload(f'Payload {title!r} has no sections', {'title': title})

	sections: list[Section] = []
	figures: list[Figure] = []
	for position, raw_section in enumerate(raw_sections):
		nested = raw_section.get('figures') or []
		for raw_figure in nested:
			if not (raw_figure.get('image_ref') or raw_figure.get('src')):
				raise UnresolvableImage(
					f'Figure in section {position} of {title!r} has no image locator',
					{'title': title, 'section': position},
				)

		sentences = _section_sentences(raw_section)
		if not sentences:
			if nested:
				logger.warning(
					f'Dropping {len(nested)} figure(s) nested in textless section '
					f'{position} of {title!r}'
				)
			continue

		section_index = len(sections)
		sections.append(
			Section(
				index=section_index,
				heading=normalize_whitespace(str(raw_section.get('heading') or '')),
				sentences=sentences,
			)
		)
		for raw_figure in nested:
			figures.append(_parse_figure(raw_figure, len(figures), section_index))

	if not sections:
		raise MalformedPayload(f'No section of {title!r} contains text', {'title': title})

	doc_id = str(raw.get('id') or derive_document_id(title))
	logger.debug(f'Parsed {doc_id}: {len(sections)} sections, {len(figures)} figures')
	return Document(id=doc_id, title=title, sections=sections, figures=figures)
