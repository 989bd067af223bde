"""
Best-effort Wikipedia HTML front-end.

Converts rendered article markup to the structured payload consumed by
`parse_document`: h2/h3 headings delimit sections, paragraphs become section
text and thumbnails/figures are nested in the section they appear in.
"""

import logging
from typing import Any, Optional

from bs4 import BeautifulSoup, Tag

from figlink.corpus.segmenter import normalize_whitespace

logger = logging.getLogger(__name__)

UNWANTED_SELECTORS = [
	'table.infobox',
	'.navbox',
	'.vertical-navbox',
	'.wikitable',
	'.reference',
	'.reflist',
	'.mw-editsection',
	'.mw-cite-backlink',
	'.mw-references-wrap',
	'.hatnote',
	'.toc',
	'.printonly',
	'.noprint',
	'sup.reference',
	'script',
	'style',
	'noscript',
]

SKIPPED_SECTIONS = frozenset(
	{'references', 'see also', 'external links', 'notes', 'further reading', 'sources'}
)

_HEADINGS = ('h2', 'h3')


def _remove_unwanted_elements(soup: BeautifulSoup) -> None:
	for selector in UNWANTED_SELECTORS:
		for element in soup.select(selector):
			element.decompose()


def _is_figure(element: Tag) -> bool:
	return element.name == 'figure' or (
		element.name == 'div' and 'thumb' in (element.get('class') or [])
	)


def _inside_figure(element: Tag) -> bool:
	return any(_is_figure(parent) for parent in element.parents if isinstance(parent, Tag))


def _figure_payload(element: Tag) -> Optional[dict[str, Any]]:
	image = element.find('img')
	if image is None or not image.get('src'):
		return None
	src = str(image['src'])
	if src.startswith('//'):
		src = f'https:{src}'
	caption_tag = element.find('figcaption') or element.select_one('.thumbcaption')
	caption = normalize_whitespace(caption_tag.get_text(' ')) if caption_tag else ''
	return {'image_ref': src, 'caption': caption}


def _title(soup: BeautifulSoup) -> str:
	for candidate in (soup.select_one('h1#firstHeading'), soup.find('h1'), soup.title):
		if candidate is not None and candidate.get_text(strip=True):
			return normalize_whitespace(candidate.get_text(' '))
	return ''


def html_to_payload(html: str, doc_id: Optional[str] = None) -> dict[str, Any]:
	"""Extract title, sections and nested figures from rendered article HTML."""
	soup = BeautifulSoup(html, 'html.parser')
	_remove_unwanted_elements(soup)
	title = _title(soup)
	content = (
		soup.select_one('#mw-content-text')
		or soup.find('div', class_='mw-parser-output')
		or soup.body
		or soup
	)

	sections: list[dict[str, Any]] = []
	current: dict[str, Any] = {'heading': '', 'paragraphs': [], 'figures': []}
	skipping = False
	for element in content.find_all([*_HEADINGS, 'p', 'figure', 'div']):
		if element.name in _HEADINGS:
			if current['paragraphs'] or current['figures']:
				sections.append(current)
			heading = normalize_whitespace(element.get_text(' '))
			skipping = heading.lower() in SKIPPED_SECTIONS
			current = {'heading': heading, 'paragraphs': [], 'figures': []}
		elif skipping:
			continue
		elif _is_figure(element):
			if _inside_figure(element):
				continue
			if (figure := _figure_payload(element)) is not None:
				current['figures'].append(figure)
		elif element.name == 'p' and not _inside_figure(element):
			if text := normalize_whitespace(element.get_text(' ')):
				current['paragraphs'].append(text)
	if current['paragraphs'] or current['figures']:
		sections.append(current)

	logger.debug(f'HTML article {title!r}: {len(sections)} raw sections')
	payload: dict[str, Any] = {'title': title, 'sections': sections}
	if doc_id:
		payload['id'] = doc_id
	return payload
