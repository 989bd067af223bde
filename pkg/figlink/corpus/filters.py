"""Corpus admission rules: 2 to 30 figures, at most 32 sections, RGB-decodable images."""

import logging
from typing import Callable, Optional

from figlink.corpus.images import image_decodes
from figlink.data.models import Document

logger = logging.getLogger(__name__)

MIN_FIGURES = 2
MAX_FIGURES = 30
MAX_SECTIONS = 32

TOO_FEW_FIGURES = 'too_few_figures'
TOO_MANY_FIGURES = 'too_many_figures'
TOO_MANY_SECTIONS = 'too_many_sections'
IMAGE_NOT_RGB = 'image_not_rgb'


def rejection_reason(
	doc: Document, image_check: Callable[[str], bool] = image_decodes
) -> Optional[str]:
	"""First admission rule the document fails, or None if it passes."""
	if len(doc.figures) < MIN_FIGURES:
		return TOO_FEW_FIGURES
	if len(doc.figures) > MAX_FIGURES:
		return TOO_MANY_FIGURES
	if len(doc.sections) > MAX_SECTIONS:
		return TOO_MANY_SECTIONS
	for figure in doc.figures:
		if not image_check(figure.image_ref):
			return IMAGE_NOT_RGB
	return None


def filter_document(doc: Document, image_check: Callable[[str], bool] = image_decodes) -> bool:
	reason = rejection_reason(doc, image_check)
	if reason is not None:
		logger.debug(f'Rejected {doc.id}: {reason}')
	return reason is None
