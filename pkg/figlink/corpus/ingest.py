import json
import logging
from pathlib import Path
from typing import Callable, Iterable

from pydantic import ValidationError

from figlink.corpus.filters import (
	MAX_FIGURES,
	MAX_SECTIONS,
	MIN_FIGURES,
	rejection_reason,
)
from figlink.corpus.html import html_to_payload
from figlink.corpus.images import image_decodes
from figlink.corpus.io import iter_payload_files, iter_raw_payloads
from figlink.corpus.parser import parse_document
from figlink.data.models import Document, FilterReport, ParseFailure, RejectedDocument
from figlink.errors import FigLinkError
from figlink.utils.progress import progress

logger = logging.getLogger(__name__)


def _resolve_refs(doc: Document, base_dir: Path) -> Document:
	"""Make relative image paths absolute with respect to the payload file."""
	for figure in doc.figures:
		ref = figure.image_ref
		if '://' in ref or Path(ref).is_absolute():
			continue
		figure.image_ref = str((base_dir / ref).resolve())
	return doc


def ingest(
	sources: Iterable[str | Path],
	image_check: Callable[[str], bool] = image_decodes,
) -> tuple[list[Document], FilterReport]:
	"""Parse and filter raw payloads (JSON, JSONL or HTML).

	Documents failing to parse or failing a filter rule are recorded in the
	returned report, never dropped silently.
	"""
	report = FilterReport()
	accepted: list[Document] = []
	files = [path for source in sources for path in iter_payload_files(source)]
	for number, path in enumerate(files, start=1):
		progress.advance('ingest', number - 1, len(files), detail=path.name)
		for label, kind, payload in iter_raw_payloads(path):
			try:
				raw = html_to_payload(payload, path.stem) if kind == 'html' else json.loads(payload)
				doc = _resolve_refs(parse_document(raw), path.parent)
			except FigLinkError as e:
				logger.warning(f'Skipping {label}: {e.message}')
				report.parse_errors.append(
					ParseFailure(source=label, code=e.code, message=e.message)
				)
				continue
			except (json.JSONDecodeError, ValidationError, AttributeError, TypeError) as e:
				logger.warning(f'Skipping {label}: {e}')
				report.parse_errors.append(
					ParseFailure(source=label, code='invalid_payload', message=str(e))
				)
				continue

			reason = rejection_reason(doc, image_check)
			if reason is not None:
				logger.warning(f'Rejected {doc.id} ({label}): {reason}')
				report.rejected.append(RejectedDocument(id=doc.id, reason=reason))
				continue
			assert MIN_FIGURES <= len(doc.figures) <= MAX_FIGURES
			assert len(doc.sections) <= MAX_SECTIONS
			accepted.append(doc)
			report.accepted.append(doc.id)

	progress.finish('ingest', f'{len(accepted)} accepted')
	logger.info(
		f'Ingested {len(accepted)} documents '
		f'({len(report.rejected)} rejected, {len(report.parse_errors)} unparseable)'
	)
	return accepted, report
