"""JSONL corpus files and raw payload discovery for ingestion."""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Iterator

from figlink.data.models import Document
from figlink.errors import MalformedPayload, UnreadableInput

logger = logging.getLogger(__name__)

PAYLOAD_SUFFIXES = ('.json', '.jsonl', '.html', '.htm')


def read_corpus(path: str | Path) -> list[Document]:
	"""Documents of a JSONL corpus, one record per line.

	Raises:
	    UnreadableInput: The file cannot be opened
	    MalformedPayload: A line is not a valid document record
	"""
	path = Path(path)
	documents = []
	try:
		handle = path.open(encoding='utf-8')
	except OSError as e:
		raise UnreadableInput(f'Cannot read corpus {path}: {e}', {'path': str(path)}) from e
	with handle:
		for number, line in enumerate(handle, start=1):
			if not line.strip():
				continue
			try:
				documents.append(Document.from_record(json.loads(line)))
			except (ValueError, KeyError, TypeError) as e:
				raise MalformedPayload(
					f'{path}:{number} is not a document record: {e}',
					{'path': str(path), 'line': number},
				) from e
	logger.info(f'Loaded {len(documents)} documents from {path}')
	return documents


def write_corpus(documents: Iterable[Document], path: str | Path) -> Path:
	path = Path(path)
	path.parent.mkdir(parents=True, exist_ok=True)
	with path.open('w', encoding='utf-8', newline='\n') as handle:
		for doc in documents:
			handle.write(json.dumps(doc.to_record(), ensure_ascii=False) + '\n')
	return path


def file_hash(*paths: str | Path) -> str:
	"""SHA-256 over the bytes of one or more files, in the given order."""
	digest = hashlib.sha256()
	for path in paths:
		digest.update(Path(path).read_bytes())
	return digest.hexdigest()


def iter_payload_files(source: str | Path) -> list[Path]:
	source = Path(source)
	if source.is_dir():
		return sorted(
			path
			for path in source.rglob('*')
			if path.is_file() and path.suffix.lower() in PAYLOAD_SUFFIXES
		)
	return [source]


def iter_raw_payloads(path: Path) -> Iterator[tuple[str, str, Any]]:
	"""Yield (source label, kind, payload) where kind is 'json' or 'html'."""
	suffix = path.suffix.lower()
	if suffix in ('.html', '.htm'):
		yield str(path), 'html', path.read_text(encoding='utf-8')
	elif suffix == '.jsonl':
		with path.open(encoding='utf-8') as handle:
			for number, line in enumerate(handle, start=1):
				if line.strip():
					yield f'{path}:{number}', 'json', line
	else:
		yield str(path), 'json', path.read_text(encoding='utf-8')
