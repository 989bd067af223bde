from .filters import filter_document
from .ingest import ingest
from .io import read_corpus, write_corpus
from .parser import parse_document
from .segmenter import segment_sentences
from .split import split_corpus
from .stats import compare_to_reference, compute_stats

__all__ = [
	'compare_to_reference',
	'compute_stats',
	'filter_document',
	'ingest',
	'parse_document',
	'read_corpus',
	'segment_sentences',
	'split_corpus',
	'write_corpus',
]
