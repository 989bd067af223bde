from collections import Counter
from typing import Any, Sequence

import numpy as np

from figlink.data.models import CorpusStats, Document
from figlink.errors import EmptyCorpus

# Averages of the filtered reference Wikipedia corpus
REFERENCE_STATS = {
	'avg_unit_length': 195.5,
	'avg_doc_length': 3346.6,
	'avg_sent_length': 22.3,
	'avg_sent_per_unit': 8.2,
	'avg_img_per_doc': 4.8,
}


def compute_stats(corpus: Sequence[Document]) -> CorpusStats:
	"""Corpus statistics in words (whitespace tokens); a unit is a section.

	Raises:
	    EmptyCorpus: No documents
	"""
	if not corpus:
		raise EmptyCorpus('Cannot compute statistics of an empty corpus')

	sections = [section for doc in corpus for section in doc.sections]
	images_per_section: Counter[int] = Counter()
	for doc in corpus:
		per_section = Counter(figure.gt_section_index for figure in doc.figures)
		images_per_section.update(per_section[j] for j in range(len(doc.sections)))

	return CorpusStats(
		avg_unit_length=float(np.mean([section.word_count for section in sections])),
		avg_doc_length=float(np.mean([doc.word_count for doc in corpus])),
		avg_sent_length=float(
			np.mean([s.token_count for section in sections for s in section.sentences])
		),
		avg_sent_per_unit=float(np.mean([len(section.sentences) for section in sections])),
		avg_img_per_doc=float(np.mean([len(doc.figures) for doc in corpus])),
		doc_count=len(corpus),
		section_count=len(sections),
		figure_count=sum(len(doc.figures) for doc in corpus),
		images_per_section=dict(sorted(images_per_section.items())),
		sections_per_doc=dict(sorted(Counter(len(doc.sections) for doc in corpus).items())),
	)


def compare_to_reference(stats: CorpusStats) -> dict[str, dict[str, Any]]:
	"""Observed averages next to the reference corpus averages."""
	observed = stats.model_dump()
	return {
		name: {
			'observed': observed[name],
			'reference': reference,
			'delta': observed[name] - reference,
		}
		for name, reference in REFERENCE_STATS.items()
	}
