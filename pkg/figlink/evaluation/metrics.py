from collections import defaultdict
from typing import Sequence

from figlink.data.models import EvalAggregate, FigurePrediction
from figlink.errors import InsufficientRanking


def recall_at_n(rows: Sequence[FigurePrediction], n: int) -> float:
	"""Fraction of figures whose ground-truth section is in the top-n predictions.

	Raises:
	    InsufficientRanking: A row ranks fewer than min(n, section count) sections
	"""
	if not rows:
		return 0.0
	hits = 0
	for row in rows:
		if len(row.predicted_sections) < min(n, row.num_sections):
			raise InsufficientRanking(
				f'{row.doc_id}/{row.figure_index} ranks {len(row.predicted_sections)} '
				f'sections, need {n}'
			)
		hits += row.gt_section in row.predicted_sections[:n]
	return hits / len(rows)


def all_correct_rate(rows: Sequence[FigurePrediction]) -> float:
	"""Fraction of documents whose every figure has a correct top-1 section."""
	by_document: dict[str, list[bool]] = defaultdict(list)
	for row in rows:
		correct = bool(row.predicted_sections) and row.predicted_sections[0] == row.gt_section
		by_document[row.doc_id].append(correct)
	if not by_document:
		return 0.0
	return sum(all(flags) for flags in by_document.values()) / len(by_document)


def aggregate_metrics(rows: Sequence[FigurePrediction]) -> EvalAggregate:
	return EvalAggregate(
		r_at_1=recall_at_n(rows, 1),
		r_at_3=recall_at_n(rows, 3),
		all_r_at_1=all_correct_rate(rows),
		figure_count=len(rows),
		document_count=len({row.doc_id for row in rows}),
	)
