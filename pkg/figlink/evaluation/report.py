"""Per-figure predictions and aggregate recall for any ranker over a document set."""

import json
import logging
from pathlib import Path
from typing import Any, Optional, Protocol, Sequence

from pydantic import ValidationError
from torch import nn

from figlink.config import ModalityMask
from figlink.data.models import Document, EvalReport, FigurePrediction, RankedSentence
from figlink.encoders.features import DocumentFeatures, FeatureStore
from figlink.errors import MalformedPayload, MissingSlot, UnreadableInput
from figlink.evaluation.metrics import aggregate_metrics
from figlink.model.contrastive import section_ranking
from figlink.utils.progress import progress

logger = logging.getLogger(__name__)

TOP_SECTIONS = 3


class Ranker(Protocol):
	def rank(self, features: DocumentFeatures, query_figure: int) -> list[RankedSentence]: ...


def predict_figure(
	ranker: Ranker, features: DocumentFeatures, figure_index: int
) -> tuple[FigurePrediction, list[RankedSentence]]:
	document = features.document
	if not 0 <= figure_index < len(document.figures):
		raise MissingSlot(
			f'Document {document.id} has no figure {figure_index}',
			{'doc_id': document.id, 'figures': len(document.figures)},
		)
	figure = document.figures[figure_index]
	ranked = ranker.rank(features, figure_index)
	sections = section_ranking(ranked, len(document.sections))
	top = ranked[0]
	top_text = None
	if top.sentence_index is not None:
		top_text = document.sections[top.section_index].sentences[top.sentence_index].text
	prediction = FigurePrediction(
		doc_id=document.id,
		figure_index=figure_index,
		gt_section=figure.gt_section_index,
		num_sections=len(document.sections),
		predicted_sections=sections[:TOP_SECTIONS],
		top_sentence_section=top.section_index,
		top_sentence_index=top.sentence_index,
		top_sentence=top_text,
		image_ref=figure.image_ref,
		caption=figure.caption,
	)
	return prediction, ranked


def evaluate(
	ranker: Ranker,
	documents: Sequence[Document],
	store: FeatureStore,
	mask: ModalityMask = ModalityMask.BOTH,
	config: Optional[dict[str, Any]] = None,
	model_name: str = 'figlink',
) -> EvalReport:
	"""Rank every figure of every document and aggregate R@1, R@3 and A-R@1."""
	was_training = isinstance(ranker, nn.Module) and ranker.training
	if isinstance(ranker, nn.Module):
		ranker.eval()
	rows = []
	try:
		for number, document in enumerate(documents, start=1):
			features = store.get(document, mask)
			for figure_index in range(len(document.figures)):
				rows.append(predict_figure(ranker, features, figure_index)[0])
			progress.advance('eval', number, len(documents), detail=model_name)
	finally:
		if was_training:
			ranker.train()

	aggregate = aggregate_metrics(rows)
	progress.finish('eval', f'R@1 {aggregate.r_at_1:.3f}')
	logger.info(
		f'{model_name}: R@1={aggregate.r_at_1:.3f} R@3={aggregate.r_at_3:.3f} '
		f'A-R@1={aggregate.all_r_at_1:.3f} over {aggregate.figure_count} figures'
	)
	return EvalReport(aggregate=aggregate, model=model_name, config=config or {}, figures=rows)


def write_report(report: EvalReport, path: str | Path) -> Path:
	"""JSON with the aggregate block first, then per-figure rows."""
	path = Path(path)
	path.parent.mkdir(parents=True, exist_ok=True)
	path.write_text(
		json.dumps(report.model_dump(mode='json'), indent=2, ensure_ascii=False) + '\n',
		encoding='utf-8',
	)
	return path


def read_report(path: str | Path) -> EvalReport:
	path = Path(path)
	try:
		text = path.read_text(encoding='utf-8')
	except OSError as e:
		raise UnreadableInput(f'Cannot read report {path}: {e}', {'path': str(path)}) from e
	try:
		return EvalReport.model_validate_json(text)
	except ValidationError as e:
		raise MalformedPayload(f'{path} is not an evaluation report', {'path': str(path)}) from e
