"""Tests for the human-annotation export and response import."""

import pandas as pd
import pytest

from figlink.data.models import AnnotationPackage, EvalReport, FigurePrediction
from figlink.errors import InsufficientItems, MalformedPayload
from figlink.evaluation.annotation import (
	export_annotation,
	import_responses,
	read_package,
	write_package,
)
from figlink.evaluation.metrics import aggregate_metrics

MODELS = ['figlink', 'zero_shot_dual', 'zero_shot_caption']


def _report(model: str, n_docs: int = 12, n_figures: int = 4) -> EvalReport:
	rows = [
		FigurePrediction(
			doc_id=f'doc{d:02d}',
			figure_index=k,
			gt_section=0,
			num_sections=3,
			predicted_sections=[0, 1, 2],
			top_sentence_section=0,
			top_sentence_index=k,
			top_sentence=f'{model} picks sentence {k} of doc{d:02d}.',
			image_ref=f'/images/doc{d:02d}_{k}.png',
			caption=f'Caption {k} of doc{d:02d}.',
		)
		for d in range(n_docs)
		for k in range(n_figures)
	]
	return EvalReport(aggregate=aggregate_metrics(rows), model=model, figures=rows)


@pytest.fixture
def package() -> AnnotationPackage:
	return export_annotation({model: _report(model) for model in MODELS}, seed=7, workers=2)


def _ranking(question, preference: list[str]) -> str:
	"""1-based display positions ordered by the given model preference."""
	if question.attention_check:
		rest = [p for p in range(len(question.candidates)) if p != question.expected_first]
		order = [question.expected_first, *rest]
	else:
		order = [question.provenance.index(model) for model in preference]
	return ' '.join(str(p + 1) for p in order)


def _responses(package, workers: dict[str, list[str]], failing: tuple[str, ...] = ()):
	rows = []
	for worker, preference in workers.items():
		for question in package.questions:
			ranking = _ranking(question, preference)
			if worker in failing and question.attention_check:
				ranking = ' '.join(reversed(ranking.split()))
			rows.append({'worker_id': worker, 'question_id': question.question_id, 'ranking': ranking})
	return pd.DataFrame(rows)


class TestExport:
	"""Questionnaire construction."""

	def test_question_counts(self, package):
		assert len(package.questions) == 43
		regular = [q for q in package.questions if not q.attention_check]
		checks = [q for q in package.questions if q.attention_check]
		assert [q.question_id for q in regular] == [f'q{n:03d}' for n in range(1, 41)]
		assert [q.question_id for q in checks] == ['check01', 'check02', 'check03']
		assert len({q.doc_id for q in regular}) <= 10
		assert len({(q.doc_id, q.figure_index) for q in regular}) == 40

	def test_permutation_recovers_provenance(self, package):
		for question in package.questions:
			if question.attention_check:
				continue
			assert sorted(question.permutation) == [0, 1, 2]
			for position, source in enumerate(question.permutation):
				assert question.provenance[position] == MODELS[source]
				assert question.candidates[position].startswith(MODELS[source] + ' ')

	def test_attention_check_answer(self, package):
		for question in package.questions:
			if question.attention_check:
				assert question.candidates[question.expected_first] == question.caption
				others = [c for p, c in enumerate(question.candidates) if p != question.expected_first]
				assert all(question.doc_id not in candidate for candidate in others)

	def test_deterministic(self, package):
		again = export_annotation({model: _report(model) for model in MODELS}, seed=7, workers=2)
		assert again == package
		assert sorted(package.worker_orders) == ['worker01', 'worker02']
		for order in package.worker_orders.values():
			assert sorted(order) == sorted(q.question_id for q in package.questions)

	def test_insufficient_items(self):
		sources = {model: _report(model, n_docs=5) for model in MODELS}
		with pytest.raises(InsufficientItems):
			export_annotation(sources)
		sources = {model: _report(model, n_figures=2) for model in MODELS}
		with pytest.raises(InsufficientItems):
			export_annotation(sources)

	def test_write_and_read(self, package, tmp_path):
		csv_path, sidecar_path = write_package(
			package, tmp_path / 'annotation.csv', tmp_path / 'annotation.json'
		)
		frame = pd.read_csv(csv_path)
		assert list(frame.columns) == [
			'question_id',
			'image_ref',
			'caption',
			'candidate_1',
			'candidate_2',
			'candidate_3',
		]
		assert len(frame) == 43
		assert read_package(sidecar_path) == package


class TestImport:
	"""Response aggregation."""

	def test_consistent_preference(self, package):
		summary = import_responses(package, _responses(package, {'w1': MODELS}))
		by_model = {entry.model: entry for entry in summary.models}
		assert by_model['figlink'].average_rank == 0.0
		assert by_model['figlink'].rank_shares == [100.0, 0.0, 0.0]
		assert by_model['zero_shot_dual'].average_rank == 1.0
		assert by_model['zero_shot_caption'].average_rank == 2.0
		assert by_model['figlink'].responses == 40

	def test_two_workers_average(self, package):
		workers = {
			'w1': ['figlink', 'zero_shot_dual', 'zero_shot_caption'],
			'w2': ['zero_shot_dual', 'figlink', 'zero_shot_caption'],
		}
		summary = import_responses(package, _responses(package, workers))
		by_model = {entry.model: entry for entry in summary.models}
		assert by_model['figlink'].average_rank == pytest.approx(0.5)
		assert by_model['figlink'].rank_shares == pytest.approx([50.0, 50.0, 0.0])
		assert by_model['zero_shot_dual'].average_rank == pytest.approx(0.5)
		assert by_model['zero_shot_caption'].rank_shares == pytest.approx([0.0, 0.0, 100.0])

	def test_failed_attention_check_drops_worker(self, package):
		workers = {'w1': MODELS, 'w2': list(reversed(MODELS))}
		summary = import_responses(package, _responses(package, workers, failing=('w2',)))
		assert summary.workers_kept == ['w1']
		assert summary.workers_dropped == ['w2']
		by_model = {entry.model: entry for entry in summary.models}
		assert by_model['figlink'].average_rank == 0.0

	def test_comma_separated_rankings(self, package, tmp_path):
		frame = _responses(package, {'w1': MODELS})
		frame['ranking'] = frame['ranking'].str.replace(' ', ',')
		path = tmp_path / 'responses.csv'
		frame.to_csv(path, index=False)
		summary = import_responses(package, path)
		assert summary.models[0].average_rank == 0.0

	def test_malformed_responses(self, package):
		with pytest.raises(MalformedPayload):
			import_responses(package, pd.DataFrame({'worker_id': ['w1'], 'ranking': ['1 2 3']}))
		with pytest.raises(MalformedPayload):
			import_responses(
				package,
				pd.DataFrame({'worker_id': ['w1'], 'question_id': ['q999'], 'ranking': ['1 2 3']}),
			)
		with pytest.raises(MalformedPayload):
			import_responses(
				package,
				pd.DataFrame({'worker_id': ['w1'], 'question_id': ['q001'], 'ranking': ['1 1 2']}),
			)
