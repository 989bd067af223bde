"""
Human-annotation package export and response import.

Export picks image/caption pairs from a seeded sample of articles, shows each
model's top-1 sentence in a shuffled order and records the permutation and
hidden provenance. Attention checks (the caption itself among two unrelated
sentences) are interleaved at seeded positions.

Import reads one row per (worker, question) with the displayed candidates
ordered by relevance as 1-based positions, e.g. ``"2 1 3"``. Workers failing
any attention check are dropped; ranks are 0-indexed (0 = most relevant).
"""

import json
import logging
import random
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import pandas as pd

from figlink.data.models import (
	AnnotationPackage,
	AnnotationQuestion,
	EvalReport,
	FigurePrediction,
	HumanEvalSummary,
	ModelHumanRank,
)
from figlink.errors import InsufficientItems, MalformedPayload

logger = logging.getLogger(__name__)

RESPONSE_COLUMNS = ('worker_id', 'question_id', 'ranking')
CHECK_PROVENANCE = 'attention_check'
DISTRACTOR_PROVENANCE = 'distractor'


def _eligible_items(
	sources: dict[str, EvalReport],
) -> dict[tuple[str, int], dict[str, FigurePrediction]]:
	"""Figures every source has a top-1 sentence for."""
	by_model = {
		model: {
			(row.doc_id, row.figure_index): row
			for row in report.figures
			if row.top_sentence
		}
		for model, report in sources.items()
	}
	shared = set.intersection(*(set(rows) for rows in by_model.values()))
	return {key: {model: by_model[model][key] for model in sources} for key in shared}


def _attention_check(
	number: int,
	rng: random.Random,
	anchor: FigurePrediction,
	distractor_pool: Sequence[str],
	width: int,
) -> AnnotationQuestion:
	candidates = [anchor.caption, *rng.sample(list(distractor_pool), width - 1)]
	permutation = rng.sample(range(width), width)
	provenance = [CHECK_PROVENANCE] + [DISTRACTOR_PROVENANCE] * (width - 1)
	return AnnotationQuestion(
		question_id=f'check{number:02d}',
		doc_id=anchor.doc_id,
		figure_index=anchor.figure_index,
		image_ref=anchor.image_ref,
		caption=anchor.caption,
		candidates=[candidates[p] for p in permutation],
		permutation=permutation,
		provenance=[provenance[p] for p in permutation],
		attention_check=True,
		expected_first=permutation.index(0),
	)


def export_annotation(
	sources: dict[str, EvalReport],
	n_items: int = 40,
	n_articles: int = 10,
	attention_checks: int = 3,
	seed: int = 0,
	workers: int = 0,
) -> AnnotationPackage:
	"""Build a ranking questionnaire from the top-1 sentences of several models.

	Args:
	    sources: Model name -> evaluation report, in the order candidates are listed
	    n_items: Image/caption pairs to ask about
	    n_articles: Articles the pairs are drawn from
	    attention_checks: Questions whose correct first choice is the caption itself
	    seed: Seed for article, item, candidate and question order sampling
	    workers: Number of per-worker question orders to record

	Raises:
	    InsufficientItems: Fewer articles or shared figures than requested
	"""
	if not sources:
		raise InsufficientItems('Annotation export needs at least one prediction source')
	models = list(sources)
	rng = random.Random(seed)
	items = _eligible_items(sources)

	articles = sorted({doc_id for doc_id, _ in items})
	if len(articles) < n_articles:
		raise InsufficientItems(
			f'{len(articles)} articles have predictions from every model, need {n_articles}',
			{'available': len(articles), 'requested': n_articles},
		)
	chosen_articles = set(rng.sample(articles, n_articles))
	pool = sorted(key for key in items if key[0] in chosen_articles)
	if len(pool) < n_items:
		raise InsufficientItems(
			f'{len(pool)} figures in {n_articles} sampled articles, need {n_items}',
			{'available': len(pool), 'requested': n_items},
		)

	questions = []
	for number, key in enumerate(rng.sample(pool, n_items), start=1):
		rows = items[key]
		first = rows[models[0]]
		permutation = rng.sample(range(len(models)), len(models))
		questions.append(
			AnnotationQuestion(
				question_id=f'q{number:03d}',
				doc_id=first.doc_id,
				figure_index=first.figure_index,
				image_ref=first.image_ref,
				caption=first.caption,
				candidates=[rows[models[p]].top_sentence for p in permutation],
				permutation=permutation,
				provenance=[models[p] for p in permutation],
			)
		)

	if attention_checks:
		width = max(len(models), 2)
		checks = []
		for number in range(1, attention_checks + 1):
			anchor_key = rng.choice(pool)
			anchor = items[anchor_key][models[0]]
			distractors = sorted(
				{
					row.top_sentence
					for key, rows in items.items()
					if key[0] != anchor.doc_id
					for row in rows.values()
				}
			)
			if len(distractors) < width - 1 or not anchor.caption.strip():
				raise InsufficientItems(
					f'Cannot build an unambiguous attention check for {anchor.doc_id}'
				)
			checks.append(_attention_check(number, rng, anchor, distractors, width))
		slots = set(rng.sample(range(len(questions) + len(checks)), len(checks)))
		merged, remaining, pending = [], iter(questions), iter(checks)
		for position in range(len(questions) + len(checks)):
			merged.append(next(pending) if position in slots else next(remaining))
		questions = merged

	question_ids = [question.question_id for question in questions]
	worker_orders = {
		f'worker{number:02d}': rng.sample(question_ids, len(question_ids))
		for number in range(1, workers + 1)
	}
	logger.info(
		f'Annotation package: {n_items} questions from {n_articles} articles, '
		f'{attention_checks} attention checks, {len(models)} models'
	)
	return AnnotationPackage(
		seed=seed, models=models, questions=questions, worker_orders=worker_orders
	)


def write_package(
	package: AnnotationPackage, csv_path: str | Path, sidecar_path: str | Path
) -> tuple[Path, Path]:
	"""CSV shown to annotators (one row per question) plus the JSON sidecar.

	The CSV carries no provenance; the sidecar holds permutations, provenance
	and attention-check answers.
	"""
	csv_path, sidecar_path = Path(csv_path), Path(sidecar_path)
	width = max(len(question.candidates) for question in package.questions)
	rows = []
	for question in package.questions:
		row = {
			'question_id': question.question_id,
			'image_ref': question.image_ref,
			'caption': question.caption,
		}
		for position in range(width):
			row[f'candidate_{position + 1}'] = (
				question.candidates[position] if position < len(question.candidates) else ''
			)
		rows.append(row)
	csv_path.parent.mkdir(parents=True, exist_ok=True)
	pd.DataFrame(rows).to_csv(csv_path, index=False, lineterminator='\n')
	sidecar_path.parent.mkdir(parents=True, exist_ok=True)
	sidecar_path.write_text(
		json.dumps(package.model_dump(mode='json'), indent=2, ensure_ascii=False) + '\n',
		encoding='utf-8',
	)
	return csv_path, sidecar_path


def read_package(sidecar_path: str | Path) -> AnnotationPackage:
	return AnnotationPackage.model_validate_json(Path(sidecar_path).read_text(encoding='utf-8'))


def _parse_ranking(value: str, width: int, question_id: str) -> list[int]:
	try:
		positions = [int(token) - 1 for token in str(value).replace(',', ' ').split()]
	except ValueError as e:
		raise MalformedPayload(f'Unreadable ranking {value!r} for {question_id}') from e
	if sorted(positions) != list(range(width)):
		raise MalformedPayload(
			f'Ranking {value!r} for {question_id} is not a permutation of 1..{width}'
		)
	return positions


def import_responses(
	package: AnnotationPackage, responses: pd.DataFrame | str | Path
) -> HumanEvalSummary:
	"""Average rank and rank-position shares per model.

	Raises:
	    MalformedPayload: Missing columns, unknown question ids or invalid rankings
	"""
	frame = responses if isinstance(responses, pd.DataFrame) else pd.read_csv(responses)
	missing = [column for column in RESPONSE_COLUMNS if column not in frame.columns]
	if missing:
		raise MalformedPayload(f'Response table lacks columns: {", ".join(missing)}')
	questions = {question.question_id: question for question in package.questions}

	parsed: dict[str, list[tuple[AnnotationQuestion, list[int]]]] = defaultdict(list)
	for record in frame.itertuples(index=False):
		question = questions.get(str(record.question_id))
		if question is None:
			raise MalformedPayload(f'Unknown question id {record.question_id!r}')
		ranking = _parse_ranking(record.ranking, len(question.candidates), question.question_id)
		parsed[str(record.worker_id)].append((question, ranking))

	kept, dropped = [], []
	for worker, answers in sorted(parsed.items()):
		failed = any(
			question.attention_check and ranking[0] != question.expected_first
			for question, ranking in answers
		)
		(dropped if failed else kept).append(worker)
	if dropped:
		logger.warning(f'Dropped {len(dropped)} workers failing attention checks: {dropped}')

	ranks = pd.DataFrame(
		[
			{'model': question.provenance[position], 'rank': rank}
			for worker in kept
			for question, ranking in parsed[worker]
			if not question.attention_check
			for rank, position in enumerate(ranking)
		],
		columns=['model', 'rank'],
	)

	width = len(package.models)
	summaries = []
	for model in package.models:
		model_ranks = ranks.loc[ranks['model'] == model, 'rank']
		if model_ranks.empty:
			logger.warning(f'No kept responses rank {model}')
			continue
		shares = model_ranks.value_counts(normalize=True)
		summaries.append(
			ModelHumanRank(
				model=model,
				average_rank=float(model_ranks.mean()),
				rank_shares=[100.0 * float(shares.get(rank, 0.0)) for rank in range(width)],
				responses=int(model_ranks.size),
			)
		)
	return HumanEvalSummary(models=summaries, workers_kept=kept, workers_dropped=dropped)
