"""Tests for pair construction, the contrastive objective and inference ranking."""

import math
import random

import pytest
import torch

from figlink.config import FusionMode, LossMode
from figlink.errors import EmptyCandidates, InvalidTemperature, MissingSlot
from figlink.model.contrastive import (
	Query,
	QueryRole,
	build_pairs,
	compute_loss,
	contrastive_loss,
	rank_inference,
	section_ranking,
	section_score,
)
from figlink.model.sequence import ContextSequence, plan_slots
from tests.helpers import build_document


def _document(num_figures: int = 3, gt: int = 2):
	return build_document(
		'pairs',
		[['A one.', 'A two.'], ['B one.'], ['C one.', 'C two.', 'C three.']],
		[(f'fig{k}.png', f'Caption {k}.', gt if k == 0 else 0) for k in range(num_figures)],
	)


def _sequence(candidates, num_figures, query, outputs=None, dim=6, **options):
	slots = plan_slots(candidates, num_figures, query, **options)
	sequence = ContextSequence(slots, query, fusion=options.get('fusion', FusionMode.EARLY))
	if outputs is None:
		torch.manual_seed(0)
		outputs = torch.randn(len(slots), dim)
	sequence.outputs = outputs
	return sequence


def _random_document(rng: random.Random, min_sentences: int = 1, max_sentences: int = 3):
	"""Random sizes; every section holds between min and max sentences."""
	sizes = [rng.randint(min_sentences, max_sentences) for _ in range(rng.randint(2, 4))]
	num_figures = rng.randint(1, 3)
	document = build_document(
		f'random{rng.random():.6f}',
		[[f'Sentence {i} of {j}.' for i in range(size)] for j, size in enumerate(sizes)],
		[(f'fig{k}.png', f'Caption {k}.', rng.randrange(len(sizes))) for k in range(num_figures)],
	)
	return document, [list(range(size)) for size in sizes]


class TestContrastiveLoss:
	"""Scalar objective on section scores."""

	def test_infonce_value(self):
		positive = torch.tensor(0.9)
		negatives = torch.tensor([0.1, 0.2])
		expected = -math.log(
			math.exp(0.9 / 0.07) / (math.exp(0.9 / 0.07) + math.exp(0.1 / 0.07) + math.exp(0.2 / 0.07))
		)
		assert float(contrastive_loss(positive, negatives, 0.07)) == pytest.approx(expected, rel=1e-5)

	def test_raw_ratio_value(self):
		loss = contrastive_loss(
			torch.tensor(0.5), torch.tensor([0.0]), 0.07, mode=LossMode.RAW_RATIO
		)
		assert float(loss) == pytest.approx(-math.log(0.6), rel=1e-5)

	def test_perfect_separation_near_zero(self):
		loss = contrastive_loss(torch.tensor(1.0), torch.tensor([-1.0, -1.0]), 0.07)
		assert float(loss) < 1e-6

	def test_no_negatives(self):
		positive = torch.tensor(0.4, requires_grad=True)
		loss = contrastive_loss(positive, torch.zeros(0))
		assert float(loss) == 0.0
		loss.backward()
		assert float(positive.grad) == 0.0

	def test_invalid_temperature(self):
		with pytest.raises(InvalidTemperature):
			contrastive_loss(torch.tensor(0.5), torch.tensor([0.1]), 0.0)
		with pytest.raises(InvalidTemperature):
			contrastive_loss(torch.tensor(0.5), torch.tensor([0.1]), -1.0)

	def test_gradients_match_finite_differences(self):
		positive = torch.tensor(0.3, dtype=torch.float64, requires_grad=True)
		negatives = torch.tensor([0.1, -0.2, 0.5], dtype=torch.float64, requires_grad=True)
		assert torch.autograd.gradcheck(
			lambda p, n: contrastive_loss(p, n, 0.5), (positive, negatives)
		)

	def test_dominant_positive_stays_positive(self):
		negatives = [-0.5, -0.4, -0.3]
		loss = contrastive_loss(torch.tensor(0.95), torch.tensor(negatives), 0.07)
		expected = math.log1p(sum(math.exp((b - 0.95) / 0.07) for b in negatives))
		assert float(loss) > 0.0
		assert float(loss) == pytest.approx(expected, rel=1e-4)

	@pytest.mark.parametrize('mode', list(LossMode))
	def test_positive_and_increasing_in_negatives(self, mode):
		rng = random.Random(3)
		for _ in range(300):
			positive = torch.tensor(rng.uniform(-1.0, 1.0), dtype=torch.float64)
			negatives = torch.tensor(
				[rng.uniform(-1.0, 0.9) for _ in range(rng.randint(1, 8))], dtype=torch.float64
			)
			loss = contrastive_loss(positive, negatives, 0.07, mode)
			assert float(loss) > 0.0
			raised = negatives.clone()
			raised[rng.randrange(len(raised))] += 0.05
			assert float(contrastive_loss(positive, raised, 0.07, mode)) > float(loss)


class TestSectionScore:
	"""Best-candidate cosine."""

	def test_max_and_mean(self):
		query = Query(torch.tensor([1.0, 0.0]), 0, 0, QueryRole.POSITIVE)
		candidates = torch.tensor([[1.0, 0.0], [0.0, 1.0]])
		assert float(section_score(query, candidates)) == pytest.approx(1.0)
		assert float(section_score(query, candidates, reduce='mean')) == pytest.approx(0.5)

	def test_empty_candidates(self):
		query = Query(torch.tensor([1.0, 0.0]), 0, 0, QueryRole.POSITIVE)
		with pytest.raises(EmptyCandidates):
			section_score(query, torch.zeros(0, 2))

	def test_late_query_mixes_components(self):
		query = Query(torch.tensor([[1.0, 0.0], [0.0, 1.0]]), 0, 0, QueryRole.POSITIVE)
		candidates = torch.tensor([[1.0, 0.0]])
		assert float(section_score(query, candidates)) == pytest.approx(0.5)
		assert float(section_score(query, candidates, alpha=0.8)) == pytest.approx(0.8)


class TestBuildPairs:
	"""Pair counts per anchor."""

	def test_counts(self):
		document = _document()
		sequence = _sequence([[0, 1], [0], [0, 1, 2]], 3, 0)
		pairs = build_pairs(document, 0, sequence)
		assert pairs.gt_section == 2
		# 3 gt candidates; 2 + 1 candidates elsewhere; 4 swapped queries x 3 candidates
		assert pairs.counts() == (3, 3, 12)
		assert {(q.image_index, q.caption_index) for q in pairs.hard_negatives} == {
			(0, 1),
			(0, 2),
			(1, 0),
			(2, 0),
		}

	def test_candidate_prefix(self):
		pairs = build_pairs(_document(), 0, _sequence([[0, 1], [0], [0, 1, 2]], 3, 0), K=2)
		assert pairs.counts() == (2, 3, 8)

	def test_toggles(self):
		sequence = _sequence([[0, 1], [0], [0, 1, 2]], 3, 0)
		assert build_pairs(_document(), 0, sequence, hard=False).counts() == (3, 3, 0)
		assert build_pairs(_document(), 0, sequence, normal=False).counts() == (3, 0, 12)

	def test_single_figure_has_no_hard_negatives(self):
		sequence = _sequence([[0, 1], [0], [0]], 1, 0)
		assert build_pairs(_document(num_figures=1), 0, sequence).counts() == (1, 3, 0)

	def test_counts_on_random_documents(self):
		rng = random.Random(11)
		for _ in range(100):
			K = rng.randint(1, 4)
			document, candidates = _random_document(rng, min_sentences=K, max_sentences=6)
			N, M = len(document.sections), len(document.figures)
			anchor = rng.randrange(M)
			sequence = _sequence(candidates, M, anchor)
			pairs = build_pairs(document, anchor, sequence, K=K)
			assert pairs.counts() == (K, (N - 1) * K, 2 * (M - 1) * K)

	@pytest.mark.parametrize('fusion', list(FusionMode))
	def test_loss_gradients_through_embeddings(self, fusion):
		rng = random.Random(17)
		generator = torch.Generator().manual_seed(17)
		for _ in range(25):
			document, candidates = _random_document(rng)
			anchor = rng.randrange(len(document.figures))
			slots = plan_slots(candidates, len(document.figures), anchor, fusion)
			outputs = torch.randn(
				len(slots), 4, dtype=torch.float64, generator=generator, requires_grad=True
			)

			def loss_of(x, slots=slots, document=document, anchor=anchor):
				sequence = ContextSequence(slots, anchor, fusion=fusion)
				sequence.outputs = x
				return compute_loss(build_pairs(document, anchor, sequence)).value

			assert torch.autograd.gradcheck(loss_of, (outputs,), atol=1e-6, rtol=1e-4)

	def test_positive_is_genuine_pair(self):
		sequence = _sequence([[0, 1], [0], [0, 1, 2]], 3, 0)
		pairs = build_pairs(_document(), 0, sequence)
		assert torch.equal(pairs.positive.embedding, sequence.outputs[sequence.pair_position(0, 0)])

	def test_loss_negative_scores(self):
		sequence = _sequence([[0, 1], [0], [0, 1, 2]], 3, 0)
		loss = compute_loss(build_pairs(_document(), 0, sequence))
		assert len(loss.negative_scores) == 2 + 4
		assert math.isfinite(float(loss.value))

	def test_uncontextualized_sequence(self):
		sequence = ContextSequence(plan_slots([[0], [0], [0]], 3, 0), 0)
		with pytest.raises(MissingSlot):
			build_pairs(_document(), 0, sequence)


class TestRankInference:
	"""Inference ordering."""

	def test_ties_break_by_section_then_sentence(self):
		document = build_document('ties', [['a.', 'b.'], ['c.']], [('x.png', 'Cap.', 0)])
		outputs = torch.tensor(
			[
				[1.0, 0.0],  # section 0 sentence 0
				[0.0, 1.0],  # section 0 sentence 1
				[2.0, 0.0],  # section 1 sentence 0, same direction
				[1.0, 0.0],  # query pair
			]
		)
		sequence = _sequence([[0, 1], [0]], 1, 0, outputs=outputs, hard_negatives=False)
		ranking = rank_inference(0, document, sequence)
		assert [(r.section_index, r.sentence_index) for r in ranking] == [(0, 0), (1, 0), (0, 1)]
		assert ranking[0].score == pytest.approx(1.0)
		assert ranking[2].score == pytest.approx(0.0)

	def test_unknown_query(self):
		document = build_document('one', [['a.']], [('x.png', 'Cap.', 0)])
		sequence = _sequence([[0]], 1, 0, hard_negatives=False)
		with pytest.raises(MissingSlot):
			rank_inference(1, document, sequence)

	def test_section_ranking(self):
		document = build_document('ties', [['a.', 'b.'], ['c.'], ['d.']], [('x.png', 'Cap.', 0)])
		outputs = torch.tensor([[0.0, 1.0], [1.0, 0.1], [1.0, 0.0], [1.0, 0.5], [1.0, 0.0]])
		sequence = _sequence([[0, 1], [0], [0]], 1, 0, outputs=outputs, hard_negatives=False)
		ranking = rank_inference(0, document, sequence)
		assert section_ranking(ranking, 3) == [1, 0, 2]
		assert section_ranking(ranking[:1], 3) == [1, 0, 2]

	def test_order_unchanged_by_positive_row_scaling(self):
		rng = random.Random(23)
		generator = torch.Generator().manual_seed(23)
		for _ in range(200):
			document, candidates = _random_document(rng, max_sentences=5)
			M = len(document.figures)
			query = rng.randrange(M)
			slots = plan_slots(candidates, M, query, hard_negatives=False)
			outputs = torch.randn(len(slots), 6, generator=generator)
			# powers of two keep every cosine bit-identical
			scales = torch.tensor([2.0 ** rng.randint(-6, 6) for _ in slots]).unsqueeze(1)
			expected = rank_inference(
				query, document, _sequence(candidates, M, query, outputs, hard_negatives=False)
			)
			scaled = rank_inference(
				query,
				document,
				_sequence(candidates, M, query, outputs * scales, hard_negatives=False),
			)
			key = [(entry.section_index, entry.sentence_index) for entry in expected]
			assert [(entry.section_index, entry.sentence_index) for entry in scaled] == key
