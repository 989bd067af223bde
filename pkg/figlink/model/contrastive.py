"""
Pair construction, the salience-aware contrastive objective and inference ranking.

For an anchor figure the positive query is its genuine image/caption pair.
Normal negatives pair that query with the candidates of every other section;
hard negatives pair each swapped query (exactly one of image or caption
replaced) with the ground-truth section's candidates. A section's score for a
query is the best candidate cosine.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import torch
import torch.nn.functional as F

from figlink.config import FusionMode, LossMode
from figlink.data.models import Document, RankedSentence
from figlink.errors import EmptyCandidates, InvalidTemperature, MissingSlot
from figlink.model.fusion import late_fusion_score
from figlink.model.sequence import ContextSequence, swapped_pairs

logger = logging.getLogger(__name__)

RAW_RATIO_EPS = 1e-6


class QueryRole(Enum):
	POSITIVE = 'positive'
	HARD_NEGATIVE = 'hard_negative'


@dataclass
class Query:
	# [d] fused query, or [2, d] image/caption rows under late fusion
	embedding: torch.Tensor
	image_index: int
	caption_index: int
	role: QueryRole


@dataclass
class PairSet:
	anchor: int
	gt_section: int
	positive: Query
	positive_candidates: torch.Tensor  # [k, d]
	normal_negatives: list[tuple[int, torch.Tensor]] = field(default_factory=list)
	hard_negatives: list[Query] = field(default_factory=list)

	@property
	def positives(self) -> list[tuple[Query, torch.Tensor]]:
		return [(self.positive, candidate) for candidate in self.positive_candidates]

	@property
	def normal_pairs(self) -> list[tuple[Query, torch.Tensor]]:
		return [
			(self.positive, candidate)
			for _, candidates in self.normal_negatives
			for candidate in candidates
		]

	@property
	def hard_pairs(self) -> list[tuple[Query, torch.Tensor]]:
		return [
			(query, candidate)
			for query in self.hard_negatives
			for candidate in self.positive_candidates
		]

	def counts(self) -> tuple[int, int, int]:
		return len(self.positives), len(self.normal_pairs), len(self.hard_pairs)


@dataclass
class LossValue:
	value: torch.Tensor
	positive_score: float
	negative_scores: list[float]


def query_for(
	sequence: ContextSequence, image_index: int, caption_index: int, role: QueryRole
) -> Query:
	x = sequence.require_outputs()
	if sequence.fusion is FusionMode.EARLY:
		embedding = x[sequence.pair_position(image_index, caption_index)]
	else:
		embedding = torch.stack(
			[
				x[sequence.image_position(image_index)],
				x[sequence.caption_position(caption_index)],
			]
		)
	return Query(embedding, image_index, caption_index, role)


def build_pairs(
	document: Document,
	anchor: int,
	sequence: ContextSequence,
	K: Optional[int] = None,
	hard: bool = True,
	normal: bool = True,
) -> PairSet:
	"""Positive, normal-negative and hard-negative pairs for one anchor figure.

	Raises:
	    MissingSlot: The contextual output lacks a required embedding
	"""
	x = sequence.require_outputs()
	gt_section = document.figures[anchor].gt_section_index
	gt_positions = sequence.section_positions(gt_section)[:K]
	if not gt_positions:
		raise MissingSlot(f'No candidates for ground-truth section {gt_section}')

	normal_negatives = []
	if normal:
		for j in sequence.section_indices:
			if j != gt_section:
				normal_negatives.append((j, x[sequence.section_positions(j)[:K]]))

	hard_negatives = []
	if hard:
		hard_negatives = [
			query_for(sequence, k, i, QueryRole.HARD_NEGATIVE)
			for k, i in swapped_pairs(len(document.figures), anchor)
		]

	return PairSet(
		anchor=anchor,
		gt_section=gt_section,
		positive=query_for(sequence, anchor, anchor, QueryRole.POSITIVE),
		positive_candidates=x[gt_positions],
		normal_negatives=normal_negatives,
		hard_negatives=hard_negatives,
	)


def section_score(
	query: Query,
	candidates: torch.Tensor,
	reduce: str = 'max',
	alpha: Optional[torch.Tensor | float] = None,
) -> torch.Tensor:
	"""Best (or mean) candidate cosine for the query.

	Raises:
	    EmptyCandidates: No candidates
	"""
	if candidates.shape[0] == 0:
		raise EmptyCandidates('Section has no candidates to score')
	if query.embedding.dim() == 2:
		return late_fusion_score(
			candidates,
			query.embedding[0],
			query.embedding[1],
			0.5 if alpha is None else alpha,
			reduce,
		)
	sims = F.cosine_similarity(candidates, query.embedding.unsqueeze(0), dim=-1)
	return sims.max() if reduce == 'max' else sims.mean()


def contrastive_loss(
	positive: torch.Tensor,
	negatives: torch.Tensor,
	temperature: float = 0.07,
	mode: LossMode = LossMode.INFONCE,
) -> torch.Tensor:
	"""-log(a / (a + sum b)) for one positive section score and its negatives.

	In infoNCE mode a = exp(S / t); in raw-ratio mode scores are mapped into
	(0, 1] with (1 + S) / 2 and used directly.

	Raises:
	    InvalidTemperature: Temperature not strictly positive
	"""
	if not temperature > 0:
		raise InvalidTemperature(f'Temperature must be positive, got {temperature}')
	if negatives.numel() == 0:
		return positive * 0.0
	if mode is LossMode.INFONCE:
		# log(1 + sum exp((S_neg - S_pos) / t))
		return F.softplus(torch.logsumexp((negatives.reshape(-1) - positive) / temperature, dim=0))
	a = ((1 + positive) / 2).clamp_min(RAW_RATIO_EPS)
	b = ((1 + negatives.reshape(-1)) / 2).clamp_min(RAW_RATIO_EPS)
	return torch.log1p(b.sum() / a)


def compute_loss(
	pairs: PairSet,
	temperature: float = 0.07,
	mode: LossMode = LossMode.INFONCE,
	reduce: str = 'max',
	alpha: Optional[torch.Tensor | float] = None,
) -> LossValue:
	"""One S* per normal-negative section and per hard-negative query."""
	positive = section_score(pairs.positive, pairs.positive_candidates, reduce, alpha)
	negative_scores = [
		section_score(pairs.positive, candidates, reduce, alpha)
		for _, candidates in pairs.normal_negatives
	]
	negative_scores += [
		section_score(query, pairs.positive_candidates, reduce, alpha)
		for query in pairs.hard_negatives
	]
	negatives = torch.stack(negative_scores) if negative_scores else positive.new_zeros(0)
	return LossValue(
		value=contrastive_loss(positive, negatives, temperature, mode),
		positive_score=float(positive.detach()),
		negative_scores=[float(score.detach()) for score in negative_scores],
	)


def rank_inference(
	query_figure: int,
	document: Document,
	sequence: ContextSequence,
	alpha: Optional[torch.Tensor | float] = None,
) -> list[RankedSentence]:
	"""Every candidate in the sequence by descending cosine to the query.

	Ties are broken by (section index, sentence index).
	"""
	if not 0 <= query_figure < len(document.figures):
		raise MissingSlot(f'Document {document.id} has no figure {query_figure}')
	x = sequence.require_outputs()
	query = query_for(sequence, query_figure, query_figure, QueryRole.POSITIVE)
	ranked = []
	for j in sequence.section_indices:
		for position in sequence.section_positions(j):
			score = section_score(query, x[position : position + 1], 'max', alpha)
			ranked.append(
				RankedSentence(
					section_index=j,
					sentence_index=sequence.slots[position].sentence_index,
					score=float(score.detach()),
				)
			)
	ranked.sort(
		key=lambda entry: (
			-entry.score,
			entry.section_index,
			-1 if entry.sentence_index is None else entry.sentence_index,
		)
	)
	return ranked


def section_ranking(ranked: list[RankedSentence], num_sections: int) -> list[int]:
	"""Sections in order of their best sentence; the first is the section prediction."""
	order: list[int] = []
	for entry in ranked:
		if entry.section_index not in order:
			order.append(entry.section_index)
	order += [j for j in range(num_sections) if j not in order]
	return order
