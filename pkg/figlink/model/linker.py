"""
The assembled figure-to-section linking model.

One forward pass per query figure: section candidates (salient for that
figure), entity ranks against its caption and all fused figure pairs share a
single document sequence. Ablation toggles decide which parameter groups
exist at all, so a disabled component is absent from checkpoints.
"""

import logging
from typing import Optional

import numpy as np
import torch
from torch import nn

from figlink.config import ConfigManager, FusionMode, ModalityMask, SectionStrategy
from figlink.data.models import RankedSentence
from figlink.encoders.features import DocumentFeatures
from figlink.encoders.sections import SectionAggregator
from figlink.errors import DimensionMismatch, MissingSlot
from figlink.model.contrastive import LossValue, build_pairs, compute_loss, rank_inference
from figlink.model.fusion import CrossModalFusion, LateFusionScorer, LayoutTransformer
from figlink.model.layout import LayoutEmbedding, ranks_from_counts
from figlink.model.sequence import ContextSequence, Slot, SlotKind, plan_slots

logger = logging.getLogger(__name__)


def _tensor(vector: np.ndarray) -> torch.Tensor:
	return torch.from_numpy(np.asarray(vector, dtype=np.float32))


class FigureLinker(nn.Module):
	def __init__(self, config: ConfigManager, encoder_dim: int):
		super().__init__()
		dim = config.model.dim
		if encoder_dim != dim:
			logger.error(f'Encoder width {encoder_dim} does not match model.dim {dim}')
			raise DimensionMismatch(
				f'Encoder produces {encoder_dim}-dimensional vectors but model.dim is {dim}',
				{'encoder_dim': encoder_dim, 'model_dim': dim},
			)
		self.config = config
		model, train = config.model, config.train

		self.layout = (
			LayoutEmbedding(
				dim,
				model.max_sections,
				model.max_figures,
				model.entity_table,
				use_entity=train.entity_check,
				entity_signal=model.entity_signal,
			)
			if train.layout_info
			else None
		)
		self.sections = (
			SectionAggregator(dim, model.heads, model.ff_mult, model.dropout)
			if train.strategy is SectionStrategy.WEIGHTED_AVG
			else None
		)

		masks = (train.modality_mask, config.inference_mask)
		missing = {}
		if not all(mask.uses_image for mask in masks):
			missing['image'] = nn.Parameter(torch.randn(dim) * 0.02)
		if not all(mask.uses_caption for mask in masks):
			missing['caption'] = nn.Parameter(torch.randn(dim) * 0.02)
		self.missing = nn.ParameterDict(missing) if missing else None

		fusion = {}
		if train.fusion is FusionMode.EARLY:
			fusion['cross'] = CrossModalFusion(
				dim, model.cross_depth, model.heads, model.ff_mult, model.dropout
			)
		fusion['layout'] = LayoutTransformer(
			dim, model.layout_depth, model.heads, model.ff_mult, model.dropout
		)
		self.fusion = nn.ModuleDict(fusion)
		self.late = LateFusionScorer() if train.fusion is FusionMode.LATE else None

		self._entity_cache: dict[tuple[str, ModalityMask, int], tuple[list[int], list[int]]] = {}
		logger.info(
			f'FigureLinker assembled: {sum(p.numel() for p in self.parameters())} parameters, '
			f'layout={train.layout_info}, entity={train.entity_check}, '
			f'fusion={train.fusion.value}, strategy={train.strategy.value}'
		)

	@property
	def reduce(self) -> str:
		"""Section score over candidates: max, or mean without the salience-aware loss."""
		return 'max' if self.config.train.salience_loss else 'mean'

	@property
	def alpha(self) -> Optional[torch.Tensor]:
		return self.late.alpha if self.late is not None else None

	def entity_ranks(self, features: DocumentFeatures, figure_index: int) -> tuple[list[int], list[int]]:
		"""(ranks, shared counts) of every section for one query caption, cached."""
		key = (features.document.id, features.mask, figure_index)
		if key not in self._entity_cache:
			counts = features.shared_entity_counts(figure_index)
			ranks = ranks_from_counts(counts)
			assert sorted(ranks) == list(range(len(ranks)))
			self._entity_cache[key] = (ranks, counts)
		return self._entity_cache[key]

	def section_candidates(
		self, features: DocumentFeatures, query_figure: int, inference: bool = False
	) -> list[list[Optional[int]]]:
		strategy = self.config.train.strategy
		candidates: list[list[Optional[int]]] = []
		for j in range(features.num_sections):
			if strategy is SectionStrategy.SALIENT:
				if inference:
					cap = self.config.sequence.inference_cap
					candidates.append(list(features.inference_indices(query_figure, j, cap)))
				else:
					candidates.append(list(features.salient_indices(query_figure, j, self.config.train.K)))
			elif strategy is SectionStrategy.FIRST:
				candidates.append([0])
			else:
				candidates.append([None])
		return candidates

	def _section_content(self, features: DocumentFeatures, slot: Slot) -> torch.Tensor:
		j = slot.section_index
		if slot.sentence_index is not None:
			return _tensor(features.sentence_vectors[j][slot.sentence_index])
		if self.sections is not None:
			return self.sections(_tensor(features.sentence_vectors[j]))
		return _tensor(features.section_vectors[j])

	def _image_content(self, features: DocumentFeatures, k: int) -> torch.Tensor:
		if features.image_vectors is None:
			return self.missing['image']
		return _tensor(features.image_vectors[k])

	def _caption_content(self, features: DocumentFeatures, i: int) -> torch.Tensor:
		if features.caption_vectors is None:
			return self.missing['caption']
		return _tensor(features.caption_vectors[i])

	def build_sequence(
		self, features: DocumentFeatures, query_figure: int, inference: bool = False
	) -> ContextSequence:
		"""Layout-embedded input sequence for one query figure."""
		document = features.document
		if not 0 <= query_figure < features.num_figures:
			raise MissingSlot(f'Document {document.id} has no figure {query_figure}')
		train = self.config.train
		slots = plan_slots(
			self.section_candidates(features, query_figure, inference),
			features.num_figures,
			query_figure,
			train.fusion,
			self.config.sequence.pairs,
			hard_negatives=self.config.negatives.hard and not inference,
		)
		section_slots = [slot for slot in slots if slot.kind is SlotKind.SECTION]
		figure_slots = slots[len(section_slots) :]

		sections = torch.stack([self._section_content(features, slot) for slot in section_slots])
		if self.layout is not None:
			ranks, counts = self.entity_ranks(features, query_figure)
			entity_rows = self.layout.entity_indices(ranks, counts)
			sections = self.layout.sections(
				sections,
				torch.tensor([slot.section_index for slot in section_slots]),
				torch.tensor([entity_rows[slot.section_index] for slot in section_slots]),
			)
		parts = [sections]

		if train.fusion is FusionMode.EARLY:
			image_ids = [slot.image_index for slot in figure_slots]
			caption_ids = [slot.caption_index for slot in figure_slots]
			images = torch.stack([self._image_content(features, k) for k in image_ids])
			captions = torch.stack([self._caption_content(features, i) for i in caption_ids])
			if self.layout is not None:
				images = self.layout.images(images, torch.tensor(image_ids))
				captions = self.layout.captions(captions, torch.tensor(caption_ids))
			parts.append(self.fusion['cross'](images, captions))
		else:
			image_ids = [slot.image_index for slot in figure_slots if slot.kind is SlotKind.IMAGE]
			caption_ids = [
				slot.caption_index for slot in figure_slots if slot.kind is SlotKind.CAPTION
			]
			images = torch.stack([self._image_content(features, k) for k in image_ids])
			captions = torch.stack([self._caption_content(features, i) for i in caption_ids])
			if self.layout is not None:
				images = self.layout.images(images, torch.tensor(image_ids))
				captions = self.layout.captions(captions, torch.tensor(caption_ids))
			parts += [images, captions]

		return ContextSequence(slots, query_figure, torch.cat(parts), train.fusion)

	def contextualize(self, sequence: ContextSequence, inference: bool = False) -> ContextSequence:
		cap = (
			self.config.inference_sequence_cap()
			if inference
			else self.config.training_sequence_cap()
		)
		sequence.outputs = self.fusion['layout'](sequence.inputs, cap)
		return sequence

	def forward(self, features: DocumentFeatures, anchor: int) -> LossValue:
		"""Loss for one anchor figure."""
		sequence = self.contextualize(self.build_sequence(features, anchor))
		pairs = build_pairs(
			features.document,
			anchor,
			sequence,
			hard=self.config.negatives.hard,
			normal=self.config.negatives.normal,
		)
		return compute_loss(
			pairs,
			self.config.loss.temperature,
			self.config.loss.mode,
			self.reduce,
			self.alpha,
		)

	@torch.no_grad()
	def rank(self, features: DocumentFeatures, query_figure: int) -> list[RankedSentence]:
		"""All inference candidates for a figure, best first."""
		sequence = self.build_sequence(features, query_figure, inference=True)
		sequence = self.contextualize(sequence, inference=True)
		return rank_inference(query_figure, features.document, sequence, self.alpha)


def apply_ablation(config: ConfigManager, encoder_dim: Optional[int] = None) -> FigureLinker:
	"""Assemble the model with exactly the parameter groups the toggles enable."""
	return FigureLinker(config, config.model.dim if encoder_dim is None else encoder_dim)
