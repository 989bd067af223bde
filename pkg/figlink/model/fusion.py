"""
Image-caption fusion and document-level contextualization.

CrossModalFusion runs a small pre-LN transformer over [AGG, image, caption]
and keeps the AGG output as the fused query. LayoutTransformer applies
FC + ReLU to every slot of the document sequence and then full attention;
position information comes only from the additive layout embeddings.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn

from figlink.errors import DimensionMismatch, MissingSlot, SequenceTooLong
from figlink.model.layout import LayoutToken

logger = logging.getLogger(__name__)


@dataclass
class FusedPair:
	vector: torch.Tensor
	image_index: int
	caption_index: int

	@property
	def genuine(self) -> bool:
		return self.image_index == self.caption_index


def encoder_stack(dim: int, depth: int, heads: int, ff_mult: int, dropout: float) -> nn.Module:
	"""`depth` pre-LN transformer layers, or the identity for depth 0."""
	if depth == 0:
		return nn.Identity()
	layer = nn.TransformerEncoderLayer(
		d_model=dim,
		nhead=heads,
		dim_feedforward=ff_mult * dim,
		dropout=dropout,
		batch_first=True,
		norm_first=True,
	)
	return nn.TransformerEncoder(layer, num_layers=depth, enable_nested_tensor=False)


class CrossModalFusion(nn.Module):
	def __init__(
		self,
		dim: int,
		depth: int = 2,
		heads: int = 8,
		ff_mult: int = 4,
		dropout: float = 0.1,
	):
		super().__init__()
		self.dim = dim
		self.aggregate = nn.Parameter(torch.empty(1, 1, dim))
		nn.init.normal_(self.aggregate, std=0.02)
		self.encoder = encoder_stack(dim, depth, heads, ff_mult, dropout)

	def forward(self, images: torch.Tensor, captions: torch.Tensor) -> torch.Tensor:
		"""Fuse P image/caption rows ([P, d] each) into P query vectors."""
		if images.shape[-1] != self.dim or captions.shape[-1] != self.dim:
			raise DimensionMismatch(
				f'Fusion expects {self.dim}-dimensional inputs, got '
				f'{images.shape[-1]} and {captions.shape[-1]}'
			)
		aggregate = self.aggregate.expand(images.shape[0], -1, -1)
		tokens = torch.cat([aggregate, images.unsqueeze(1), captions.unsqueeze(1)], dim=1)
		return self.encoder(tokens)[:, 0]

	def fuse_pair(self, image: LayoutToken, caption: LayoutToken) -> FusedPair:
		vector = self(image.content.unsqueeze(0), caption.content.unsqueeze(0))[0]
		return FusedPair(vector, image.position, caption.position)


class LayoutTransformer(nn.Module):
	def __init__(
		self,
		dim: int,
		depth: int = 4,
		heads: int = 8,
		ff_mult: int = 4,
		dropout: float = 0.1,
	):
		super().__init__()
		self.projection = nn.Linear(dim, dim)
		self.encoder = encoder_stack(dim, depth, heads, ff_mult, dropout)

	def forward(self, sequence: torch.Tensor, max_slots: Optional[int] = None) -> torch.Tensor:
		"""[S, d] layout tokens -> [S, d] contextual embeddings, slot-aligned.

		Raises:
		    SequenceTooLong: More than `max_slots` slots
		"""
		if sequence.shape[0] == 0:
			raise MissingSlot('Cannot contextualize an empty sequence')
		if max_slots is not None and sequence.shape[0] > max_slots:
			logger.error(f'Sequence of {sequence.shape[0]} slots exceeds cap {max_slots}')
			raise SequenceTooLong(
				f'Sequence of {sequence.shape[0]} slots exceeds cap {max_slots}',
				{'slots': sequence.shape[0], 'cap': max_slots},
			)
		hidden = torch.relu(self.projection(sequence))
		return self.encoder(hidden.unsqueeze(0))[0]


def late_fusion_score(
	candidates: torch.Tensor,
	image_vector: torch.Tensor,
	caption_vector: torch.Tensor,
	alpha: torch.Tensor | float,
	reduce: str = 'max',
) -> torch.Tensor:
	"""alpha * best image cosine + (1 - alpha) * best caption cosine over candidates."""
	image_sims = F.cosine_similarity(candidates, image_vector.unsqueeze(0), dim=-1)
	caption_sims = F.cosine_similarity(candidates, caption_vector.unsqueeze(0), dim=-1)
	if reduce == 'max':
		image_part, caption_part = image_sims.max(), caption_sims.max()
	else:
		image_part, caption_part = image_sims.mean(), caption_sims.mean()
	return alpha * image_part + (1 - alpha) * caption_part


class LateFusionScorer(nn.Module):
	"""Learnable mixing coefficient, kept in (0, 1) through a sigmoid."""

	def __init__(self):
		super().__init__()
		self.logit = nn.Parameter(torch.zeros(()))

	@property
	def alpha(self) -> torch.Tensor:
		return torch.sigmoid(self.logit)
