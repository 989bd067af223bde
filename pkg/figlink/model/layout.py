"""
Layout embeddings: reading-order position, segment tag and entity rank.

Every layout token is its content vector plus learned table rows:

    caption:  T_cap + PosE_fig(i) + SegE[C]
    image:    V_img + PosE_fig(k) + SegE[V]
    section:  t_jk  + PosE_sec(j) + SegE[S] + EntE(s_j)
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import torch
from torch import nn

from figlink.config import EntitySignal
from figlink.corpus.entities import EntityExtractor, extract_entities
from figlink.data.models import Section
from figlink.errors import IndexOutOfRange

logger = logging.getLogger(__name__)


class SegmentTag(Enum):
	CAPTION = '[C]'
	IMAGE = '[V]'
	SECTION = '[S]'

	@property
	def index(self) -> int:
		return list(SegmentTag).index(self)


@dataclass(frozen=True)
class EntityRank:
	section_index: int
	rank: int


@dataclass
class LayoutToken:
	content: torch.Tensor
	position: int
	segment: SegmentTag
	entity_rank: Optional[int] = None

	def __post_init__(self):
		if (self.entity_rank is not None) != (self.segment is SegmentTag.SECTION):
			raise ValueError('entity_rank is set for section tokens only')


def ranks_from_counts(counts: Sequence[float]) -> list[int]:
	"""Rank 0 for the largest count; ties broken by ascending index."""
	order = sorted(range(len(counts)), key=lambda j: (-counts[j], j))
	ranks = [0] * len(counts)
	for rank, j in enumerate(order):
		ranks[j] = rank
	return ranks


def entity_rank(
	sections: Sequence[Section],
	caption: str,
	extractor: Optional[EntityExtractor] = None,
) -> list[EntityRank]:
	"""Sections ordered by distinct entities shared with the caption."""
	caption_entities = extract_entities(caption, extractor)
	counts = [
		len(caption_entities & extract_entities(section.text, extractor))
		for section in sections
	]
	return [
		EntityRank(section_index=j, rank=rank)
		for j, rank in enumerate(ranks_from_counts(counts))
	]


class LayoutEmbedding(nn.Module):
	"""Learned position, segment and entity tables (all d-dimensional, N(0, 0.02))."""

	def __init__(
		self,
		dim: int,
		max_sections: int = 32,
		max_figures: int = 30,
		entity_size: int = 32,
		use_entity: bool = True,
		entity_signal: EntitySignal = EntitySignal.RANK,
	):
		super().__init__()
		self.section_position = nn.Embedding(max_sections, dim)
		self.figure_position = nn.Embedding(max_figures, dim)
		self.segment = nn.Embedding(len(SegmentTag), dim)
		self.entity = nn.Embedding(entity_size, dim) if use_entity else None
		self.entity_signal = entity_signal
		for module in self.modules():
			if isinstance(module, nn.Embedding):
				nn.init.normal_(module.weight, std=0.02)

	@staticmethod
	def _lookup(table: nn.Embedding, indices: torch.Tensor, name: str) -> torch.Tensor:
		if indices.numel() and (
			int(indices.min()) < 0 or int(indices.max()) >= table.num_embeddings
		):
			raise IndexOutOfRange(
				f'{name} index out of range [0, {table.num_embeddings})',
				{'table': name, 'size': table.num_embeddings},
			)
		return table(indices)

	def _segment(self, tag: SegmentTag, count: int) -> torch.Tensor:
		indices = torch.full((count,), tag.index, dtype=torch.long)
		return self.segment(indices.to(self.segment.weight.device))

	def entity_indices(self, ranks: Sequence[int], counts: Sequence[int]) -> list[int]:
		"""EntE row per section: the rank, or the clipped raw count."""
		if self.entity_signal is EntitySignal.COUNT:
			top = self.entity.num_embeddings - 1 if self.entity is not None else 0
			return [min(count, top) for count in counts]
		return list(ranks)

	def captions(self, contents: torch.Tensor, indices: torch.Tensor) -> torch.Tensor:
		return (
			contents
			+ self._lookup(self.figure_position, indices, 'figure position')
			+ self._segment(SegmentTag.CAPTION, len(indices))
		)

	def images(self, contents: torch.Tensor, indices: torch.Tensor) -> torch.Tensor:
		return (
			contents
			+ self._lookup(self.figure_position, indices, 'figure position')
			+ self._segment(SegmentTag.IMAGE, len(indices))
		)

	def sections(
		self,
		contents: torch.Tensor,
		indices: torch.Tensor,
		entity: Optional[torch.Tensor] = None,
	) -> torch.Tensor:
		out = (
			contents
			+ self._lookup(self.section_position, indices, 'section position')
			+ self._segment(SegmentTag.SECTION, len(indices))
		)
		if self.entity is not None and entity is not None:
			out = out + self._lookup(self.entity, entity, 'entity')
		return out

	def embed_caption(self, content: torch.Tensor, index: int) -> LayoutToken:
		vector = self.captions(content.unsqueeze(0), torch.tensor([index]))[0]
		return LayoutToken(vector, index, SegmentTag.CAPTION)

	def embed_image(self, content: torch.Tensor, index: int) -> LayoutToken:
		vector = self.images(content.unsqueeze(0), torch.tensor([index]))[0]
		return LayoutToken(vector, index, SegmentTag.IMAGE)

	def embed_section(self, content: torch.Tensor, index: int, rank: int) -> LayoutToken:
		vector = self.sections(
			content.unsqueeze(0), torch.tensor([index]), torch.tensor([rank])
		)[0]
		return LayoutToken(vector, index, SegmentTag.SECTION, entity_rank=rank)
