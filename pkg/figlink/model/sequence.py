"""Slot layout of the unified document sequence and its slot -> position map."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import torch

from figlink.config import FusionMode, PairsMode
from figlink.errors import MissingSlot


class SlotKind(Enum):
	SECTION = 'section'
	PAIR = 'pair'  # fused image/caption query (early fusion)
	IMAGE = 'image'  # separate image token (late fusion)
	CAPTION = 'caption'  # separate caption token (late fusion)


@dataclass(frozen=True)
class Slot:
	kind: SlotKind
	section_index: Optional[int] = None
	# None when the section is a single pooled vector
	sentence_index: Optional[int] = None
	image_index: Optional[int] = None
	caption_index: Optional[int] = None

	@property
	def genuine(self) -> bool:
		return self.kind is SlotKind.PAIR and self.image_index == self.caption_index


def swapped_pairs(num_figures: int, query_figure: int) -> list[tuple[int, int]]:
	"""(image, caption) pairs differing from the query pair in exactly one index."""
	pairs = [(query_figure, i) for i in range(num_figures) if i != query_figure]
	pairs += [(k, query_figure) for k in range(num_figures) if k != query_figure]
	return sorted(pairs)


def plan_slots(
	section_candidates: Sequence[Sequence[Optional[int]]],
	num_figures: int,
	query_figure: int,
	fusion: FusionMode = FusionMode.EARLY,
	pairs: PairsMode = PairsMode.ALL,
	hard_negatives: bool = True,
) -> list[Slot]:
	"""Section candidates (section-major), then figure slots by figure index.

	Early fusion adds genuine pairs (all, or the query pair only) followed by
	the swapped pairs hard negatives need. Late fusion adds separate image
	and caption slots instead.
	"""
	slots = [
		Slot(SlotKind.SECTION, section_index=j, sentence_index=index)
		for j, candidates in enumerate(section_candidates)
		for index in candidates
	]
	if fusion is FusionMode.EARLY:
		genuine = range(num_figures) if pairs is PairsMode.ALL else [query_figure]
		slots += [Slot(SlotKind.PAIR, image_index=k, caption_index=k) for k in genuine]
		if hard_negatives:
			slots += [
				Slot(SlotKind.PAIR, image_index=k, caption_index=i)
				for k, i in swapped_pairs(num_figures, query_figure)
			]
	else:
		figures = (
			range(num_figures)
			if pairs is PairsMode.ALL or hard_negatives
			else [query_figure]
		)
		slots += [Slot(SlotKind.IMAGE, image_index=k) for k in figures]
		slots += [Slot(SlotKind.CAPTION, caption_index=i) for i in figures]
	return slots


class ContextSequence:
	"""Ordered slots with their layout-embedded inputs and contextual outputs."""

	def __init__(
		self,
		slots: Sequence[Slot],
		query_figure: int,
		inputs: Optional[torch.Tensor] = None,
		fusion: FusionMode = FusionMode.EARLY,
	):
		self.slots = list(slots)
		self.query_figure = query_figure
		self.fusion = fusion
		self.inputs = inputs
		self.outputs: Optional[torch.Tensor] = None
		self._positions = {slot: position for position, slot in enumerate(self.slots)}
		if len(self._positions) != len(self.slots):
			raise ValueError('Duplicate slots in sequence')
		self._sections: dict[int, list[int]] = {}
		for position, slot in enumerate(self.slots):
			if slot.kind is SlotKind.SECTION:
				self._sections.setdefault(slot.section_index, []).append(position)

	def __len__(self) -> int:
		return len(self.slots)

	def position(self, slot: Slot) -> int:
		if slot not in self._positions:
			raise MissingSlot(f'Sequence has no slot {slot}')
		return self._positions[slot]

	def section_positions(self, section_index: int) -> list[int]:
		return list(self._sections.get(section_index, []))

	@property
	def section_indices(self) -> list[int]:
		return sorted(self._sections)

	def pair_position(self, image_index: int, caption_index: int) -> int:
		return self.position(
			Slot(SlotKind.PAIR, image_index=image_index, caption_index=caption_index)
		)

	def image_position(self, image_index: int) -> int:
		return self.position(Slot(SlotKind.IMAGE, image_index=image_index))

	def caption_position(self, caption_index: int) -> int:
		return self.position(Slot(SlotKind.CAPTION, caption_index=caption_index))

	def require_outputs(self) -> torch.Tensor:
		if self.outputs is None:
			raise MissingSlot('Sequence has not been contextualized')
		return self.outputs
