"""
Section encoding strategies.

FIRST uses the first sentence, ALL_CONCAT encodes the whole section as one
sequence (truncated at the adapter's token window), WEIGHTED_AVG pools all
sentence vectors through a learned one-layer transformer and SALIENT keeps
the top-K sentences for the query figure as separate candidates.
"""

from typing import Optional

import numpy as np
import torch
from torch import nn

from figlink.config import ModalityMask, SectionStrategy
from figlink.data.models import Figure, Section
from figlink.encoders.adapters import EncoderAdapter
from figlink.encoders.cache import EmbeddingCache
from figlink.encoders.encode import encode_sentence
from figlink.encoders.salience import select_salient
from figlink.errors import MissingFigure


class SectionAggregator(nn.Module):
	"""One-layer transformer pooling sentence vectors via a prepended aggregate token."""

	def __init__(self, dim: int, heads: int = 8, ff_mult: int = 4, dropout: float = 0.0):
		super().__init__()
		self.aggregate = nn.Parameter(torch.empty(1, 1, dim))
		nn.init.normal_(self.aggregate, std=0.02)
		self.layer = nn.TransformerEncoderLayer(
			d_model=dim,
			nhead=heads,
			dim_feedforward=ff_mult * dim,
			dropout=dropout,
			batch_first=True,
			norm_first=True,
		)

	def forward(self, sentences: torch.Tensor) -> torch.Tensor:
		"""[n, d] sentence vectors -> [d] section vector."""
		tokens = torch.cat([self.aggregate, sentences.unsqueeze(0)], dim=1)
		return self.layer(tokens)[0, 0]


def _tensor(vector: np.ndarray) -> torch.Tensor:
	return torch.from_numpy(np.asarray(vector, dtype=np.float32))


def encode_section(
	strategy: SectionStrategy,
	section: Section,
	figure: Optional[Figure],
	K: int,
	adapter: EncoderAdapter,
	aggregator: Optional[SectionAggregator] = None,
	cache: Optional[EmbeddingCache] = None,
	mask: ModalityMask = ModalityMask.BOTH,
) -> list[torch.Tensor]:
	"""Candidate vectors representing `section` under `strategy`.

	Raises:
	    MissingFigure: SALIENT without a query figure
	"""
	if strategy is SectionStrategy.FIRST:
		return [_tensor(encode_sentence(section.sentences[0].text, adapter, cache))]
	if strategy is SectionStrategy.ALL_CONCAT:
		return [_tensor(encode_sentence(section.text, adapter, cache))]
	if strategy is SectionStrategy.WEIGHTED_AVG:
		if aggregator is None:
			raise ValueError('WEIGHTED_AVG needs a SectionAggregator')
		sentences = torch.stack(
			[_tensor(encode_sentence(s.text, adapter, cache)) for s in section.sentences]
		)
		return [aggregator(sentences)]
	if figure is None:
		raise MissingFigure(f'SALIENT encoding of section {section.index} needs a figure')
	return [
		_tensor(encode_sentence(sentence.text, adapter, cache))
		for sentence in select_salient(section, figure, K, adapter, cache, mask)
	]
