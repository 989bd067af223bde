"""
Zero-shot rankers over frozen encoder features, no training involved.

- dual: each section is represented under a section strategy (its first
  sentence by default) and scored by the mean of its image and caption cosine.
- caption: every sentence is scored by its cosine to the caption alone.
"""

import logging
from typing import Dict

import torch

from figlink.config import SectionStrategy
from figlink.data.models import RankedSentence
from figlink.encoders.cache import EmbeddingCache
from figlink.encoders.features import DocumentFeatures
from figlink.encoders.salience import cosine_rows, salience_score, salience_scores, select_salient
from figlink.encoders.sections import encode_section
from figlink.errors import MissingSlot, UsageError

logger = logging.getLogger(__name__)

BASELINES = ('dual', 'caption')
BASELINE_STRATEGIES = (SectionStrategy.FIRST, SectionStrategy.ALL_CONCAT, SectionStrategy.SALIENT)


class ZeroShotRanker:
	def __init__(
		self, mode: str = 'dual', strategy: SectionStrategy = SectionStrategy.FIRST, K: int = 5
	):
		if mode not in BASELINES:
			raise UsageError(f'Unknown baseline {mode!r}; expected one of {", ".join(BASELINES)}')
		if strategy not in BASELINE_STRATEGIES:
			raise UsageError(f'Section strategy {strategy.value} needs a trained model')
		self.mode = mode
		self.strategy = strategy
		self.K = K
		self._caches: Dict[str, EmbeddingCache] = {}

	@property
	def name(self) -> str:
		if self.mode == 'dual' and self.strategy is not SectionStrategy.FIRST:
			return f'zero_shot_dual_{self.strategy.value}'
		return f'zero_shot_{self.mode}'

	def _cache(self, features: DocumentFeatures) -> EmbeddingCache:
		if features.cache is not None:
			return features.cache
		fingerprint = features.adapter.fingerprint()
		if fingerprint not in self._caches:
			self._caches[fingerprint] = EmbeddingCache(features.adapter.dimension)
		return self._caches[fingerprint]

	def _caption_scores(self, features: DocumentFeatures, query_figure: int) -> list[RankedSentence]:
		caption = features.caption_vectors[query_figure]
		return [
			RankedSentence(section_index=j, sentence_index=i, score=float(score))
			for j, vectors in enumerate(features.sentence_vectors)
			for i, score in enumerate(cosine_rows(vectors, caption))
		]

	def _salient_scores(self, features: DocumentFeatures, query_figure: int) -> list[RankedSentence]:
		figure = features.document.figures[query_figure]
		adapter, cache, mask = features.adapter, self._cache(features), features.mask
		return [
			RankedSentence(
				section_index=section.index,
				sentence_index=sentence.index,
				score=salience_score(sentence, figure, adapter, section.index, cache, mask).score,
			)
			for section in features.document.sections
			for sentence in select_salient(section, figure, self.K, adapter, cache, mask)
		]

	def _section_scores(self, features: DocumentFeatures, query_figure: int) -> list[RankedSentence]:
		if self.strategy is SectionStrategy.SALIENT:
			return self._salient_scores(features, query_figure)
		figure = features.document.figures[query_figure]
		image = None if features.image_vectors is None else features.image_vectors[query_figure]
		caption = (
			features.caption_vectors[query_figure] if features.has_caption(query_figure) else None
		)
		sentence_index = 0 if self.strategy is SectionStrategy.FIRST else None
		ranked = []
		for section in features.document.sections:
			vectors = encode_section(
				self.strategy,
				section,
				figure,
				self.K,
				features.adapter,
				cache=self._cache(features),
				mask=features.mask,
			)
			(score,) = salience_scores(torch.stack(vectors).numpy(), image, caption)
			ranked.append(
				RankedSentence(
					section_index=section.index,
					sentence_index=sentence_index,
					score=float(score),
				)
			)
		return ranked

	def rank(self, features: DocumentFeatures, query_figure: int) -> list[RankedSentence]:
		if not 0 <= query_figure < features.num_figures:
			raise MissingSlot(f'Document {features.document.id} has no figure {query_figure}')
		if features.adapter is None:
			raise UsageError('Zero-shot ranking needs features built with an encoder adapter')
		if self.mode == 'caption' and features.has_caption(query_figure):
			ranked = self._caption_scores(features, query_figure)
		else:
			if self.mode == 'caption':
				logger.debug(
					f'{features.document.id}/{query_figure}: no caption, using section scores'
				)
			ranked = self._section_scores(features, query_figure)
		ranked.sort(
			key=lambda entry: (
				-entry.score,
				entry.section_index,
				-1 if entry.sentence_index is None else entry.sentence_index,
			)
		)
		return ranked
