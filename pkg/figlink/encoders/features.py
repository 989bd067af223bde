"""Per-document frozen-encoder features, computed once and shared by training and inference."""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np

from figlink.config import ModalityMask
from figlink.corpus.entities import extract_entities
from figlink.data.models import Document
from figlink.encoders.adapters import EncoderAdapter
from figlink.encoders.cache import EmbeddingCache
from figlink.encoders.encode import encode_image, encode_sentence
from figlink.encoders.salience import salience_scores, top_k_indices
from figlink.utils.progress import progress

logger = logging.getLogger(__name__)


@dataclass
class DocumentFeatures:
	document: Document
	mask: ModalityMask
	sentence_vectors: list[np.ndarray]  # per section, [n_j, d]
	section_vectors: np.ndarray  # [N, d], whole section as one sequence
	image_vectors: Optional[np.ndarray]  # [M, d]; None when images are masked
	caption_vectors: Optional[np.ndarray]  # [M, d]; None when captions are masked
	section_entities: list[frozenset[str]]
	caption_entities: list[frozenset[str]]
	# encoder the vectors came from, for per-section re-encoding
	adapter: Optional[EncoderAdapter] = field(default=None, repr=False, compare=False)
	cache: Optional[EmbeddingCache] = field(default=None, repr=False, compare=False)
	_salience: Dict[tuple[int, int], np.ndarray] = field(default_factory=dict, repr=False)

	@property
	def num_sections(self) -> int:
		return len(self.document.sections)

	@property
	def num_figures(self) -> int:
		return len(self.document.figures)

	def has_caption(self, figure_index: int) -> bool:
		return (
			self.caption_vectors is not None
			and bool(self.document.figures[figure_index].caption.strip())
		)

	def salience(self, figure_index: int, section_index: int) -> np.ndarray:
		key = (figure_index, section_index)
		if key not in self._salience:
			image = None if self.image_vectors is None else self.image_vectors[figure_index]
			caption = (
				self.caption_vectors[figure_index] if self.has_caption(figure_index) else None
			)
			self._salience[key] = salience_scores(
				self.sentence_vectors[section_index], image, caption
			)
		return self._salience[key]

	def salient_indices(self, figure_index: int, section_index: int, K: int) -> list[int]:
		return top_k_indices(self.salience(figure_index, section_index), K)

	def inference_indices(self, figure_index: int, section_index: int, cap: int) -> list[int]:
		"""Every sentence of the section, or its `cap` most salient ones when longer."""
		count = len(self.sentence_vectors[section_index])
		if count <= cap:
			return list(range(count))
		return self.salient_indices(figure_index, section_index, cap)

	def shared_entity_counts(self, figure_index: int) -> list[int]:
		caption_entities = self.caption_entities[figure_index]
		return [len(caption_entities & entities) for entities in self.section_entities]


def build_features(
	document: Document,
	adapter: EncoderAdapter,
	cache: Optional[EmbeddingCache] = None,
	mask: ModalityMask = ModalityMask.BOTH,
) -> DocumentFeatures:
	"""Encode every sentence, section, image and caption of a document.

	Masked modalities are never passed to their encoder.
	"""
	sentence_vectors = [
		np.stack([encode_sentence(s.text, adapter, cache) for s in section.sentences])
		for section in document.sections
	]
	section_vectors = np.stack(
		[encode_sentence(section.text, adapter, cache) for section in document.sections]
	)
	image_vectors = caption_vectors = None
	if document.figures and mask.uses_image:
		image_vectors = np.stack(
			[encode_image(figure.image_ref, adapter, cache) for figure in document.figures]
		)
	if document.figures and mask.uses_caption:
		caption_vectors = np.stack(
			[encode_sentence(figure.caption, adapter, cache) for figure in document.figures]
		)

	captions = [
		figure.caption if mask.uses_caption else '' for figure in document.figures
	]
	return DocumentFeatures(
		document=document,
		mask=mask,
		sentence_vectors=sentence_vectors,
		section_vectors=section_vectors,
		image_vectors=image_vectors,
		caption_vectors=caption_vectors,
		section_entities=[
			frozenset(extract_entities(section.text)) for section in document.sections
		],
		caption_entities=[frozenset(extract_entities(caption)) for caption in captions],
		adapter=adapter,
		cache=cache,
	)


class FeatureStore:
	"""Memoised `build_features` keyed by (document id, modality mask)."""

	def __init__(
		self,
		adapter: EncoderAdapter,
		cache: Optional[EmbeddingCache] = None,
		workers: int = 4,
	):
		self.adapter = adapter
		self.cache = cache
		self.workers = max(1, workers)
		self._features: Dict[tuple[str, ModalityMask], DocumentFeatures] = {}
		self._lock = threading.Lock()

	def get(self, document: Document, mask: ModalityMask = ModalityMask.BOTH) -> DocumentFeatures:
		key = (document.id, mask)
		if (features := self._features.get(key)) is not None:
			return features
		features = build_features(document, self.adapter, self.cache, mask)
		with self._lock:
			return self._features.setdefault(key, features)

	def prefetch(
		self, documents: Iterable[Document], mask: ModalityMask = ModalityMask.BOTH
	) -> None:
		"""Encode documents concurrently ahead of training or evaluation."""
		documents = list(documents)
		with ThreadPoolExecutor(max_workers=self.workers) as pool:
			for number, _ in enumerate(pool.map(lambda doc: self.get(doc, mask), documents), 1):
				if number % 50 == 0 or number == len(documents):
					progress.advance('encode', number, len(documents), detail=self.adapter.name)
		progress.finish('encode')
		logger.info(f'Encoded {len(documents)} documents with {self.adapter.name}')
