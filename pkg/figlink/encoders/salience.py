"""
Sentence salience with respect to a figure.

A sentence's score is the mean of its cosine similarity to the image and to
the caption. Captionless figures (or a masked caption) fall back to the image
similarity alone, and a masked image falls back to the caption.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from figlink.config import ModalityMask
from figlink.data.models import Figure, SalienceScore, Section, Sentence
from figlink.encoders.adapters import EncoderAdapter
from figlink.encoders.cache import EmbeddingCache
from figlink.encoders.encode import encode_image, encode_sentence

logger = logging.getLogger(__name__)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
	a = np.asarray(a, dtype=np.float64)
	b = np.asarray(b, dtype=np.float64)
	denominator = np.linalg.norm(a) * np.linalg.norm(b)
	if denominator == 0:
		return 0.0
	return float(np.clip(np.dot(a, b) / denominator, -1.0, 1.0))


def cosine_rows(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
	"""Cosine of every row of `matrix` with `vector`."""
	matrix = np.asarray(matrix, dtype=np.float64)
	vector = np.asarray(vector, dtype=np.float64)
	norms = np.linalg.norm(matrix, axis=1) * np.linalg.norm(vector)
	with np.errstate(invalid='ignore', divide='ignore'):
		sims = np.where(norms > 0, matrix @ vector / norms, 0.0)
	return np.clip(sims, -1.0, 1.0)


def combine(sim_image: Optional[np.ndarray], sim_caption: Optional[np.ndarray]) -> np.ndarray:
	"""Average whichever similarity components are available."""
	parts = [part for part in (sim_image, sim_caption) if part is not None]
	if not parts:
		raise ValueError('salience needs at least one of image or caption similarity')
	return np.mean(parts, axis=0)


def salience_scores(
	sentence_vectors: np.ndarray,
	image_vector: Optional[np.ndarray],
	caption_vector: Optional[np.ndarray],
) -> np.ndarray:
	"""Vectorised salience for all sentences of one section."""
	sim_image = None if image_vector is None else cosine_rows(sentence_vectors, image_vector)
	sim_caption = (
		None if caption_vector is None else cosine_rows(sentence_vectors, caption_vector)
	)
	if sim_image is None and sim_caption is None:
		return np.zeros(len(sentence_vectors))
	return combine(sim_image, sim_caption)


def top_k_indices(scores: Sequence[float], K: int) -> list[int]:
	"""Indices of the K highest scores, descending, ties by ascending index."""
	order = sorted(range(len(scores)), key=lambda index: (-float(scores[index]), index))
	return order[:K]


def salience_score(
	sentence: Sentence,
	figure: Figure,
	adapter: EncoderAdapter,
	section_index: int = 0,
	cache: Optional[EmbeddingCache] = None,
	mask: ModalityMask = ModalityMask.BOTH,
) -> SalienceScore:
	sentence_vector = encode_sentence(sentence.text, adapter, cache)
	sim_image = sim_caption = None
	if mask.uses_image:
		sim_image = cosine(sentence_vector, encode_image(figure.image_ref, adapter, cache))
	if mask.uses_caption and figure.caption.strip():
		sim_caption = cosine(sentence_vector, encode_sentence(figure.caption, adapter, cache))

	components = [sim for sim in (sim_image, sim_caption) if sim is not None]
	score = sum(components) / len(components) if components else 0.0
	return SalienceScore(
		section_index=section_index,
		sentence_index=sentence.index,
		score=score,
		sim_image=sim_image,
		sim_caption=sim_caption,
	)


def select_salient(
	section: Section,
	figure: Figure,
	K: int,
	adapter: EncoderAdapter,
	cache: Optional[EmbeddingCache] = None,
	mask: ModalityMask = ModalityMask.BOTH,
) -> list[Sentence]:
	"""The K most salient sentences of `section` for `figure`, best first."""
	if K < 1:
		raise ValueError('K must be at least 1')
	scores = [
		salience_score(sentence, figure, adapter, section.index, cache, mask).score
		for sentence in section.sentences
	]
	return [section.sentences[index] for index in top_k_indices(scores, K)]
