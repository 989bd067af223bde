import hashlib
from typing import Optional

from figlink.corpus.images import load_rgb_image, resolve_image_path
from figlink.encoders.adapters import EmbeddingVector, EncoderAdapter
from figlink.encoders.cache import EmbeddingCache


def encode_sentence(
	text: str, adapter: EncoderAdapter, cache: Optional[EmbeddingCache] = None
) -> EmbeddingVector:
	"""Pooled text vector; text beyond the adapter's token window is ignored."""
	if cache is None:
		return adapter.encode_text(text)
	key = EmbeddingCache.key(adapter.fingerprint(), 'text', text)
	if (vector := cache.get(key)) is not None:
		return vector
	vector = adapter.encode_text(text)
	cache.put(key, vector)
	return vector


def encode_image(
	image_ref: str, adapter: EncoderAdapter, cache: Optional[EmbeddingCache] = None
) -> EmbeddingVector:
	"""Pooled image vector.

	Raises:
	    ImageDecodeError: If the image cannot be decoded
	"""
	if cache is None:
		return adapter.encode_pixels(load_rgb_image(image_ref))
	try:
		content = hashlib.sha256(resolve_image_path(image_ref).read_bytes()).digest()
	except OSError:
		# let the decoder report the failure
		return adapter.encode_pixels(load_rgb_image(image_ref))
	key = EmbeddingCache.key(adapter.fingerprint(), 'image', content)
	if (vector := cache.get(key)) is not None:
		return vector
	vector = adapter.encode_pixels(load_rgb_image(image_ref))
	cache.put(key, vector)
	return vector
