import logging
from functools import lru_cache
from pathlib import Path
from urllib.parse import unquote, urlparse

from PIL import Image, UnidentifiedImageError

from figlink.errors import ImageDecodeError

logger = logging.getLogger(__name__)


def resolve_image_path(image_ref: str) -> Path:
	"""Local path for an image locator (plain path or file:// URI)."""
	parsed = urlparse(image_ref)
	if parsed.scheme == 'file':
		return Path(unquote(parsed.path))
	if parsed.scheme in ('http', 'https'):
		raise ImageDecodeError(
			f'Remote image {image_ref} must be downloaded before use',
			{'image_ref': image_ref},
		)
	return Path(image_ref)


def load_rgb_image(image_ref: str) -> Image.Image:
	"""Decode an image and convert it to 3-channel RGB.

	Raises:
	    ImageDecodeError: If the file is missing or not a decodable image
	"""
	path = resolve_image_path(image_ref)
	try:
		with Image.open(path) as image:
			image.load()
			return image.convert('RGB')
	except (OSError, UnidentifiedImageError, ValueError) as e:
		raise ImageDecodeError(
			f'Cannot decode image {image_ref}: {e}', {'image_ref': image_ref}
		) from e


@lru_cache(maxsize=8192)
def image_decodes(image_ref: str) -> bool:
	"""Predicate form of `load_rgb_image`; never raises."""
	try:
		load_rgb_image(image_ref)
	except ImageDecodeError as e:
		logger.debug(e.message)
		return False
	return True
