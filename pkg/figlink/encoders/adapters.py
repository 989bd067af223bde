"""
Frozen encoder towers behind one vector interface.

- HashingAdapter: deterministic, offline; seeded hashes of tokens/pixels to
  pseudo-random unit vectors. Used for tests and the synthetic corpus.
- PretrainedAdapter: a text tower and an image tower loaded from pretrained
  checkpoints (CLIP, ResNet-50, RoBERTa), projected to the model width.
"""

import hashlib
import logging
import re
from abc import ABC, abstractmethod
from functools import lru_cache
from typing import Any, Dict, Optional

import numpy as np
import numpy.typing as npt
import torch
from PIL import Image

from figlink.config import ConfigManager
from figlink.errors import AdapterUnavailable, DimensionMismatch

logger = logging.getLogger(__name__)

EmbeddingVector = npt.NDArray[np.float32]

BOS_TOKEN = '<bos>'
EOS_TOKEN = '<eos>'
PAD_TOKEN = '<pad>'

_WORD = re.compile(r"\w+(?:['’]\w+)*|[^\w\s]")

DEFAULT_CHECKPOINTS = {
	'clip': 'openai/clip-vit-base-patch32',
	'roberta': 'roberta-base',
}


def tokenize(text: str, max_tokens: int) -> list[str]:
	"""Lowercased tokens between begin/end markers, truncated and padded to max_tokens."""
	words = _WORD.findall(text.lower())[: max_tokens - 2]
	tokens = [BOS_TOKEN, *words, EOS_TOKEN]
	return tokens + [PAD_TOKEN] * (max_tokens - len(tokens))


class EncoderAdapter(ABC):
	"""Uniform interface over frozen text and image encoders."""

	name: str
	dimension: int
	max_text_tokens: int
	deterministic: bool

	@abstractmethod
	def encode_text(self, text: str) -> EmbeddingVector: ...

	@abstractmethod
	def encode_pixels(self, image: Image.Image) -> EmbeddingVector: ...

	def fingerprint(self) -> str:
		"""Identifies the adapter for embedding cache keys."""
		return f'{self.name}:{self.dimension}:{self.max_text_tokens}'

	def describe(self) -> Dict[str, Any]:
		return {
			'name': self.name,
			'dimension': self.dimension,
			'max_text_tokens': self.max_text_tokens,
			'deterministic': self.deterministic,
		}


class HashingAdapter(EncoderAdapter):
	"""Seeded bag-of-tokens text vectors and pixel-digest image vectors.

	Text vectors are the normalized sum of one pseudo-random unit vector per
	non-padding token, so shared words raise cosine similarity. The begin/end
	markers carry a small weight and padding contributes nothing, like an
	attention mask.
	"""

	MARKER_WEIGHT = 0.25
	PIXEL_SIZE = (16, 16)

	def __init__(self, dimension: int = 512, max_text_tokens: int = 77, seed: int = 0):
		self.name = 'hashing'
		self.dimension = dimension
		self.max_text_tokens = max_text_tokens
		self.seed = seed
		self.deterministic = True
		self._token_vector = lru_cache(maxsize=65536)(self._unit_vector)

	def fingerprint(self) -> str:
		return f'{super().fingerprint()}:{self.seed}'

	def _unit_vector(self, key: str) -> np.ndarray:
		digest = hashlib.blake2b(
			key.encode('utf-8'), digest_size=8, salt=self.seed.to_bytes(8, 'little')
		).digest()
		rng = np.random.default_rng(int.from_bytes(digest, 'little'))
		vector = rng.standard_normal(self.dimension)
		return vector / np.linalg.norm(vector)

	def encode_text(self, text: str) -> EmbeddingVector:
		pooled = np.zeros(self.dimension)
		for token in tokenize(text, self.max_text_tokens):
			if token == PAD_TOKEN:
				continue
			weight = self.MARKER_WEIGHT if token in (BOS_TOKEN, EOS_TOKEN) else 1.0
			pooled += weight * self._token_vector(f'tok:{token}')
		return (pooled / np.linalg.norm(pooled)).astype(np.float32)

	def encode_pixels(self, image: Image.Image) -> EmbeddingVector:
		pixels = np.asarray(
			image.convert('RGB').resize(self.PIXEL_SIZE, Image.Resampling.BILINEAR),
			dtype=np.uint8,
		)
		key = 'img:' + hashlib.sha256((pixels >> 4).tobytes()).hexdigest()
		return self._unit_vector(key).astype(np.float32)


def _seeded_projection(in_features: int, out_features: int, seed: int) -> torch.nn.Linear:
	generator = torch.Generator().manual_seed(seed)
	projection = torch.nn.Linear(in_features, out_features, bias=False)
	with torch.no_grad():
		projection.weight.copy_(
			torch.randn(out_features, in_features, generator=generator) / in_features**0.5
		)
	return projection.eval()


class _ClipTowers:
	"""Lazily loaded CLIP model shared by the text and image towers."""

	def __init__(self, checkpoint: str):
		try:
			from transformers import CLIPModel, CLIPProcessor
		except ImportError as e:
			raise AdapterUnavailable(
				'transformers is required for CLIP encoders (pip install figlink[pretrained])'
			) from e
		try:
			self.model = CLIPModel.from_pretrained(checkpoint).eval()
			self.processor = CLIPProcessor.from_pretrained(checkpoint)
		except OSError as e:
			raise AdapterUnavailable(f'Cannot load CLIP checkpoint {checkpoint}: {e}') from e
		self.output_dim = self.model.config.projection_dim

	@torch.no_grad()
	def text(self, text: str, max_tokens: int) -> torch.Tensor:
		inputs = self.processor.tokenizer(
			[text],
			padding='max_length',
			truncation=True,
			max_length=max_tokens,
			return_tensors='pt',
		)
		return self.model.get_text_features(**inputs)[0]

	@torch.no_grad()
	def image(self, image: Image.Image) -> torch.Tensor:
		inputs = self.processor.image_processor(images=image, return_tensors='pt')
		return self.model.get_image_features(**inputs)[0]


class _RobertaTextTower:
	def __init__(self, checkpoint: str):
		try:
			from transformers import AutoModel, AutoTokenizer
		except ImportError as e:
			raise AdapterUnavailable('transformers is required for RoBERTa encoders') from e
		try:
			self.model = AutoModel.from_pretrained(checkpoint).eval()
			self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
		except OSError as e:
			raise AdapterUnavailable(f'Cannot load RoBERTa checkpoint {checkpoint}: {e}') from e
		self.output_dim = self.model.config.hidden_size

	@torch.no_grad()
	def __call__(self, text: str, max_tokens: int) -> torch.Tensor:
		inputs = self.tokenizer(
			[text],
			padding='max_length',
			truncation=True,
			max_length=max_tokens,
			return_tensors='pt',
		)
		# begin-of-sequence position
		return self.model(**inputs).last_hidden_state[0, 0]


class _ResNetImageTower:
	def __init__(self):
		try:
			from torchvision.models import ResNet50_Weights, resnet50
		except ImportError as e:
			raise AdapterUnavailable('torchvision is required for ResNet encoders') from e
		weights = ResNet50_Weights.IMAGENET1K_V1
		try:
			self.model = resnet50(weights=weights)
		except (OSError, RuntimeError) as e:
			raise AdapterUnavailable(f'Cannot load ResNet-50 weights: {e}') from e
		self.model.fc = torch.nn.Identity()  # pooled features
		self.model.eval()
		self.preprocess = weights.transforms()
		self.output_dim = 2048

	@torch.no_grad()
	def __call__(self, image: Image.Image) -> torch.Tensor:
		return self.model(self.preprocess(image).unsqueeze(0))[0]


class PretrainedAdapter(EncoderAdapter):
	"""Pretrained towers; outputs wider or narrower than `dimension` go through a seeded projection."""

	def __init__(
		self,
		name: str,
		dimension: int = 512,
		max_text_tokens: int = 77,
		checkpoint_path: Optional[str] = None,
		seed: int = 0,
	):
		self.name = name
		self.dimension = dimension
		self.max_text_tokens = max_text_tokens
		self.deterministic = True

		clip = _ClipTowers(checkpoint_path or DEFAULT_CHECKPOINTS['clip'])
		if name == 'clip':
			self._text = lambda text: clip.text(text, max_text_tokens)
			self._image = clip.image
			text_dim = image_dim = clip.output_dim
		elif name == 'resnet_clip':
			resnet = _ResNetImageTower()
			self._text = lambda text: clip.text(text, max_text_tokens)
			self._image = resnet
			text_dim, image_dim = clip.output_dim, resnet.output_dim
		elif name == 'roberta_clip':
			roberta = _RobertaTextTower(DEFAULT_CHECKPOINTS['roberta'])
			self._text = lambda text: roberta(text, max_text_tokens)
			self._image = clip.image
			text_dim, image_dim = roberta.output_dim, clip.output_dim
		else:
			raise AdapterUnavailable(f'Unknown pretrained encoder {name!r}')

		self._text_projection = (
			_seeded_projection(text_dim, dimension, seed) if text_dim != dimension else None
		)
		self._image_projection = (
			_seeded_projection(image_dim, dimension, seed + 1)
			if image_dim != dimension
			else None
		)
		logger.info(f'Loaded pretrained encoder {name} (text {text_dim}, image {image_dim} -> {dimension})')

	@torch.no_grad()
	def _finish(self, vector: torch.Tensor, projection: Optional[torch.nn.Linear]) -> EmbeddingVector:
		if projection is not None:
			vector = projection(vector)
		if vector.shape[-1] != self.dimension:
			raise DimensionMismatch(
				f'{self.name} produced {vector.shape[-1]} dimensions, expected {self.dimension}'
			)
		return vector.float().cpu().numpy()

	def encode_text(self, text: str) -> EmbeddingVector:
		return self._finish(self._text(text), self._text_projection)

	def encode_pixels(self, image: Image.Image) -> EmbeddingVector:
		return self._finish(self._image(image.convert('RGB')), self._image_projection)


def build_adapter(config: ConfigManager) -> EncoderAdapter:
	"""Instantiate the encoder named by the configuration.

	Raises:
	    AdapterUnavailable: Unknown name, missing package or checkpoint
	"""
	name = config.encoder_name
	if name == 'hashing':
		return HashingAdapter(
			dimension=config.encoder.dim,
			max_text_tokens=config.encoder.max_text_tokens,
			seed=config.encoder.seed,
		)
	if name in ('clip', 'resnet_clip', 'roberta_clip'):
		return PretrainedAdapter(
			name,
			dimension=config.encoder.dim,
			max_text_tokens=config.encoder.max_text_tokens,
			checkpoint_path=config.encoder.checkpoint_path,
			seed=config.encoder.seed,
		)
	logger.error(f'Unknown encoder {name!r}')
	raise AdapterUnavailable(f'Unknown encoder {name!r}', {'encoder': name})
