"""
Content-hash keyed embedding cache.

Optional on-disk form is an append-only file of fixed-size records:
a 32-byte SHA-256 key followed by `dimension` little-endian float32 values.
Reads are lock-free; insertions go through a single writer lock.
"""

import hashlib
import logging
import threading
from pathlib import Path
from typing import BinaryIO, Dict, Optional

import numpy as np

logger = logging.getLogger(__name__)

KEY_BYTES = 32
_FLOAT = np.dtype('<f4')


class EmbeddingCache:
	def __init__(self, dimension: int, path: Optional[str | Path] = None):
		self.dimension = dimension
		self.path = Path(path) if path else None
		self._entries: Dict[bytes, np.ndarray] = {}
		self._lock = threading.RLock()
		self._handle: Optional[BinaryIO] = None
		if self.path is not None:
			self._load()
			self.path.parent.mkdir(parents=True, exist_ok=True)
			self._handle = self.path.open('ab')

	@property
	def record_size(self) -> int:
		return KEY_BYTES + self.dimension * _FLOAT.itemsize

	@staticmethod
	def key(*parts: str | bytes) -> bytes:
		digest = hashlib.sha256()
		for part in parts:
			digest.update(part.encode('utf-8') if isinstance(part, str) else part)
			digest.update(b'\x00')
		return digest.digest()

	def _load(self) -> None:
		if self.path is None or not self.path.exists():
			return
		data = self.path.read_bytes()
		usable = len(data) - len(data) % self.record_size
		if usable != len(data):
			logger.warning(
				f'Ignoring {len(data) - usable} trailing bytes in embedding cache {self.path}'
			)
		for offset in range(0, usable, self.record_size):
			key = data[offset : offset + KEY_BYTES]
			values = np.frombuffer(
				data, dtype=_FLOAT, count=self.dimension, offset=offset + KEY_BYTES
			)
			self._entries[key] = values.astype(np.float32)
		logger.info(f'Loaded {len(self._entries)} cached embeddings from {self.path}')

	def get(self, key: bytes) -> Optional[np.ndarray]:
		return self._entries.get(key)

	def put(self, key: bytes, vector: np.ndarray) -> None:
		if len(key) != KEY_BYTES:
			raise ValueError(f'Cache keys are {KEY_BYTES} bytes')
		values = np.asarray(vector, dtype=_FLOAT)
		if values.shape != (self.dimension,):
			raise ValueError(f'Expected a {self.dimension}-dimensional vector')
		with self._lock:
			if key in self._entries:
				return
			self._entries[key] = values.astype(np.float32)
			if self._handle is not None:
				self._handle.write(key + values.tobytes())

	def __contains__(self, key: bytes) -> bool:
		return key in self._entries

	def __len__(self) -> int:
		return len(self._entries)

	def close(self) -> None:
		with self._lock:
			if self._handle is not None:
				self._handle.close()
				self._handle = None
