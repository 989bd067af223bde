"""
Configuration Manager for figlink

Handles defaults, environment overrides, config files (JSON or TOML) and
command-line ``--set`` overrides for encoders, the linking model, the
contrastive objective and training runs.
"""

import hashlib
import json
import logging
import os
import tomllib
import typing
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional

from figlink.errors import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = 'FIGLINK'


class InitMode(Enum):
	"""Which pretrained encoders initialise the frozen towers."""

	DUAL_VIT = 'dual_vit'
	DUAL_RESNET = 'dual_resnet'
	HYBRID_TEXT = 'hybrid_text'
	SCRATCH = 'scratch'


class SectionStrategy(Enum):
	FIRST = 'first'
	WEIGHTED_AVG = 'weighted_avg'
	ALL_CONCAT = 'all_concat'
	SALIENT = 'salient'


class FusionMode(Enum):
	EARLY = 'early'
	LATE = 'late'


class ModalityMask(Enum):
	BOTH = 'both'
	IMAGE_ONLY = 'image_only'
	CAPTION_ONLY = 'caption_only'

	@property
	def uses_image(self) -> bool:
		return self is not ModalityMask.CAPTION_ONLY

	@property
	def uses_caption(self) -> bool:
		return self is not ModalityMask.IMAGE_ONLY


class LossMode(Enum):
	INFONCE = 'infonce'
	RAW_RATIO = 'raw_ratio'


class PairsMode(Enum):
	ALL = 'all'
	QUERY_ONLY = 'query_only'


class EntitySignal(Enum):
	RANK = 'rank'
	COUNT = 'count'


# Encoder used when `encoder.name` is left unset
INIT_MODE_ENCODERS = {
	InitMode.DUAL_VIT: 'clip',
	InitMode.DUAL_RESNET: 'resnet_clip',
	InitMode.HYBRID_TEXT: 'roberta_clip',
	InitMode.SCRATCH: 'hashing',
}

ENCODER_NAMES = ('hashing', 'clip', 'resnet_clip', 'roberta_clip')


@dataclass
class EncoderConfig:
	"""Frozen encoder tower settings."""

	name: Optional[str] = None
	dim: int = 512
	max_text_tokens: int = 77
	checkpoint_path: Optional[str] = None
	seed: int = 0
	cache_path: Optional[str] = None


@dataclass
class ModelConfig:
	"""Linking model architecture."""

	dim: int = 512
	cross_depth: int = 2
	layout_depth: int = 4
	heads: int = 8
	ff_mult: int = 4
	dropout: float = 0.1
	max_sections: int = 32
	max_figures: int = 30
	entity_table: int = 32
	entity_signal: EntitySignal = EntitySignal.RANK


@dataclass
class LossConfig:
	temperature: float = 0.07
	mode: LossMode = LossMode.INFONCE


@dataclass
class NegativesConfig:
	hard: bool = True
	normal: bool = True


@dataclass
class SequenceConfig:
	pairs: PairsMode = PairsMode.ALL
	inference_cap: int = 64  # sentences per section at inference


@dataclass
class TrainConfig:
	"""Optimisation and ablation settings."""

	batch_size: int = 32
	learning_rate: float = 0.001
	weight_decay: float = 0.01
	warmup_steps: int = 0  # 0 = one epoch
	epochs: int = 10
	patience: int = 3
	seed: int = 0
	init_mode: InitMode = InitMode.DUAL_VIT
	strategy: SectionStrategy = SectionStrategy.SALIENT
	K: int = 5
	fusion: FusionMode = FusionMode.EARLY
	salience_loss: bool = True
	entity_check: bool = True
	layout_info: bool = True
	modality_mask: ModalityMask = ModalityMask.BOTH
	inference_modality_mask: Optional[ModalityMask] = None
	workers: int = 4


_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}
_NONE = {'', 'none', 'null'}


def _coerce(annotation: Any, value: Any, key: str) -> Any:
	"""Convert a raw (usually string) value to the declared field type."""
	if typing.get_origin(annotation) is typing.Union:
		inner = [arg for arg in typing.get_args(annotation) if arg is not type(None)]
		if value is None or (isinstance(value, str) and value.lower() in _NONE):
			return None
		annotation = inner[0]

	try:
		if isinstance(annotation, type) and issubclass(annotation, Enum):
			if isinstance(value, annotation):
				return value
			text = str(value).strip().lower()
			for member in annotation:
				if text in (member.value, member.name.lower()):
					return member
			choices = ', '.join(member.value for member in annotation)
			raise ConfigError(f'{key} must be one of: {choices} (got {value!r})')
		if annotation is bool:
			if isinstance(value, bool):
				return value
			text = str(value).strip().lower()
			if text in _TRUE:
				return True
			if text in _FALSE:
				return False
			raise ConfigError(f'{key} must be on/off (got {value!r})')
		if annotation is int:
			if isinstance(value, bool):
				raise ConfigError(f'{key} must be an integer (got {value!r})')
			return int(value)
		if annotation is float:
			return float(value)
		return str(value)
	except (TypeError, ValueError) as e:
		raise ConfigError(f'Invalid value for {key}: {value!r}') from e


def _flatten(tree: Dict[str, Any], prefix: str = '') -> Dict[str, Any]:
	flat = {}
	for name, value in tree.items():
		key = f'{prefix}{name}'
		if isinstance(value, dict):
			flat.update(_flatten(value, f'{key}.'))
		else:
			flat[key] = value
	return flat


class ConfigManager:
	"""Manages configuration for figlink runs."""

	SECTIONS = {
		'encoder': EncoderConfig,
		'model': ModelConfig,
		'loss': LossConfig,
		'negatives': NegativesConfig,
		'sequence': SequenceConfig,
		'train': TrainConfig,
	}

	def __init__(
		self,
		config_path: Optional[str | Path] = None,
		overrides: Optional[Dict[str, Any]] = None,
		load_env: bool = True,
	):
		"""Initialize configuration manager.

		Args:
		    config_path: Optional JSON or TOML file applied after the environment
		    overrides: Dotted ``section.key`` values applied last
		    load_env: Read ``FIGLINK_<SECTION>_<KEY>`` environment variables
		"""
		self.encoder = EncoderConfig()
		self.model = ModelConfig()
		self.loss = LossConfig()
		self.negatives = NegativesConfig()
		self.sequence = SequenceConfig()
		self.train = TrainConfig()

		if load_env:
			self._load_from_env()
		if config_path:
			self.load_file(config_path)
		for key, value in (overrides or {}).items():
			self.set(key, value)

		logger.info(
			f'ConfigManager initialized (encoder={self.encoder_name}, '
			f'strategy={self.train.strategy.value}, fusion={self.train.fusion.value})'
		)

	@classmethod
	def from_dict(cls, tree: Dict[str, Any]) -> 'ConfigManager':
		"""Rebuild a configuration from a `to_dict()` snapshot, ignoring the environment."""
		return cls(overrides=_flatten(tree), load_env=False)

	def _load_from_env(self) -> None:
		"""Load configuration from environment variables."""
		for section, section_cls in self.SECTIONS.items():
			for field in fields(section_cls):
				env_name = f'{ENV_PREFIX}_{section}_{field.name}'.upper()
				if (value := os.getenv(env_name)) is not None:
					logger.debug(f'{env_name} overrides {section}.{field.name}')
					self.set(f'{section}.{field.name}', value)

	def load_file(self, path: str | Path) -> None:
		"""Apply a JSON or TOML config file (nested tables or dotted keys)."""
		path = Path(path)
		try:
			if path.suffix.lower() == '.toml':
				with path.open('rb') as handle:
					tree = tomllib.load(handle)
			else:
				tree = json.loads(path.read_text(encoding='utf-8'))
		except FileNotFoundError as e:
			raise ConfigError(f'Config file not found: {path}') from e
		except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
			raise ConfigError(f'Cannot parse config file {path}: {e}') from e

		if not isinstance(tree, dict):
			raise ConfigError(f'Config file {path} must contain a table/object')
		for key, value in _flatten(tree).items():
			self.set(key, value)
		logger.info(f'Loaded config file {path}')

	def set(self, key: str, value: Any) -> None:
		"""Set one dotted ``section.key`` value, coercing it to the field type."""
		section, _, name = key.partition('.')
		if section not in self.SECTIONS or not name:
			raise ConfigError(f'Unknown config key: {key}')
		section_cls = self.SECTIONS[section]
		hints = typing.get_type_hints(section_cls)
		if name not in hints:
			raise ConfigError(f'Unknown config key: {key}')
		setattr(getattr(self, section), name, _coerce(hints[name], value, key))

	@property
	def encoder_name(self) -> str:
		"""Explicit `encoder.name`, else the encoder implied by `train.init_mode`."""
		return self.encoder.name or INIT_MODE_ENCODERS[self.train.init_mode]

	@property
	def inference_mask(self) -> ModalityMask:
		return self.train.inference_modality_mask or self.train.modality_mask

	def training_sequence_cap(self) -> int:
		"""Sections x K candidates, plus genuine pairs, plus swapped pairs."""
		max_figures = self.model.max_figures
		return self.model.max_sections * self.train.K + max_figures + 2 * max_figures

	def inference_sequence_cap(self) -> int:
		max_figures = self.model.max_figures
		return (
			self.model.max_sections * self.sequence.inference_cap + 3 * max_figures
		)

	def validate_config(self) -> bool:
		"""Validate current configuration.

		Returns:
		    True if configuration is valid

		Raises:
		    ConfigError: If configuration is invalid
		"""
		if self.encoder_name not in ENCODER_NAMES:
			raise ConfigError(
				f'encoder.name must be one of {", ".join(ENCODER_NAMES)}'
			)
		if self.encoder.max_text_tokens < 2:
			raise ConfigError('encoder.max_text_tokens must leave room for markers')

		if self.model.dim < 1 or self.model.heads < 1:
			raise ConfigError('model.dim and model.heads must be positive')
		if self.model.dim % self.model.heads:
			raise ConfigError('model.dim must be divisible by model.heads')
		if self.model.cross_depth < 1:
			raise ConfigError('model.cross_depth must be at least 1')
		if self.model.layout_depth < 0:
			raise ConfigError('model.layout_depth cannot be negative')
		if not 0.0 <= self.model.dropout < 1.0:
			raise ConfigError('model.dropout must be in [0, 1)')

		if self.loss.temperature <= 0:
			raise ConfigError('loss.temperature must be positive')
		if self.sequence.inference_cap < 1:
			raise ConfigError('sequence.inference_cap must be at least 1')

		if self.train.batch_size < 1:
			raise ConfigError('train.batch_size must be at least 1')
		if self.train.learning_rate <= 0:
			raise ConfigError('train.learning_rate must be positive')
		if self.train.K < 1:
			raise ConfigError('train.K must be at least 1')
		if self.train.epochs < 1 or self.train.patience < 1:
			raise ConfigError('train.epochs and train.patience must be at least 1')
		if self.train.warmup_steps < 0:
			raise ConfigError('train.warmup_steps cannot be negative')

		logger.info('Configuration validation passed')
		return True

	def to_dict(self) -> Dict[str, Any]:
		"""Export configuration as dictionary."""
		tree: Dict[str, Any] = {}
		for section, section_cls in self.SECTIONS.items():
			values = getattr(self, section)
			tree[section] = {
				field.name: (
					value.value
					if isinstance(value := getattr(values, field.name), Enum)
					else value
				)
				for field in fields(section_cls)
			}
		return tree

	def config_hash(self) -> str:
		"""SHA-256 of the canonical JSON form of `to_dict()`."""
		canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
		return hashlib.sha256(canonical.encode('utf-8')).hexdigest()
