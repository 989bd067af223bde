"""Tests for configuration loading, overrides and validation."""

import json
import os
from unittest.mock import patch

import pytest

from figlink.config import (
	ConfigManager,
	FusionMode,
	InitMode,
	ModalityMask,
	SectionStrategy,
)
from figlink.errors import ConfigError
from tests.helpers import make_config


class TestConfigManager:
	"""Defaults, precedence and export."""

	def test_defaults(self):
		config = ConfigManager(load_env=False)
		assert config.model.dim == 512
		assert config.loss.temperature == 0.07
		assert config.train.K == 5
		assert config.train.strategy is SectionStrategy.SALIENT
		assert config.train.init_mode is InitMode.DUAL_VIT
		assert config.encoder_name == 'clip'
		assert config.inference_mask is ModalityMask.BOTH

	def test_environment_override(self):
		with patch.dict(
			os.environ, {'FIGLINK_TRAIN_FUSION': 'late', 'FIGLINK_NEGATIVES_HARD': 'off'}
		):
			config = ConfigManager()
		assert config.train.fusion is FusionMode.LATE
		assert config.negatives.hard is False

	def test_file_overrides_environment_and_set_overrides_file(self, tmp_path):
		path = tmp_path / 'run.toml'
		path.write_text('[train]\nK = 3\nfusion = "late"\n', encoding='utf-8')
		with patch.dict(os.environ, {'FIGLINK_TRAIN_K': '9'}):
			config = ConfigManager(path, overrides={'train.fusion': 'early'})
		assert config.train.K == 3
		assert config.train.fusion is FusionMode.EARLY

	def test_json_file_with_dotted_keys(self, tmp_path):
		path = tmp_path / 'run.json'
		path.write_text(json.dumps({'train.K': 7, 'encoder': {'name': 'hashing'}}))
		config = ConfigManager(path, load_env=False)
		assert config.train.K == 7
		assert config.encoder_name == 'hashing'

	def test_scratch_init_uses_hashing(self):
		config = ConfigManager(overrides={'train.init_mode': 'scratch'}, load_env=False)
		assert config.encoder_name == 'hashing'

	def test_inference_mask_defaults_to_training_mask(self):
		config = make_config(train__modality_mask='caption_only')
		assert config.inference_mask is ModalityMask.CAPTION_ONLY
		config.set('train.inference_modality_mask', 'image_only')
		assert config.inference_mask is ModalityMask.IMAGE_ONLY

	def test_unknown_key(self):
		config = make_config()
		with pytest.raises(ConfigError):
			config.set('train.nope', 1)
		with pytest.raises(ConfigError):
			config.set('nowhere.K', 1)

	def test_bad_enum_and_bool(self):
		config = make_config()
		with pytest.raises(ConfigError):
			config.set('train.fusion', 'middle')
		with pytest.raises(ConfigError):
			config.set('negatives.hard', 'maybe')

	def test_missing_file(self, tmp_path):
		with pytest.raises(ConfigError):
			ConfigManager(tmp_path / 'absent.toml', load_env=False)

	def test_validation(self):
		assert make_config().validate_config() is True
		with pytest.raises(ConfigError):
			make_config(model__heads=5).validate_config()
		with pytest.raises(ConfigError):
			make_config(loss__temperature=0).validate_config()
		with pytest.raises(ConfigError):
			make_config(model__cross_depth=0).validate_config()

	def test_snapshot_roundtrip(self):
		config = make_config(train__fusion='late', train__inference_modality_mask='image_only')
		rebuilt = ConfigManager.from_dict(config.to_dict())
		assert rebuilt.to_dict() == config.to_dict()
		assert rebuilt.config_hash() == config.config_hash()
		assert make_config(train__K=4).config_hash() != config.config_hash()

	def test_sequence_caps(self):
		config = make_config()
		assert config.training_sequence_cap() == 32 * 5 + 3 * 30
		assert config.inference_sequence_cap() == 32 * 64 + 3 * 30
