"""Shared fixtures: a small hashing-encoder configuration, PNG images and toy documents."""

import pytest
from PIL import Image

from figlink.config import ConfigManager
from figlink.data.models import Document
from figlink.encoders.adapters import HashingAdapter
from figlink.encoders.features import FeatureStore
from tests.helpers import SMALL_DIM, build_document, make_config


@pytest.fixture
def small_config() -> ConfigManager:
	return make_config()


@pytest.fixture
def adapter() -> HashingAdapter:
	return HashingAdapter(dimension=SMALL_DIM)


@pytest.fixture
def store(adapter) -> FeatureStore:
	return FeatureStore(adapter, workers=1)


@pytest.fixture
def make_image(tmp_path):
	"""Factory writing a solid-colour PNG and returning its path."""

	def _make(name: str, color=(200, 30, 30), mode: str = 'RGB') -> str:
		path = tmp_path / f'{name}.png'
		fill = color if mode == 'RGB' else color[0]
		Image.new(mode, (24, 24), fill).save(path)
		return str(path)

	return _make


@pytest.fixture
def simple_document(make_image) -> Document:
	"""Three sections, two figures; each caption names an entity of its section."""
	return build_document(
		'simple',
		[
			['The castle was built on a hill.', 'Its walls are thick.'],
			[
				'Queen Mara ruled the valley for decades.',
				'The harvest grew every year.',
				'Trade routes opened.',
			],
			['The river Vell floods in spring.', 'Farmers moved uphill.'],
		],
		[
			(make_image('fig0', (200, 30, 30)), 'Portrait of Queen Mara.', 1),
			(make_image('fig1', (20, 90, 220)), 'The Vell in flood.', 2),
		],
	)
