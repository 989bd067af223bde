from .adapters import EncoderAdapter, HashingAdapter, PretrainedAdapter, build_adapter
from .cache import EmbeddingCache
from .features import DocumentFeatures, FeatureStore, build_features
from .salience import salience_score, select_salient
from .sections import SectionAggregator, encode_section

__all__ = [
	'DocumentFeatures',
	'EmbeddingCache',
	'EncoderAdapter',
	'FeatureStore',
	'HashingAdapter',
	'PretrainedAdapter',
	'SectionAggregator',
	'build_adapter',
	'build_features',
	'encode_section',
	'salience_score',
	'select_salient',
]
