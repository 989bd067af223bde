"""
Error types raised by figlink.

Every failure carries a short machine-readable ``code`` and an optional
``context`` dict so that batch operations (ingest, evaluation) can record
what went wrong per document instead of dropping it.
"""

from typing import Any, Dict, Optional


class FigLinkError(Exception):
	"""Base error for all figlink operations."""

	code = 'figlink_error'

	def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
		super().__init__(message)
		self.message = message
		self.context = context or {}

	def to_dict(self) -> Dict[str, Any]:
		return {'code': self.code, 'message': self.message, **self.context}


class ConfigError(FigLinkError):
	"""Invalid or unknown configuration value."""

	code = 'config_error'


class UsageError(FigLinkError):
	"""Bad command-line usage."""

	code = 'usage_error'


# Corpus


class MalformedPayload(FigLinkError):
	"""Article payload is missing its title or has no usable sections."""

	code = 'malformed_payload'


class UnresolvableImage(FigLinkError):
	"""Figure has no image locator."""

	code = 'unresolvable_image'


class EmptyText(FigLinkError):
	code = 'empty_text'


class TooFewDocuments(FigLinkError):
	code = 'too_few_documents'


class EmptyCorpus(FigLinkError):
	code = 'empty_corpus'


class UnreadableInput(FigLinkError):
	"""Input file is missing or cannot be read."""

	code = 'unreadable_input'


# Encoders


class AdapterUnavailable(FigLinkError):
	"""Encoder adapter cannot be loaded (missing package or checkpoint)."""

	code = 'adapter_unavailable'


class ImageDecodeError(FigLinkError):
	code = 'image_decode_error'


class MissingFigure(FigLinkError):
	"""Salient section encoding was requested without a query figure."""

	code = 'missing_figure'


class DimensionMismatch(FigLinkError):
	code = 'dimension_mismatch'


# Layout, fusion and the objective


class IndexOutOfRange(FigLinkError):
	"""Position or entity index exceeds its embedding table."""

	code = 'index_out_of_range'


class SequenceTooLong(FigLinkError):
	code = 'sequence_too_long'


class MissingSlot(FigLinkError):
	"""Contextual output lacks an embedding a pair set needs."""

	code = 'missing_slot'


class EmptyCandidates(FigLinkError):
	code = 'empty_candidates'


class InvalidTemperature(FigLinkError):
	code = 'invalid_temperature'


# Training and evaluation


class DivergedLoss(FigLinkError):
	"""Training loss became NaN or infinite."""

	code = 'diverged_loss'


class CheckpointError(FigLinkError):
	code = 'checkpoint_error'


class InsufficientRanking(FigLinkError):
	code = 'insufficient_ranking'


class InsufficientItems(FigLinkError):
	"""Not enough predictions to assemble an annotation package."""

	code = 'insufficient_items'
