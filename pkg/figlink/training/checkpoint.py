"""
Single-file checkpoint container.

``torch.save`` of ``{'metadata': <JSON string>, 'tensors': {name: tensor}}``.
Tensor names are the linker's state-dict keys (``layout.*``, ``fusion.cross.*``,
``fusion.layout.*``, ``sections.*``, ``missing.*``, ``late.*``); metadata holds
the config snapshot, step counter and metric history.
"""

import json
import logging
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

import torch

from figlink.errors import CheckpointError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
	tensors: Dict[str, torch.Tensor]
	config: Dict[str, Any]
	step: int = 0
	metric_history: List[Dict[str, Any]] = field(default_factory=list)

	def metadata(self) -> Dict[str, Any]:
		return {
			'format': FORMAT_VERSION,
			'config': self.config,
			'step': self.step,
			'metric_history': self.metric_history,
		}

	def parameter_groups(self) -> set[str]:
		"""Top-level groups present, e.g. {'layout', 'fusion.cross', 'fusion.layout'}."""
		groups = set()
		for name in self.tensors:
			parts = name.split('.')
			groups.add('.'.join(parts[:2]) if parts[0] == 'fusion' else parts[0])
		return groups


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> Path:
	path = Path(path)
	path.parent.mkdir(parents=True, exist_ok=True)
	payload = {
		'metadata': json.dumps(checkpoint.metadata(), sort_keys=True),
		'tensors': {
			name: tensor.detach().cpu().contiguous()
			for name, tensor in checkpoint.tensors.items()
		},
	}
	torch.save(payload, path)
	logger.info(f'Saved checkpoint ({len(payload["tensors"])} tensors) to {path}')
	return path


def load_checkpoint(path: str | Path) -> Checkpoint:
	"""Load a checkpoint written by `save_checkpoint`.

	Raises:
	    CheckpointError: Missing, unreadable or malformed checkpoint file
	"""
	path = Path(path)
	try:
		payload = torch.load(path, map_location='cpu', weights_only=True)
		metadata = json.loads(payload['metadata'])
		tensors = dict(payload['tensors'])
	except FileNotFoundError as e:
		raise CheckpointError(f'Checkpoint not found: {path}') from e
	except (KeyError, TypeError, ValueError, RuntimeError, EOFError, pickle.UnpicklingError) as e:
		logger.error(f'Cannot read checkpoint {path}: {e}')
		raise CheckpointError(f'Cannot read checkpoint {path}: {e}') from e

	if metadata.get('format') != FORMAT_VERSION:
		raise CheckpointError(f'Unsupported checkpoint format {metadata.get("format")!r}')
	return Checkpoint(
		tensors=tensors,
		config=metadata['config'],
		step=metadata['step'],
		metric_history=metadata['metric_history'],
	)
