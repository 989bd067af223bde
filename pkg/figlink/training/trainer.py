"""
Training loop.

AdamW with decoupled weight decay, linear warmup (one epoch by default) then a
constant rate. Every figure of every training document is an anchor once per
epoch; a batch's loss is the mean over its anchors. Validation R@1 is computed
after each epoch, the best state is kept and training stops after `patience`
epochs without improvement.
"""

import copy
import json
import logging
import math
import random
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import torch

from figlink.config import ConfigManager
from figlink.data.models import Document
from figlink.encoders.adapters import EncoderAdapter, build_adapter
from figlink.encoders.cache import EmbeddingCache
from figlink.encoders.features import FeatureStore
from figlink.errors import CheckpointError, DivergedLoss, EmptyCorpus
from figlink.evaluation.report import evaluate
from figlink.model.linker import FigureLinker, apply_ablation
from figlink.training.checkpoint import Checkpoint, save_checkpoint
from figlink.utils.progress import progress

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = 'checkpoint.pt'
HISTORY_NAME = 'metrics.json'


def seed_everything(seed: int) -> None:
	random.seed(seed)
	np.random.seed(seed)
	torch.manual_seed(seed)


class Trainer:
	def __init__(
		self,
		config: ConfigManager,
		adapter: Optional[EncoderAdapter] = None,
		cache: Optional[EmbeddingCache] = None,
	):
		config.validate_config()
		self.config = config
		seed_everything(config.train.seed)
		self.adapter = adapter or build_adapter(config)
		self.model = apply_ablation(config, self.adapter.dimension)
		self.optimizer = torch.optim.AdamW(
			self.model.parameters(),
			lr=config.train.learning_rate,
			weight_decay=config.train.weight_decay,
		)
		self.store = FeatureStore(self.adapter, cache, config.train.workers)
		self.step = 0
		self.total_steps: Optional[int] = None
		self.history: list[dict] = []

	def _anchors(self, documents: Sequence[Document]) -> list[tuple[int, int]]:
		return [
			(doc_index, figure_index)
			for doc_index, document in enumerate(documents)
			for figure_index in range(len(document.figures))
		]

	def _train_epoch(
		self,
		documents: Sequence[Document],
		anchors: list[tuple[int, int]],
		scheduler: torch.optim.lr_scheduler.LRScheduler,
		epoch: int,
	) -> float:
		self.model.train()
		mask = self.config.train.modality_mask
		batch_size = self.config.train.batch_size
		losses = []
		for start in range(0, len(anchors), batch_size):
			batch = anchors[start : start + batch_size]
			batch_loss = torch.stack(
				[
					self.model(self.store.get(documents[doc_index], mask), figure_index).value
					for doc_index, figure_index in batch
				]
			).mean()
			if not torch.isfinite(batch_loss):
				logger.error(f'Non-finite loss at step {self.step} (epoch {epoch})')
				raise DivergedLoss(
					f'Loss diverged at step {self.step}', {'step': self.step, 'epoch': epoch}
				)
			self.optimizer.zero_grad()
			batch_loss.backward()
			self.optimizer.step()
			scheduler.step()
			self.step += 1
			losses.append(float(batch_loss.detach()))
			progress.advance(
				'train',
				self.step,
				self.total_steps,
				detail=f'epoch {epoch}',
				metric=f'loss {losses[-1]:.4f}',
			)
		return float(np.mean(losses)) if losses else 0.0

	def fit(
		self,
		train_docs: Sequence[Document],
		val_docs: Sequence[Document],
		out_dir: Optional[str | Path] = None,
	) -> Checkpoint:
		"""Train and return the checkpoint with the best validation R@1.

		Raises:
		    EmptyCorpus: Empty training or validation split
		    DivergedLoss: Non-finite training loss
		"""
		train = self.config.train
		anchors = self._anchors(train_docs)
		if not anchors or not val_docs:
			raise EmptyCorpus('Training needs figures in the train split and a validation split')

		self.store.prefetch(train_docs, train.modality_mask)
		self.store.prefetch(val_docs, self.config.inference_mask)

		steps_per_epoch = math.ceil(len(anchors) / train.batch_size)
		warmup = train.warmup_steps or steps_per_epoch
		self.total_steps = steps_per_epoch * train.epochs
		scheduler = torch.optim.lr_scheduler.LambdaLR(
			self.optimizer, lambda step: min(1.0, (step + 1) / warmup)
		)
		rng = random.Random(train.seed)

		best_r1 = -1.0
		best_state = None
		stale = 0
		for epoch in range(1, train.epochs + 1):
			rng.shuffle(anchors)
			train_loss = self._train_epoch(train_docs, anchors, scheduler, epoch)

			progress.advance('validate', epoch - 1, train.epochs, detail=f'epoch {epoch}')
			report = evaluate(
				self.model,
				val_docs,
				self.store,
				self.config.inference_mask,
				model_name='validation',
			)
			entry = {
				'epoch': epoch,
				'step': self.step,
				'train_loss': train_loss,
				'val_r_at_1': report.aggregate.r_at_1,
				'val_r_at_3': report.aggregate.r_at_3,
				'val_all_r_at_1': report.aggregate.all_r_at_1,
			}
			self.history.append(entry)
			progress.advance('validate', epoch, metric=f'R@1 {entry["val_r_at_1"]:.3f}')
			logger.info(
				f'Epoch {epoch}: loss {train_loss:.4f}, val R@1 {entry["val_r_at_1"]:.3f}, '
				f'A-R@1 {entry["val_all_r_at_1"]:.3f}'
			)

			if entry['val_r_at_1'] > best_r1:
				best_r1 = entry['val_r_at_1']
				best_state = copy.deepcopy(self.model.state_dict())
				stale = 0
				if out_dir is not None:
					save_checkpoint(self._checkpoint(best_state), Path(out_dir) / CHECKPOINT_NAME)
			else:
				stale += 1
				if stale >= train.patience:
					logger.info(f'Early stopping after epoch {epoch} (patience {train.patience})')
					break

		progress.finish('validate')
		progress.finish('train', f'best val R@1 {best_r1:.3f}')
		self.model.load_state_dict(best_state)
		checkpoint = self._checkpoint(best_state)
		if out_dir is not None:
			save_checkpoint(checkpoint, Path(out_dir) / CHECKPOINT_NAME)
			(Path(out_dir) / HISTORY_NAME).write_text(
				json.dumps(self.history, indent=2) + '\n', encoding='utf-8'
			)
		return checkpoint

	def _checkpoint(self, state: dict) -> Checkpoint:
		return Checkpoint(
			tensors={name: tensor.clone() for name, tensor in state.items()},
			config=self.config.to_dict(),
			step=self.step,
			metric_history=list(self.history),
		)


def train(
	splits: tuple[Sequence[Document], Sequence[Document]],
	config: ConfigManager,
	adapter: Optional[EncoderAdapter] = None,
	cache: Optional[EmbeddingCache] = None,
	out_dir: Optional[str | Path] = None,
) -> Checkpoint:
	train_docs, val_docs = splits
	return Trainer(config, adapter, cache).fit(train_docs, val_docs, out_dir)


def load_linker(
	checkpoint: Checkpoint, overrides: Optional[dict[str, Any]] = None
) -> tuple[FigureLinker, ConfigManager]:
	"""Rebuild the model a checkpoint was trained with and load its weights.

	Overrides are meant for inference-time keys such as
	`train.inference_modality_mask`; structural keys make the load fail. A
	modality masked only at inference gets a freshly seeded missing-modality
	vector.

	Raises:
	    CheckpointError: Tensors do not match the configured model
	"""
	config = ConfigManager.from_dict(checkpoint.config)
	for key, value in (overrides or {}).items():
		config.set(key, value)
	config.validate_config()
	seed_everything(config.train.seed)
	model = apply_ablation(config)
	try:
		result = model.load_state_dict(checkpoint.tensors, strict=False)
	except RuntimeError as e:
		raise CheckpointError(f'Checkpoint does not match its configuration: {e}') from e
	absent = [key for key in result.missing_keys if not key.startswith('missing.')]
	if absent or result.unexpected_keys:
		raise CheckpointError(
			'Checkpoint does not match its configuration',
			{'missing': absent, 'unexpected': list(result.unexpected_keys)},
		)
	if result.missing_keys:
		logger.warning(f'Initialised {", ".join(result.missing_keys)} for the inference mask')
	model.eval()
	return model, config
