"""
Tests for checkpoints, the synthetic corpus and the training loop.
"""

import json
import math
import re
from pathlib import Path

import pytest
import torch

from figlink.config import ModalityMask
from figlink.corpus.split import split_corpus
from figlink.encoders.adapters import HashingAdapter
from figlink.encoders.features import FeatureStore
from figlink.errors import CheckpointError, EmptyCorpus
from figlink.evaluation.report import evaluate
from figlink.model.linker import apply_ablation
from figlink.training.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from figlink.training.synthetic import generate_synthetic_corpus
from figlink.training.trainer import CHECKPOINT_NAME, HISTORY_NAME, Trainer, load_linker
from tests.helpers import SMALL_DIM, make_config


def _checkpoint(config) -> Checkpoint:
	model = apply_ablation(config)
	return Checkpoint(
		tensors=dict(model.state_dict()),
		config=config.to_dict(),
		step=3,
		metric_history=[{'epoch': 1, 'val_r_at_1': 0.5}],
	)


class TestCheckpoint:
	"""Single-file container."""

	def test_roundtrip(self, tmp_path, small_config):
		checkpoint = _checkpoint(small_config)
		path = save_checkpoint(checkpoint, tmp_path / 'run' / CHECKPOINT_NAME)
		loaded = load_checkpoint(path)
		assert loaded.step == 3
		assert loaded.config == small_config.to_dict()
		assert loaded.metric_history == [{'epoch': 1, 'val_r_at_1': 0.5}]
		assert loaded.tensors.keys() == checkpoint.tensors.keys()
		for name, tensor in checkpoint.tensors.items():
			assert torch.equal(loaded.tensors[name], tensor)

	@pytest.mark.parametrize(
		'overrides,groups',
		[
			({}, {'layout', 'fusion.cross', 'fusion.layout'}),
			({'train__layout_info': False}, {'fusion.cross', 'fusion.layout'}),
			({'train__fusion': 'late'}, {'layout', 'fusion.layout', 'late'}),
			(
				{'train__strategy': 'weighted_avg'},
				{'layout', 'sections', 'fusion.cross', 'fusion.layout'},
			),
			(
				{'train__modality_mask': 'image_only'},
				{'layout', 'missing', 'fusion.cross', 'fusion.layout'},
			),
		],
	)
	def test_parameter_groups_follow_ablation(self, overrides, groups):
		assert _checkpoint(make_config(**overrides)).parameter_groups() == groups

	def test_missing_file(self, tmp_path):
		with pytest.raises(CheckpointError):
			load_checkpoint(tmp_path / 'absent.pt')

	def test_malformed_payload(self, tmp_path):
		path = tmp_path / 'bad.pt'
		torch.save({'tensors': {}}, path)
		with pytest.raises(CheckpointError):
			load_checkpoint(path)

	def test_unsupported_format(self, tmp_path):
		path = tmp_path / 'future.pt'
		torch.save({'metadata': json.dumps({'format': 99}), 'tensors': {}}, path)
		with pytest.raises(CheckpointError):
			load_checkpoint(path)


class TestLoadLinker:
	"""Rebuilding a model from a checkpoint."""

	def test_weights_restored(self, small_config):
		checkpoint = _checkpoint(small_config)
		model, config = load_linker(checkpoint)
		assert not model.training
		assert config.config_hash() == small_config.config_hash()
		for name, tensor in model.state_dict().items():
			assert torch.equal(tensor, checkpoint.tensors[name])

	def test_inference_mask_override(self, small_config, store, simple_document):
		checkpoint = _checkpoint(small_config)
		model, config = load_linker(checkpoint, {'train.inference_modality_mask': 'image_only'})
		assert config.inference_mask is ModalityMask.IMAGE_ONLY
		assert 'missing.caption' in model.state_dict()
		ranking = model.rank(store.get(simple_document, ModalityMask.IMAGE_ONLY), 0)
		assert len(ranking) == 7

	def test_mismatched_tensors(self, small_config):
		checkpoint = _checkpoint(small_config)
		del checkpoint.tensors['fusion.layout.projection.weight']
		with pytest.raises(CheckpointError):
			load_linker(checkpoint)
		checkpoint = _checkpoint(small_config)
		checkpoint.config = make_config(train__layout_info=False).to_dict()
		with pytest.raises(CheckpointError):
			load_linker(checkpoint)


class TestSyntheticCorpus:
	"""Planted-alignment generator."""

	def test_deterministic(self, tmp_path):
		first = generate_synthetic_corpus(tmp_path / 'a', n_docs=4, seed=5)
		second = generate_synthetic_corpus(tmp_path / 'b', n_docs=4, seed=5)
		strip = re.compile(r'"image_ref": "[^"]*"')
		assert [strip.sub('', json.dumps(doc.to_record())) for doc in first] == [
			strip.sub('', json.dumps(doc.to_record())) for doc in second
		]

	def test_planted_sentence_in_ground_truth_section(self, tmp_path):
		for document in generate_synthetic_corpus(tmp_path, n_docs=20, seed=1):
			assert 2 <= len(document.figures) <= 4
			assert 2 <= len(document.sections) <= 8
			for figure in document.figures:
				name = figure.caption.split(' with ')[0]
				holders = [
					section.index
					for section in document.sections
					for sentence in section.sentences
					if re.search(rf'\b{re.escape(name)}\b', sentence.text)
				]
				assert holders == [figure.gt_section_index]

	def test_images_written(self, tmp_path):
		documents = generate_synthetic_corpus(tmp_path, n_docs=2, seed=0)
		for figure in documents[0].figures:
			assert Path(figure.image_ref).exists()
			assert Path(figure.image_ref).parent == tmp_path.resolve()


class TestTrainer:
	"""The optimisation loop."""

	@pytest.fixture
	def corpus(self, tmp_path):
		documents = generate_synthetic_corpus(
			tmp_path / 'images', n_docs=12, max_sections=3, max_figures=2, seed=0
		)
		return documents[:10], documents[10:]

	def test_fit_writes_checkpoint_and_history(self, tmp_path, corpus):
		train_docs, val_docs = corpus
		config = make_config(train__epochs=2, train__patience=5)
		trainer = Trainer(config, HashingAdapter(dimension=SMALL_DIM))
		checkpoint = trainer.fit(train_docs, val_docs, tmp_path / 'run')

		anchors = sum(len(doc.figures) for doc in train_docs)
		assert trainer.step == 2 * math.ceil(anchors / config.train.batch_size)
		assert checkpoint.step == trainer.step
		assert (tmp_path / 'run' / CHECKPOINT_NAME).exists()
		history = json.loads((tmp_path / 'run' / HISTORY_NAME).read_text())
		assert [entry['epoch'] for entry in history] == [1, 2]
		assert all(0.0 <= entry['val_r_at_1'] <= 1.0 for entry in history)
		assert math.isfinite(history[-1]['train_loss'])

		model, _ = load_linker(load_checkpoint(tmp_path / 'run' / CHECKPOINT_NAME))
		store = FeatureStore(HashingAdapter(dimension=SMALL_DIM), workers=1)
		assert model.rank(store.get(val_docs[0]), 0)

	def test_empty_splits(self, corpus):
		train_docs, _ = corpus
		trainer = Trainer(make_config(train__epochs=1))
		with pytest.raises(EmptyCorpus):
			trainer.fit(train_docs, [])
		with pytest.raises(EmptyCorpus):
			trainer.fit([], train_docs)

	def test_same_seed_same_weights(self, corpus):
		train_docs, val_docs = corpus
		config = make_config(train__epochs=1)
		first = Trainer(config).fit(train_docs, val_docs)
		second = Trainer(make_config(train__epochs=1)).fit(train_docs, val_docs)
		for name, tensor in first.tensors.items():
			assert torch.allclose(tensor, second.tensors[name], atol=1e-6)

	def test_same_seed_same_report(self, corpus):
		train_docs, val_docs = corpus
		reports = []
		for _ in range(2):
			config = make_config(train__epochs=1, train__seed=9)
			model, config = load_linker(Trainer(config).fit(train_docs, val_docs))
			store = FeatureStore(HashingAdapter(dimension=SMALL_DIM), workers=1)
			reports.append(evaluate(model, val_docs, store, config=config.to_dict()))
		assert reports[0] == reports[1]
		assert reports[0].aggregate.figure_count == sum(len(doc.figures) for doc in val_docs)

	@pytest.mark.slow
	def test_synthetic_training_reduces_loss(self, tmp_path):
		documents = generate_synthetic_corpus(tmp_path, n_docs=60, max_sections=4, seed=2)
		train_docs, val_docs, _ = split_corpus(documents, seed=2)
		trainer = Trainer(make_config(train__epochs=6, train__patience=6))
		trainer.fit(train_docs, val_docs)
		assert trainer.history[-1]['train_loss'] < trainer.history[0]['train_loss']

	@pytest.mark.slow
	def test_synthetic_corpus_is_learned_and_needs_layout(self, tmp_path):
		documents = generate_synthetic_corpus(tmp_path, n_docs=200, seed=0)
		train_docs, val_docs, _ = split_corpus(documents, seed=0)
		results = {}
		for layout_info in (True, False):
			trainer = Trainer(make_config(train__epochs=2, train__layout_info=layout_info))
			trainer.fit(train_docs, val_docs)
			results[layout_info] = evaluate(trainer.model, val_docs, trainer.store).aggregate
		assert results[True].r_at_1 >= 0.95
		assert results[True].all_r_at_1 >= 0.85
		assert results[False].r_at_1 <= results[True].r_at_1 - 0.05
