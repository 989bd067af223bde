"""Builders shared by test modules."""

from figlink.config import ConfigManager
from figlink.data.models import Document, Figure, Section, Sentence

SMALL_DIM = 32

SMALL_OVERRIDES = {
	'encoder.name': 'hashing',
	'encoder.dim': SMALL_DIM,
	'model.dim': SMALL_DIM,
	'model.heads': 4,
	'model.cross_depth': 1,
	'model.layout_depth': 1,
	'model.dropout': 0.0,
	'train.batch_size': 8,
	'train.workers': 1,
}


def make_config(**overrides) -> ConfigManager:
	"""Small CPU configuration; keyword names use `__` for the dot (train__K=3)."""
	values = dict(SMALL_OVERRIDES)
	values.update({key.replace('__', '.'): value for key, value in overrides.items()})
	return ConfigManager(overrides=values, load_env=False)


def build_document(
	doc_id: str, sections: list[list[str]], figures: list[tuple[str, str, int]]
) -> Document:
	return Document(
		id=doc_id,
		title=f'Article {doc_id}',
		sections=[
			Section(
				index=j,
				heading=f'Section {j}',
				sentences=[Sentence.from_text(i, text) for i, text in enumerate(texts)],
			)
			for j, texts in enumerate(sections)
		],
		figures=[
			Figure(figure_index=k, image_ref=ref, caption=caption, gt_section_index=gt)
			for k, (ref, caption, gt) in enumerate(figures)
		],
	)
