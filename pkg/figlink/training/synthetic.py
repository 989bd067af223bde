"""
Planted-alignment corpus for end-to-end runs.

Each figure gets a capitalized two-word name that appears in its caption and
in exactly one sentence of its ground-truth section. Filler sentences are
lowercase pseudo-words behind a leading "The", so they carry no entities.
With probability `decoy_rate` a figure's topic words are also repeated in a
sentence of another section, which only the entity signal can tell apart.
"""

import logging
import random
from pathlib import Path
from typing import Any

from PIL import Image, ImageDraw

from figlink.corpus.io import write_corpus
from figlink.corpus.parser import derive_document_id
from figlink.data.models import Document, Figure, Section, Sentence

logger = logging.getLogger(__name__)

SYLLABLES = tuple(
	'ka lo mi ren tu sa vo pel dri nu bex qua tor fin gal shi mor zel ap ud'.split()
)

IMAGE_SIZE = (32, 32)


def _word(rng: random.Random) -> str:
	return ''.join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 3)))


def _filler(rng: random.Random) -> str:
	return 'The ' + ' '.join(_word(rng) for _ in range(rng.randint(5, 10))) + '.'


def _draw_image(rng: random.Random, path: Path) -> None:
	image = Image.new('RGB', IMAGE_SIZE, tuple(rng.randrange(256) for _ in range(3)))
	draw = ImageDraw.Draw(image)
	for _ in range(3):
		x, y = rng.randrange(IMAGE_SIZE[0] - 8), rng.randrange(IMAGE_SIZE[1] - 8)
		draw.rectangle(
			(x, y, x + 8, y + 8), fill=tuple(rng.randrange(256) for _ in range(3))
		)
	path.parent.mkdir(parents=True, exist_ok=True)
	image.save(path, format='PNG')


def _document(
	number: int,
	rng: random.Random,
	max_sections: int,
	max_figures: int,
	decoy_rate: float,
	image_dir: Path,
) -> Document:
	num_figures = rng.randint(2, max_figures)
	num_sections = rng.randint(2, max_sections)
	sentences = [[_filler(rng) for _ in range(rng.randint(3, 6))] for _ in range(num_sections)]

	title = f'Synthetic article {number:04d}'
	doc_id = derive_document_id(title)
	names: set[str] = set()
	figures = []
	for k in range(num_figures):
		while (name := f'{_word(rng).title()} {_word(rng).title()}') in names:
			pass
		names.add(name)
		topic = [_word(rng) for _ in range(3)]
		gt = rng.randrange(num_sections)

		planted = f'The {topic[0]} {_word(rng)} of {name} {_word(rng)} {_word(rng)}.'
		sentences[gt].insert(rng.randint(0, len(sentences[gt])), planted)
		if num_sections > 1 and rng.random() < decoy_rate:
			decoy_section = rng.choice([j for j in range(num_sections) if j != gt])
			decoy = f'The {" ".join(topic)} and {" ".join(topic)}.'
			sentences[decoy_section].insert(
				rng.randint(0, len(sentences[decoy_section])), decoy
			)

		image_path = image_dir / f'{doc_id}_{k}.png'
		_draw_image(rng, image_path)
		figures.append(
			Figure(
				figure_index=k,
				image_ref=str(image_path.resolve()),
				caption=f'{name} with {" ".join(topic)}.',
				gt_section_index=gt,
			)
		)

	sections = [
		Section(
			index=j,
			heading=f'Part {j + 1}',
			sentences=[Sentence.from_text(i, text) for i, text in enumerate(texts)],
		)
		for j, texts in enumerate(sentences)
	]
	return Document(id=doc_id, title=title, sections=sections, figures=figures)


def generate_synthetic_corpus(
	image_dir: str | Path,
	n_docs: int = 200,
	max_sections: int = 8,
	max_figures: int = 4,
	seed: int = 0,
	decoy_rate: float = 0.15,
) -> list[Document]:
	"""Generate `n_docs` documents and write their PNG images under `image_dir`.

	Args:
	    image_dir: Directory receiving one small PNG per figure
	    n_docs: Number of documents
	    max_sections: Upper bound on sections per document (at least 2)
	    max_figures: Upper bound on figures per document (at least 2)
	    seed: Seed for every random choice, images included
	    decoy_rate: Probability that a figure gets a lexical decoy in another section

	Returns:
	    Documents with contiguous indices, ready for `split_corpus`
	"""
	rng = random.Random(seed)
	image_dir = Path(image_dir)
	documents = [
		_document(number, rng, max(2, max_sections), max(2, max_figures), decoy_rate, image_dir)
		for number in range(n_docs)
	]
	logger.info(
		f'Generated {len(documents)} synthetic documents with '
		f'{sum(len(doc.figures) for doc in documents)} figures'
	)
	return documents


def write_synthetic_corpus(
	out_dir: str | Path, seed: int = 0, n_docs: int = 200, **options: Any
) -> Path:
	"""Write `corpus.jsonl` and `images/` under `out_dir`; returns the corpus path."""
	out_dir = Path(out_dir)
	documents = generate_synthetic_corpus(
		out_dir / 'images', n_docs=n_docs, seed=seed, **options
	)
	return write_corpus(documents, out_dir / 'corpus.jsonl')
