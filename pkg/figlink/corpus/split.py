import logging
import random
from typing import Sequence

from figlink.data.models import Document
from figlink.errors import TooFewDocuments

logger = logging.getLogger(__name__)

MIN_DOCUMENTS = 10


def split_sizes(count: int) -> tuple[int, int, int]:
	"""80/10/10 by document count; the training split takes the remainder."""
	held_out = count // 10
	return count - 2 * held_out, held_out, held_out


def split_corpus(
	docs: Sequence[Document], seed: int
) -> tuple[list[Document], list[Document], list[Document]]:
	"""Deterministic disjoint train/val/test partition.

	Raises:
	    TooFewDocuments: Fewer than 10 documents
	"""
	if len(docs) < MIN_DOCUMENTS:
		raise TooFewDocuments(
			f'Need at least {MIN_DOCUMENTS} documents to split, got {len(docs)}',
			{'count': len(docs)},
		)
	order = list(range(len(docs)))
	random.Random(seed).shuffle(order)
	n_train, n_val, _ = split_sizes(len(docs))

	train = [docs[i] for i in order[:n_train]]
	val = [docs[i] for i in order[n_train : n_train + n_val]]
	test = [docs[i] for i in order[n_train + n_val :]]
	logger.info(f'Split {len(docs)} documents into {len(train)}/{len(val)}/{len(test)}')
	return train, val, test
