from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .synthetic import generate_synthetic_corpus
from .trainer import Trainer, load_linker, train

__all__ = [
	'Checkpoint',
	'Trainer',
	'generate_synthetic_corpus',
	'load_checkpoint',
	'load_linker',
	'save_checkpoint',
	'train',
]
