"""
figlink: link figures (image + caption) to the section and sentence of a long
document that discusses them.

- corpus: parsing, sentence segmentation, entities, filtering, splits, statistics
- encoders: frozen text/image adapters, embedding cache, salience, section strategies
- model: layout embeddings, cross-modal and layout transformers, contrastive objective
- training: trainer, checkpoints, synthetic corpus
- evaluation: recall metrics, reports, zero-shot baselines, human-annotation packages
"""

__version__ = '0.1.0'

__all__ = ['__version__']
