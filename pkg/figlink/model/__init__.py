from .contrastive import build_pairs, contrastive_loss, rank_inference, section_score
from .fusion import CrossModalFusion, LayoutTransformer
from .layout import LayoutEmbedding, entity_rank
from .linker import FigureLinker, apply_ablation

__all__ = [
	'CrossModalFusion',
	'FigureLinker',
	'LayoutEmbedding',
	'LayoutTransformer',
	'apply_ablation',
	'build_pairs',
	'contrastive_loss',
	'entity_rank',
	'rank_inference',
	'section_score',
]
