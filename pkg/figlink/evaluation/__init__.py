from .annotation import export_annotation, import_responses
from .baselines import ZeroShotRanker
from .metrics import aggregate_metrics, all_correct_rate, recall_at_n
from .report import evaluate, write_report

__all__ = [
	'ZeroShotRanker',
	'aggregate_metrics',
	'all_correct_rate',
	'evaluate',
	'export_annotation',
	'import_responses',
	'recall_at_n',
	'write_report',
]
