# Expose key models
from .models import (
	AnnotationPackage,
	AnnotationQuestion,
	CorpusStats,
	Document,
	EvalAggregate,
	EvalReport,
	Figure,
	FigurePrediction,
	FilterReport,
	HumanEvalSummary,
	RankedSentence,
	RunManifest,
	SalienceScore,
	Section,
	Sentence,
)

__all__ = [
	'AnnotationPackage',
	'AnnotationQuestion',
	'CorpusStats',
	'Document',
	'EvalAggregate',
	'EvalReport',
	'Figure',
	'FigurePrediction',
	'FilterReport',
	'HumanEvalSummary',
	'RankedSentence',
	'RunManifest',
	'SalienceScore',
	'Section',
	'Sentence',
]
