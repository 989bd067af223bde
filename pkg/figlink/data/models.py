from typing import Any, Optional

from pydantic import BaseModel, Field, model_validator


class Sentence(BaseModel):
	index: int
	text: str
	token_count: int

	@model_validator(mode='after')
	def _check_text(self) -> 'Sentence':
		if not self.text.strip():
			raise ValueError('sentence text is empty after whitespace normalization')
		if self.token_count < 1:
			raise ValueError('sentence token_count must be at least 1')
		return self

	@classmethod
	def from_text(cls, index: int, text: str) -> 'Sentence':
		text = ' '.join(text.split())
		return cls(index=index, text=text, token_count=len(text.split()))


class Section(BaseModel):
	index: int
	heading: str = ''
	sentences: list[Sentence]

	@model_validator(mode='after')
	def _check_sentences(self) -> 'Section':
		if not self.sentences:
			raise ValueError(f'section {self.index} has no sentences')
		for position, sentence in enumerate(self.sentences):
			if sentence.index != position:
				raise ValueError(f'section {self.index}: sentence indices not contiguous')
		return self

	@property
	def text(self) -> str:
		return ' '.join(sentence.text for sentence in self.sentences)

	@property
	def word_count(self) -> int:
		return sum(sentence.token_count for sentence in self.sentences)


class Figure(BaseModel):
	figure_index: int
	image_ref: str
	caption: str = ''
	gt_section_index: int


class Document(BaseModel):
	id: str
	title: str
	sections: list[Section]
	figures: list[Figure] = Field(default_factory=list)

	@model_validator(mode='after')
	def _check_indices(self) -> 'Document':
		for position, section in enumerate(self.sections):
			if section.index != position:
				raise ValueError(f'{self.id}: section indices not contiguous')
		for position, figure in enumerate(self.figures):
			if figure.figure_index != position:
				raise ValueError(f'{self.id}: figure indices not contiguous')
			if not 0 <= figure.gt_section_index < len(self.sections):
				raise ValueError(
					f'{self.id}: figure {position} points at missing section '
					f'{figure.gt_section_index}'
				)
		return self

	@property
	def word_count(self) -> int:
		return sum(section.word_count for section in self.sections)

	def to_record(self) -> dict[str, Any]:
		"""Canonical JSONL record."""
		return {
			'id': self.id,
			'title': self.title,
			'sections': [
				{
					'heading': section.heading,
					'sentences': [sentence.text for sentence in section.sentences],
				}
				for section in self.sections
			],
			'figures': [
				{
					'image_ref': figure.image_ref,
					'caption': figure.caption,
					'gt_section_index': figure.gt_section_index,
				}
				for figure in self.figures
			],
		}

	@classmethod
	def from_record(cls, record: dict[str, Any]) -> 'Document':
		sections = [
			Section(
				index=j,
				heading=raw.get('heading', ''),
				sentences=[
					Sentence.from_text(k, text) for k, text in enumerate(raw['sentences'])
				],
			)
			for j, raw in enumerate(record['sections'])
		]
		figures = [
			Figure(
				figure_index=k,
				image_ref=raw['image_ref'],
				caption=raw.get('caption', ''),
				gt_section_index=raw['gt_section_index'],
			)
			for k, raw in enumerate(record.get('figures', []))
		]
		return cls(
			id=record['id'], title=record['title'], sections=sections, figures=figures
		)


class CorpusStats(BaseModel):
	avg_unit_length: float
	avg_doc_length: float
	avg_sent_length: float
	avg_sent_per_unit: float
	avg_img_per_doc: float
	doc_count: int
	section_count: int
	figure_count: int
	images_per_section: dict[int, int]
	sections_per_doc: dict[int, int]


class RejectedDocument(BaseModel):
	id: str
	reason: str


class ParseFailure(BaseModel):
	source: str
	code: str
	message: str


class FilterReport(BaseModel):
	accepted: list[str] = Field(default_factory=list)
	rejected: list[RejectedDocument] = Field(default_factory=list)
	parse_errors: list[ParseFailure] = Field(default_factory=list)


class SalienceScore(BaseModel):
	section_index: int
	sentence_index: int
	score: float
	sim_image: Optional[float] = None
	sim_caption: Optional[float] = None


class RankedSentence(BaseModel):
	section_index: int
	# None when the section is represented by one pooled vector
	sentence_index: Optional[int]
	score: float


class FigurePrediction(BaseModel):
	doc_id: str
	figure_index: int
	gt_section: int
	num_sections: int
	predicted_sections: list[int]
	top_sentence_section: int
	top_sentence_index: Optional[int] = None
	top_sentence: Optional[str] = None
	image_ref: str = ''
	caption: str = ''


class EvalAggregate(BaseModel):
	r_at_1: float
	r_at_3: float
	all_r_at_1: float
	figure_count: int
	document_count: int


class EvalReport(BaseModel):
	aggregate: EvalAggregate
	model: str = 'figlink'
	config: dict[str, Any] = Field(default_factory=dict)
	figures: list[FigurePrediction]


class AnnotationQuestion(BaseModel):
	question_id: str
	doc_id: str
	figure_index: int
	image_ref: str
	caption: str
	# candidates in displayed order; displayed[p] came from source candidate permutation[p]
	candidates: list[str]
	permutation: list[int]
	provenance: list[str]
	attention_check: bool = False
	expected_first: Optional[int] = None


class AnnotationPackage(BaseModel):
	seed: int
	models: list[str]
	questions: list[AnnotationQuestion]
	worker_orders: dict[str, list[str]] = Field(default_factory=dict)


class ModelHumanRank(BaseModel):
	model: str
	average_rank: float
	rank_shares: list[float]
	responses: int


class HumanEvalSummary(BaseModel):
	models: list[ModelHumanRank]
	workers_kept: list[str]
	workers_dropped: list[str]


class RunManifest(BaseModel):
	command: str
	argv: list[str]
	config_hash: str
	corpus_hash: Optional[str] = None
	seed: int
	revision: str
	started_at: str
	finished_at: Optional[str] = None
	outputs: list[str] = Field(default_factory=list)
