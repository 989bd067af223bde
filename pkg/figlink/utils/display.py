from typing import Any, Sequence

from colorama import Fore, Style
from tabulate import tabulate

from figlink.data.models import (
	CorpusStats,
	EvalReport,
	HumanEvalSummary,
	RankedSentence,
)


def _header(title: str) -> None:
	print(f'\n{Fore.WHITE}{Style.BRIGHT}{title}{Style.RESET_ALL}')


def _score_color(value: float) -> str:
	if value >= 0.5:
		return Fore.GREEN
	if value >= 0.3:
		return Fore.YELLOW
	return Fore.RED


def print_stats(stats: CorpusStats, reference: dict[str, dict[str, Any]] | None = None) -> None:
	"""Print corpus statistics, optionally next to the reference corpus averages."""
	_header('CORPUS STATISTICS:')
	rows = [
		['Documents', stats.doc_count],
		['Sections', stats.section_count],
		['Figures', stats.figure_count],
		['Avg unit length (words)', f'{stats.avg_unit_length:.1f}'],
		['Avg doc length (words)', f'{stats.avg_doc_length:.1f}'],
		['Avg sentence length (words)', f'{stats.avg_sent_length:.1f}'],
		['Avg sentences per unit', f'{stats.avg_sent_per_unit:.2f}'],
		['Avg images per doc', f'{stats.avg_img_per_doc:.2f}'],
	]
	print(tabulate(rows, tablefmt='grid', colalign=('left', 'right')))

	if reference:
		_header('AGAINST REFERENCE CORPUS:')
		rows = [
			[
				f'{Fore.CYAN}{name}{Style.RESET_ALL}',
				f'{values["observed"]:.2f}',
				f'{values["reference"]:.2f}',
				f'{values["delta"]:+.2f}',
			]
			for name, values in reference.items()
		]
		print(
			tabulate(
				rows,
				headers=[f'{Fore.WHITE}Statistic', 'Observed', 'Reference', 'Delta'],
				tablefmt='grid',
				colalign=('left', 'right', 'right', 'right'),
			)
		)


def print_eval_report(report: EvalReport) -> None:
	aggregate = report.aggregate
	_header(f'EVALUATION: [{Fore.CYAN}{report.model}{Style.RESET_ALL}]')
	rows = [
		[
			name,
			f'{_score_color(value)}{value:.3f}{Style.RESET_ALL}',
		]
		for name, value in (
			('R@1', aggregate.r_at_1),
			('R@3', aggregate.r_at_3),
			('A-R@1', aggregate.all_r_at_1),
		)
	]
	rows.append(['Figures', aggregate.figure_count])
	rows.append(['Documents', aggregate.document_count])
	print(tabulate(rows, tablefmt='grid', colalign=('left', 'right')))


def print_ranking(ranking: Sequence[RankedSentence], texts: dict[tuple[int, int], str], top: int = 10) -> None:
	"""Print the top ranked sentences for one figure."""
	_header('RANKED SENTENCES:')
	rows = []
	for position, entry in enumerate(ranking[:top], start=1):
		key = (entry.section_index, entry.sentence_index or 0)
		text = texts.get(key, '')
		if len(text) > 70:
			text = text[:67] + '...'
		rows.append(
			[
				position,
				entry.section_index,
				'-' if entry.sentence_index is None else entry.sentence_index,
				f'{_score_color(entry.score)}{entry.score:.4f}{Style.RESET_ALL}',
				text,
			]
		)
	print(
		tabulate(
			rows,
			headers=['#', 'Section', 'Sentence', 'Score', 'Text'],
			tablefmt='grid',
			colalign=('right', 'right', 'right', 'right', 'left'),
		)
	)


def print_human_eval(summary: HumanEvalSummary) -> None:
	_header('HUMAN EVALUATION:')
	width = max((len(row.rank_shares) for row in summary.models), default=0)
	rows = [
		[
			f'{Fore.CYAN}{row.model}{Style.RESET_ALL}',
			f'{row.average_rank:.2f}',
			*[f'{share:.1f}%' for share in row.rank_shares],
		]
		for row in summary.models
	]
	headers = ['Model', 'Avg Rank', *[f'Rank #{rank}' for rank in range(1, width + 1)]]
	print(tabulate(rows, headers=headers, tablefmt='grid'))
	if summary.workers_dropped:
		print(
			f'{Fore.YELLOW}Dropped {len(summary.workers_dropped)} worker(s) '
			f'failing attention checks{Style.RESET_ALL}'
		)
