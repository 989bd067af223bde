"""
Live status of the pipeline stages of one command.

Each stage (ingest, encode, train, validate, eval) reports how far it got
through its documents or steps plus a short metric, and the table shows one
row per stage in pipeline order with a bar, a counter and the elapsed time.
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

from rich.console import Console
from rich.live import Live
from rich.progress_bar import ProgressBar
from rich.style import Style
from rich.table import Table
from rich.text import Text

console = Console(stderr=True)

STAGE_ORDER = ('ingest', 'encode', 'train', 'validate', 'eval')


class StageState(Enum):
	RUNNING = 'running'
	DONE = 'done'
	FAILED = 'failed'


STATE_STYLES = {
	StageState.RUNNING: ('⋯', Style(color='yellow')),
	StageState.DONE: ('✓', Style(color='green', bold=True)),
	StageState.FAILED: ('✗', Style(color='red', bold=True)),
}


@dataclass
class Stage:
	name: str
	completed: int = 0
	total: Optional[int] = None
	detail: Optional[str] = None
	metric: Optional[str] = None
	state: StageState = StageState.RUNNING
	started_at: float = field(default_factory=time.monotonic)
	finished_at: Optional[float] = None

	@property
	def elapsed(self) -> float:
		return (self.finished_at or time.monotonic()) - self.started_at

	@property
	def fraction(self) -> Optional[float]:
		if not self.total:
			return None
		return min(1.0, self.completed / self.total)


class PipelineProgress:
	def __init__(self):
		self.stages: Dict[str, Stage] = {}
		self.live = Live(Table(show_header=False, box=None), console=console, refresh_per_second=4)
		self.started = False

	def start(self):
		if not self.started:
			self.stages.clear()
			self.live.start()
			self.started = True

	def stop(self):
		if self.started:
			self.live.stop()
			self.started = False

	def _stage(self, name: str) -> Stage:
		stage = self.stages.get(name)
		if stage is None or stage.state is not StageState.RUNNING:
			stage = self.stages[name] = Stage(name)
		return stage

	def advance(
		self,
		name: str,
		completed: int,
		total: Optional[int] = None,
		detail: Optional[str] = None,
		metric: Optional[str] = None,
	):
		"""Record that `completed` of `total` units of a stage are finished."""
		stage = self._stage(name)
		stage.completed = completed
		if total is not None:
			stage.total = total
		if detail is not None:
			stage.detail = detail
		if metric is not None:
			stage.metric = metric
		self._refresh()

	def finish(self, name: str, metric: Optional[str] = None):
		stage = self._stage(name)
		if stage.total is not None:
			stage.completed = stage.total
		if metric is not None:
			stage.metric = metric
		stage.state = StageState.DONE
		stage.finished_at = time.monotonic()
		self._refresh()

	def fail_running(self, message: str):
		"""Mark every unfinished stage as failed, e.g. when a command aborts."""
		for stage in self.stages.values():
			if stage.state is StageState.RUNNING:
				stage.state = StageState.FAILED
				stage.metric = message
				stage.finished_at = time.monotonic()
		self._refresh()

	def _row(self, stage: Stage) -> list:
		symbol, style = STATE_STYLES[stage.state]
		label = Text()
		label.append(f'{symbol} ', style=style)
		label.append(f'{stage.name.title():<10}', style=Style(bold=True))

		fraction = stage.fraction
		bar = Text('')
		if fraction is not None:
			bar = ProgressBar(total=1.0, completed=fraction, width=24)
		counter = f'{stage.completed}/{stage.total}' if stage.total else ''

		info = Text()
		if stage.detail:
			info.append(f'[{stage.detail}] ', style=Style(color='cyan'))
		if stage.metric:
			info.append(stage.metric, style=style)
		return [label, bar, Text(counter), info, Text(f'{stage.elapsed:6.1f}s', style='dim')]

	def _refresh(self):
		if not self.started:
			return
		table = Table(show_header=False, box=None, padding=(0, 1))
		for _ in range(5):
			table.add_column()

		def order(stage: Stage):
			if stage.name in STAGE_ORDER:
				return (STAGE_ORDER.index(stage.name), stage.name)
			return (len(STAGE_ORDER), stage.name)

		for stage in sorted(self.stages.values(), key=order):
			table.add_row(*self._row(stage))
		self.live.update(table)


progress = PipelineProgress()
