"""
Command-line entry point.

Every command writes its outputs plus a ``run_manifest.json`` into ``--out``.
Settings come from defaults, then ``FIGLINK_*`` environment variables (a
``.env`` file is loaded first), then ``--config``, then ``--seed`` and ``--set``.
"""

import argparse
import json
import logging
import subprocess
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from dotenv import load_dotenv

from figlink import __version__
from figlink.config import ConfigManager, SectionStrategy
from figlink.corpus.ingest import ingest
from figlink.corpus.io import file_hash, iter_payload_files, read_corpus, write_corpus
from figlink.corpus.split import split_corpus
from figlink.corpus.stats import compare_to_reference, compute_stats
from figlink.data.models import RunManifest
from figlink.encoders.adapters import build_adapter
from figlink.encoders.cache import EmbeddingCache
from figlink.encoders.features import FeatureStore
from figlink.errors import FigLinkError, UsageError
from figlink.evaluation.annotation import (
	export_annotation,
	import_responses,
	read_package,
	write_package,
)
from figlink.evaluation.baselines import BASELINE_STRATEGIES, BASELINES, ZeroShotRanker
from figlink.evaluation.report import evaluate, predict_figure, read_report, write_report
from figlink.training.checkpoint import load_checkpoint
from figlink.training.synthetic import write_synthetic_corpus
from figlink.training.trainer import CHECKPOINT_NAME, HISTORY_NAME, load_linker, train
from figlink.utils.display import print_eval_report, print_human_eval, print_ranking, print_stats
from figlink.utils.logging import setup_logging
from figlink.utils.progress import progress

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'run_manifest.json'

# (effective config, hashed inputs, written outputs)
CommandResult = tuple[ConfigManager, list[Path], list[Path]]


def _write_json(path: Path, payload: Any) -> Path:
	path.parent.mkdir(parents=True, exist_ok=True)
	path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + '\n', encoding='utf-8')
	return path


def _parse_assignments(values: Sequence[str], flag: str) -> dict[str, str]:
	pairs = {}
	for value in values or ():
		key, sep, rest = value.partition('=')
		if not sep or not key:
			raise UsageError(f'{flag} expects KEY=VALUE, got {value!r}')
		pairs[key.strip()] = rest.strip()
	return pairs


def _revision() -> str:
	try:
		result = subprocess.run(
			['git', 'describe', '--always', '--dirty'],
			capture_output=True,
			text=True,
			check=True,
			timeout=5,
		)
		return result.stdout.strip()
	except (OSError, subprocess.SubprocessError):
		return f'figlink-{__version__}'


def _overrides(args: argparse.Namespace) -> dict[str, str]:
	overrides = _parse_assignments(args.set, '--set')
	if args.seed is not None:
		overrides['train.seed'] = str(args.seed)
	return overrides


def _config(args: argparse.Namespace) -> ConfigManager:
	config = ConfigManager(args.config, _overrides(args))
	config.validate_config()
	return config


def _open_cache(config: ConfigManager, dimension: int) -> Optional[EmbeddingCache]:
	if config.encoder.cache_path:
		return EmbeddingCache(dimension, config.encoder.cache_path)
	return None


def _ranker(args: argparse.Namespace) -> tuple[Any, ConfigManager, str]:
	"""Trained linker from --checkpoint, or a zero-shot baseline."""
	if bool(args.checkpoint) == bool(args.baseline):
		raise UsageError('Pass exactly one of --checkpoint or --baseline')
	if args.baseline:
		config = _config(args)
		strategy = SectionStrategy(args.baseline_strategy)
		ranker = ZeroShotRanker(args.baseline, strategy, config.train.K)
		return ranker, config, ranker.name
	model, config = load_linker(load_checkpoint(args.checkpoint), _overrides(args))
	return model, config, 'figlink'


def cmd_ingest(args: argparse.Namespace, out: Path) -> CommandResult:
	documents, report = ingest(args.sources)
	corpus = write_corpus(documents, out / 'corpus.jsonl')
	report_path = _write_json(out / 'filter_report.json', report.model_dump(mode='json'))
	logger.info(
		f'Ingested {len(report.accepted)} documents, rejected {len(report.rejected)}, '
		f'{len(report.parse_errors)} parse failures'
	)
	inputs = [path for source in args.sources for path in iter_payload_files(source)]
	return _config(args), inputs, [corpus, report_path]


def cmd_stats(args: argparse.Namespace, out: Path) -> CommandResult:
	stats = compute_stats(read_corpus(args.corpus))
	payload = stats.model_dump(mode='json')
	reference = compare_to_reference(stats) if args.reference else None
	if reference is not None:
		payload['reference'] = reference
	print_stats(stats, reference)
	return _config(args), [Path(args.corpus)], [_write_json(out / 'stats.json', payload)]


def cmd_split(args: argparse.Namespace, out: Path) -> CommandResult:
	config = _config(args)
	parts = split_corpus(read_corpus(args.corpus), config.train.seed)
	outputs = [
		write_corpus(documents, out / f'{name}.jsonl')
		for name, documents in zip(('train', 'val', 'test'), parts)
	]
	return config, [Path(args.corpus)], outputs


def cmd_train(args: argparse.Namespace, out: Path) -> CommandResult:
	config = _config(args)
	adapter = build_adapter(config)
	cache = _open_cache(config, adapter.dimension)
	try:
		checkpoint = train(
			(read_corpus(args.train), read_corpus(args.val)), config, adapter, cache, out
		)
	finally:
		if cache is not None:
			cache.close()
	best = max(checkpoint.metric_history, key=lambda entry: entry['val_r_at_1'])
	logger.info(f'Best validation R@1 {best["val_r_at_1"]:.3f} at epoch {best["epoch"]}')
	return config, [Path(args.train), Path(args.val)], [out / CHECKPOINT_NAME, out / HISTORY_NAME]


def cmd_eval(args: argparse.Namespace, out: Path) -> CommandResult:
	ranker, config, name = _ranker(args)
	adapter = build_adapter(config)
	cache = _open_cache(config, adapter.dimension)
	try:
		store = FeatureStore(adapter, cache, config.train.workers)
		report = evaluate(
			ranker, read_corpus(args.corpus), store, config.inference_mask, config.to_dict(), name
		)
	finally:
		if cache is not None:
			cache.close()
	print_eval_report(report)
	return config, [Path(args.corpus)], [write_report(report, out / 'eval_report.json')]


def cmd_predict(args: argparse.Namespace, out: Path) -> CommandResult:
	ranker, config, _ = _ranker(args)
	documents = {doc.id: doc for doc in read_corpus(args.corpus)}
	if args.doc_id not in documents:
		raise UsageError(f'No document {args.doc_id!r} in {args.corpus}')
	document = documents[args.doc_id]
	store = FeatureStore(build_adapter(config), workers=1)
	prediction, ranked = predict_figure(
		ranker, store.get(document, config.inference_mask), args.figure
	)
	texts = {
		(section.index, sentence.index): sentence.text
		for section in document.sections
		for sentence in section.sentences
	}
	print_ranking(ranked, texts, args.top)
	path = _write_json(
		out / 'prediction.json',
		{
			'prediction': prediction.model_dump(mode='json'),
			'ranking': [entry.model_dump(mode='json') for entry in ranked],
		},
	)
	return config, [Path(args.corpus)], [path]


def cmd_export_human_eval(args: argparse.Namespace, out: Path) -> CommandResult:
	paths = _parse_assignments(args.predictions, '--predictions')
	if not paths:
		raise UsageError('export-human-eval needs at least one --predictions NAME=PATH')
	config = _config(args)
	package = export_annotation(
		{name: read_report(path) for name, path in paths.items()},
		n_items=args.items,
		n_articles=args.articles,
		attention_checks=args.checks,
		seed=config.train.seed,
		workers=args.workers,
	)
	outputs = write_package(package, out / 'annotation.csv', out / 'annotation.json')
	return config, [Path(path) for path in paths.values()], list(outputs)


def cmd_import_human_eval(args: argparse.Namespace, out: Path) -> CommandResult:
	summary = import_responses(read_package(args.package), args.responses)
	print_human_eval(summary)
	path = _write_json(out / 'human_eval.json', summary.model_dump(mode='json'))
	return _config(args), [Path(args.package), Path(args.responses)], [path]


def cmd_synth(args: argparse.Namespace, out: Path) -> CommandResult:
	config = _config(args)
	corpus = write_synthetic_corpus(
		out,
		seed=config.train.seed,
		n_docs=args.docs,
		max_sections=args.max_sections,
		max_figures=args.max_figures,
		decoy_rate=args.decoy_rate,
	)
	return config, [], [corpus]


COMMANDS: dict[str, Callable[[argparse.Namespace, Path], CommandResult]] = {
	'ingest': cmd_ingest,
	'stats': cmd_stats,
	'split': cmd_split,
	'train': cmd_train,
	'eval': cmd_eval,
	'predict': cmd_predict,
	'export-human-eval': cmd_export_human_eval,
	'import-human-eval': cmd_import_human_eval,
	'synth': cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
	common = argparse.ArgumentParser(add_help=False)
	common.add_argument('--config', help='JSON or TOML config file')
	common.add_argument('--seed', type=int, help='Overrides train.seed')
	common.add_argument('--out', required=True, help='Output directory')
	common.add_argument(
		'--set',
		action='append',
		default=[],
		metavar='KEY=VALUE',
		help='Dotted config override, e.g. train.fusion=late (repeatable)',
	)
	common.add_argument('--log-level', default='INFO', help='Logging level (default INFO)')

	parser = argparse.ArgumentParser(
		prog='figlink',
		description='Link figures to the sections and sentences that discuss them.',
	)
	parser.add_argument('--version', action='version', version=f'figlink {__version__}')
	sub = parser.add_subparsers(dest='command', required=True)

	p = sub.add_parser('ingest', parents=[common], help='Raw JSON/HTML payloads to a filtered JSONL corpus')
	p.add_argument('sources', nargs='+', help='Payload files or directories')

	p = sub.add_parser('stats', parents=[common], help='Corpus statistics')
	p.add_argument('corpus', help='JSONL corpus')
	p.add_argument('--reference', action='store_true', help='Compare with the reference Wikipedia corpus averages')

	p = sub.add_parser('split', parents=[common], help='Deterministic 80/10/10 split')
	p.add_argument('corpus', help='JSONL corpus')

	p = sub.add_parser('train', parents=[common], help='Train the linker')
	p.add_argument('--train', required=True, help='Training split (JSONL)')
	p.add_argument('--val', required=True, help='Validation split (JSONL)')

	for name, help_text in (
		('eval', 'Evaluate a checkpoint or baseline on a corpus'),
		('predict', 'Rank sentences for one figure'),
	):
		p = sub.add_parser(name, parents=[common], help=help_text)
		p.add_argument('corpus', help='JSONL corpus')
		p.add_argument('--checkpoint', help='Checkpoint written by `train`')
		p.add_argument('--baseline', choices=BASELINES, help='Zero-shot baseline instead of a checkpoint')
		p.add_argument(
			'--baseline-strategy',
			choices=[strategy.value for strategy in BASELINE_STRATEGIES],
			default=SectionStrategy.FIRST.value,
			help='Section representation for the dual baseline (default first)',
		)
		if name == 'predict':
			p.add_argument('--doc-id', required=True, help='Document id')
			p.add_argument('--figure', type=int, required=True, help='Figure index')
			p.add_argument('--top', type=int, default=10, help='Rows to print (default 10)')

	p = sub.add_parser('export-human-eval', parents=[common], help='Annotation package from evaluation reports')
	p.add_argument(
		'--predictions',
		action='append',
		default=[],
		metavar='NAME=PATH',
		help='Evaluation report of one model (repeatable)',
	)
	p.add_argument('--items', type=int, default=40, help='Image/caption pairs (default 40)')
	p.add_argument('--articles', type=int, default=10, help='Articles sampled (default 10)')
	p.add_argument('--checks', type=int, default=3, help='Attention checks (default 3)')
	p.add_argument('--workers', type=int, default=0, help='Per-worker question orders to record')

	p = sub.add_parser('import-human-eval', parents=[common], help='Summarise annotation responses')
	p.add_argument('--package', required=True, help='annotation.json sidecar')
	p.add_argument('--responses', required=True, help='CSV with worker_id, question_id, ranking')

	p = sub.add_parser('synth', parents=[common], help='Write the synthetic planted-alignment corpus')
	p.add_argument('--docs', type=int, default=200, help='Documents (default 200)')
	p.add_argument('--max-sections', type=int, default=8, help='Sections per document upper bound')
	p.add_argument('--max-figures', type=int, default=4, help='Figures per document upper bound')
	p.add_argument('--decoy-rate', type=float, default=0.15, help='Share of figures with a lexical decoy')
	return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
	load_dotenv()
	parser = build_parser()
	try:
		args = parser.parse_args(argv)
	except SystemExit as e:
		return int(e.code or 0)

	setup_logging(args.log_level)
	out = Path(args.out)
	out.mkdir(parents=True, exist_ok=True)
	started_at = datetime.now(timezone.utc).isoformat()

	progress.start()
	try:
		config, inputs, outputs = COMMANDS[args.command](args, out)
		manifest = RunManifest(
			command=args.command,
			argv=list(sys.argv[1:] if argv is None else argv),
			config_hash=config.config_hash(),
			corpus_hash=file_hash(*inputs) if inputs else None,
			seed=config.train.seed,
			revision=_revision(),
			started_at=started_at,
			finished_at=datetime.now(timezone.utc).isoformat(),
			outputs=[str(path) for path in outputs],
		)
		_write_json(out / MANIFEST_NAME, manifest.model_dump(mode='json'))
	except UsageError as e:
		progress.stop()
		print(f'figlink {args.command}: {e.message}', file=sys.stderr)
		return 2
	except FigLinkError as e:
		progress.fail_running(e.code)
		progress.stop()
		logger.error(f'{args.command} failed [{e.code}]: {e.message}')
		print(f'figlink {args.command}: [{e.code}] {e.message}', file=sys.stderr)
		return 1
	finally:
		progress.stop()
	return 0


if __name__ == '__main__':
	sys.exit(main())
