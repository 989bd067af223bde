import logging

from rich.logging import RichHandler

from figlink.utils.progress import console

_configured = False


def setup_logging(level: str = 'INFO') -> None:
	"""Route all figlink logging through one rich handler on stderr."""
	global _configured
	root = logging.getLogger()
	root.setLevel(level.upper())
	if _configured:
		return
	handler = RichHandler(console=console, show_path=False, rich_tracebacks=False)
	handler.setFormatter(logging.Formatter('%(name)s: %(message)s'))
	root.addHandler(handler)
	_configured = True
