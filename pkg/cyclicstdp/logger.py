"""The ``cyclicstdp`` logger and its verbosity controls."""
import logging
import sys

#: Names accepted by ``--loglevel``, quietest first.
LEVEL_NAMES = ('error', 'warning', 'info', 'debug')

logger = logging.getLogger('cyclicstdp')
logger.setLevel(logging.INFO)


class StderrHandler(logging.Handler):
    """Write to whatever sys.stderr is at emit time (CliRunner swaps it)."""

    def emit(self, record):
        try:
            sys.stderr.write(self.format(record) + '\n')
            sys.stderr.flush()
        except Exception:
            self.handleError(record)

    def handleError(self, record):
        super(StderrHandler, self).handleError(record)
        raise Exception('Internal logging error')


def level_name():
    return logging.getLevelName(logger.level).lower()


def set_level(name=None, verbose=0, quiet=0):
    """Apply ``--loglevel`` if given, else step once per -v/-q.

    Stepping stops at DEBUG and ERROR.
    """
    if name:
        logger.setLevel(name.upper())
        return
    steps = verbose - quiet
    if steps:
        level = logger.level - steps * 10
        logger.setLevel(min(logging.ERROR, max(logging.DEBUG, level)))


logger.addHandler(StderrHandler())
