import logging
import sys


def setup_logging(level: int = logging.WARNING, verbose: bool = False):
    if verbose:
        level = min(level, logging.INFO)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
