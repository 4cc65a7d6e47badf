import logging
import sys

__version__ = "0.1.0"


def run():
    """Run the command line."""
    from sketchridge import cli, settings

    ch = logging.StreamHandler(sys.stderr)

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    ch.setFormatter(formatter)

    logger = logging.getLogger(__name__)
    logger.addHandler(ch)
    logger.setLevel(settings.log_level)

    logger.info("Starting up sketchridge")

    code = cli.main()

    logger.info("sketchridge shutting down")

    sys.exit(code)
