"""
Beamcouple - beam-to-beam point coupling for geometrically exact beams

"""

import sys
import os
import logging

# Fix Windows console Unicode issue - MUST be first
if sys.platform == "win32":
    sys.stdout.reconfigure(encoding="utf-8")
    sys.stderr.reconfigure(encoding="utf-8")

from config.settings import LOG_FILE, LOG_LEVEL
from src.cli.commands import cli_main

os.makedirs(os.path.dirname(LOG_FILE) or ".", exist_ok=True)

logging.basicConfig(
    level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    handlers=[
        logging.FileHandler(LOG_FILE, encoding="utf-8"),
        logging.StreamHandler(sys.stdout)
    ]
)
logger = logging.getLogger("Beamcouple")


def main() -> int:
    logger.info("Beamcouple is starting...")
    code = cli_main(sys.argv[1:])
    logger.info(f"Beamcouple finished with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
