import sys

from src.bench.cli import main
from src.utils.logger import setup_logger

# Setup logging
logger = setup_logger(__name__)

if __name__ == "__main__":
    sys.exit(main())
