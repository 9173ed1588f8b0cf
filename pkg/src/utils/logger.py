import logging
import os
from datetime import datetime


def setup_logger(name: str) -> logging.Logger:
    """Set up logger with file and console handlers"""

    logger = logging.getLogger(name)
    level = getattr(logging, os.getenv('APPROX_NAS_LOG_LEVEL', 'INFO').upper(), logging.INFO)
    logger.setLevel(level)

    # Prevent duplicate handlers
    if logger.handlers:
        return logger

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    # File handler; workers and tests switch it off through the environment
    if os.getenv('APPROX_NAS_LOG_TO_FILE', '1') != '0':
        log_dir = os.getenv('APPROX_NAS_LOG_DIR', 'logs')
        os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(
            os.path.join(log_dir, f"{name.replace('.', '_')}_{datetime.now().strftime('%Y%m%d')}.log")
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # Keep records off the root logger
    logger.propagate = False

    return logger
