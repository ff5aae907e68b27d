#!/usr/bin/env python3
"""
Configuration management for the ncc_minimax solvers and experiment harness
"""

import logging
import os
from typing import Optional

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)


class Config:
    """Environment-level configuration for experiments and diagnostics"""

    # Output and data locations
    OUTPUT_DIR = os.getenv('NCC_OUTPUT_DIR', 'runs')
    DATA_DIR = os.getenv('NCC_DATA_DIR', 'data')

    # Execution
    WORKERS = int(os.getenv('NCC_WORKERS', '1'))
    LOG_LEVEL = os.getenv('NCC_LOG_LEVEL', 'INFO')

    # Inner-oracle diagnostics are limited to dim_x * dim_y below this size
    DIAG_MAX_SIZE = int(os.getenv('NCC_DIAG_MAX_SIZE', '10000'))

    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    @classmethod
    def master_seed(cls, configured: int) -> int:
        """Master seed, overridden by NCC_SEED when it is set (read at call time)"""
        override: Optional[str] = os.getenv('NCC_SEED')
        if override is None or override.strip() == '':
            return configured
        try:
            seed = int(override)
        except ValueError:
            logger.warning(f"Ignoring non-integer NCC_SEED={override!r}")
            return configured
        if seed != configured:
            logger.info(f"NCC_SEED overrides configured master seed {configured} -> {seed}")
        return seed

    @classmethod
    def data_path(cls, path: str) -> str:
        """A path as given when it exists, otherwise relative to NCC_DATA_DIR when that exists"""
        if os.path.exists(path) or os.path.isabs(path):
            return path
        candidate = os.path.join(cls.DATA_DIR, path)
        if os.path.exists(candidate):
            logger.debug(f"Resolved data path {path} -> {candidate}")
            return candidate
        return path

    @classmethod
    def configure_logging(cls, level: Optional[str] = None) -> None:
        """Set up root logging the same way for every entry point"""
        logging.basicConfig(
            level=getattr(logging, (level or cls.LOG_LEVEL).upper(), logging.INFO),
            format=cls.LOG_FORMAT
        )

    @classmethod
    def validate(cls) -> bool:
        """Validate that configuration values are usable"""
        problems = []

        if cls.WORKERS < 1:
            problems.append(f"NCC_WORKERS={cls.WORKERS} (must be >= 1)")
        if cls.DIAG_MAX_SIZE < 1:
            problems.append(f"NCC_DIAG_MAX_SIZE={cls.DIAG_MAX_SIZE} (must be >= 1)")
        if cls.LOG_LEVEL.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            problems.append(f"NCC_LOG_LEVEL={cls.LOG_LEVEL}")

        if problems:
            logger.error(f"❌ Invalid environment configuration: {', '.join(problems)}")
            return False

        return True
