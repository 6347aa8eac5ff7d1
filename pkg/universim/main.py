#!/usr/bin/env python3
"""
Main entry point for universim
Runs one experiment from a YAML configuration and writes its CSV
"""

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from loguru import logger

from . import __version__
from .config_loader import EXPERIMENTS, ConfigLoader
from .errors import ConfigError, UniversimError
from .experiments import ExperimentConfig, ExperimentEngine


def setup_logging(level: str = "INFO"):
    """Setup logging configuration"""
    load_dotenv()
    logger.remove()  # Remove default handler

    # Add console handler
    logger.add(
        sys.stderr,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>",
        level=level,
        colorize=True,
    )

    # Add file handler
    log_file = Path(os.getenv("UNIVERSIM_LOG_DIR", "logs")) / "universim.log"
    log_file.parent.mkdir(parents=True, exist_ok=True)

    logger.add(
        log_file,
        rotation="10 MB",
        retention="30 days",
        format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
        level="DEBUG",
        compression="zip",
    )


def parse_arguments(argv: Optional[List[str]] = None):
    """Parse command line arguments"""
    parser = argparse.ArgumentParser(
        prog="universim",
        description="universim: universal and non-universal random variable simulation experiments",
    )

    parser.add_argument(
        "experiment",
        choices=EXPERIMENTS,
        help="Experiment to run",
    )

    parser.add_argument(
        "--config",
        type=str,
        required=True,
        help="Path to the experiment's YAML configuration",
    )

    parser.add_argument(
        "--out",
        type=str,
        help="CSV output path (overrides output_path)",
    )

    parser.add_argument(
        "--samples",
        type=int,
        help="Draw N seeded samples and save a histogram next to the CSV",
    )

    parser.add_argument(
        "--rng-seed",
        type=int,
        help="Seed for the sampling generator (overrides rng_seed)",
    )

    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Enable verbose logging",
    )

    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )

    return parser.parse_args(argv)


def build_config(args) -> dict:
    """Experiment defaults, overlaid with the config file and then the command line"""
    file_config = ConfigLoader.load_config(args.config)
    declared = file_config.get("experiment", args.experiment)
    if declared != args.experiment:
        raise ConfigError(f"experiment: config declares '{declared}' but '{args.experiment}' was requested")

    config = ConfigLoader.merge_configs(ConfigLoader._create_default_config(args.experiment), file_config)
    if args.out:
        config["output_path"] = args.out
    if args.rng_seed is not None:
        config["rng_seed"] = args.rng_seed

    ConfigLoader.validate_config(config)
    return config


def run(args) -> Path:
    """Run the requested experiment and return the CSV path"""
    config = build_config(args)
    engine = ExperimentEngine(ExperimentConfig.from_dict(config))
    engine.run()
    output_path = engine.save_results()
    ConfigLoader.save_config(config, f"{output_path}.config.yaml")
    if args.samples is not None:
        engine.plot_histogram(args.samples)
    return output_path


def main(argv: Optional[List[str]] = None):
    """Main function"""
    args = parse_arguments(argv)

    # Setup logging
    log_level = "DEBUG" if args.verbose else "INFO"
    setup_logging(log_level)

    logger.info(f"Starting universim {__version__}: {args.experiment}")

    try:
        output_path = run(args)
    except UniversimError as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.exit(e.exit_code)

    logger.info(f"universim {args.experiment} completed: {output_path}")


if __name__ == "__main__":
    main()
