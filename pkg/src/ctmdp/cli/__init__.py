"""Command-line entry point and the bundled admission-control example."""

from ctmdp.cli.app import EXPERIMENTS, RunConfig, build_parser, main, run
from ctmdp.cli.demo import demo_model

__all__ = ["EXPERIMENTS", "RunConfig", "build_parser", "demo_model", "main", "run"]
