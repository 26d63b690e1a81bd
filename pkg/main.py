#!/usr/bin/env python3
"""
convergex

Multi-source summarization from the command line: keyframe extraction from
video frames, paper index build and search, metric reports over summary
files, and the full video + paper + web pipeline for one research query.

Exit codes: 0 success, 2 usage, config or input error, 3 success with an
empty result, 4 external service failure.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from config.config import load_config
from core.client_factory import ClientFactory
from scenarios.keyframe_extraction import cmd_keyframes
from scenarios.metric_report import FORMATS, cmd_metrics
from scenarios.multi_source_pipeline import cmd_pipeline
from scenarios.paper_search import cmd_index_build, cmd_index_search
from utils.errors import ConvergexError
from utils.logger import setup_logging

logger = logging.getLogger("convergex")


def build_parser() -> argparse.ArgumentParser:
    """Command line parser"""
    parser = argparse.ArgumentParser(prog="convergex", description="Multi-source summarization engine")
    parser.add_argument("--config", type=str, default=None, help="JSON or YAML config file")
    parser.add_argument("--fixtures", type=str, default=None, help="Fixture directory for offline service clients")
    parser.add_argument("--out", type=str, default=None, help="Output directory (stdout when absent)")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    keyframes = commands.add_parser("keyframes", help="Select keyframes from video frames")
    keyframes.add_argument("frames", help="Directory of frame_NNNNNN.png/.ppm images, or a raw stream with --raw")
    keyframes.add_argument("--fps", type=float, required=True, help="Frames per second")
    keyframes.add_argument("--raw", action="store_true", help="Read a raw rgb24 stream ('-' for stdin)")

    index = commands.add_parser("index", help="Build or search the paper index")
    index_commands = index.add_subparsers(dest="index_command", required=True)
    build = index_commands.add_parser("build", help="Embed a corpus and save its index")
    build.add_argument("corpus")
    build.add_argument("index_path")
    search = index_commands.add_parser("search", help="Search an index and re-rank the hits")
    search.add_argument("corpus")
    search.add_argument("index_path")
    search.add_argument("query")
    search.add_argument("-k", type=int, default=None, help="Number of hits (default retrieval.k)")

    metrics = commands.add_parser("metrics", help="Metric and ROUGE tables for summary files")
    metrics.add_argument("directories", nargs="+", help="Directories of <name>.txt summaries, one per topic")
    metrics.add_argument("--final", default="final", help="Name of the final summary file (without .txt)")
    metrics.add_argument("--format", default="markdown", choices=FORMATS)

    pipeline = commands.add_parser("pipeline", help="Run the multi-source pipeline for a query")
    pipeline.add_argument("query")
    pipeline.add_argument("--sources", default=None, help="Comma-separated subset of youtube,arxiv,web")
    pipeline.add_argument("--corpus", default=None, help="Paper corpus (JSON Lines)")
    pipeline.add_argument("--index", default=None, help="Prebuilt paper index")
    return parser


def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.fixtures:
        overrides["clients"] = {"fixture_dir": args.fixtures}
    if args.debug:
        overrides["logging"] = {"log_level": "DEBUG"}
    return overrides


def dispatch(args: argparse.Namespace, config: Dict[str, Any], clients: ClientFactory) -> int:
    if args.command == "keyframes":
        return cmd_keyframes(args.frames, args.fps, args.out, config, args.raw)
    if args.command == "index":
        if args.index_command == "build":
            return cmd_index_build(args.corpus, args.index_path, config, clients)
        return cmd_index_search(args.corpus, args.index_path, args.query, args.k, config, clients)
    if args.command == "metrics":
        return cmd_metrics(args.directories, args.final, args.format, args.out, config, clients)
    sources = args.sources.split(",") if args.sources is not None else config["convergence"]["sources"]
    return cmd_pipeline(args.query, sources, args.out, config, clients, args.corpus, args.index)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    load_dotenv()
    clients = None
    try:
        config = load_config(args.config, config_overrides(args))
        log_cfg = config["logging"]
        setup_logging(log_cfg["log_level"], log_cfg["log_to_file"], log_cfg["log_file"], args.debug)
        logger.debug(f"command={args.command} config={args.config}")
        clients = ClientFactory(config)
        return dispatch(args, config, clients)
    except ConvergexError as e:
        _report(e)
        return e.exit_code
    except (OSError, ValueError) as e:
        _report(e)
        return 2
    finally:
        if clients is not None:
            clients.close()


def _report(error: Exception) -> None:
    logger.debug("command failed", exc_info=error)
    detail = str(error).replace("\n", " ")
    sys.stderr.write(f"error={type(error).__name__} detail={detail}\n")


if __name__ == "__main__":
    sys.exit(main())
