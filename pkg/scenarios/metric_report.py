# scenarios/metric_report.py

import logging
import sys
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence

from core.client_factory import ClientFactory
from evaluation.metrics import MetricReport, metric_table
from evaluation.report import render_markdown, render_topics_markdown
from utils.errors import ConfigError, TooFewSources
from utils.state_manager import StateManager, canonical_json

logger = logging.getLogger("convergex.commands")

FORMATS = ("markdown", "json")


def read_summaries(directory: str) -> Dict[str, str]:
    """Every *.txt file of a directory keyed by file stem"""
    path = Path(directory)
    if not path.is_dir():
        raise ConfigError(f"Summaries directory not found: {directory}")
    summaries = {f.stem: f.read_text(encoding="utf-8") for f in sorted(path.glob("*.txt"))}
    if len(summaries) < 2:
        raise TooFewSources(f"{directory} holds {len(summaries)} summary file(s), need at least 2")
    return summaries


class MetricReportScenario:
    """Evaluates one or more topic directories of summaries"""

    def __init__(self, config: Mapping[str, Any], clients: Optional[ClientFactory] = None):
        self.config = config
        self.clients = clients

    def evaluate(self, directory: str, final_name: str) -> MetricReport:
        summaries = read_summaries(directory)
        if final_name not in summaries:
            raise ConfigError(f"no {final_name}.txt in {directory}")
        metrics, tok = self.config["metrics"], self.config["tokenizer"]
        vectorizer = None
        if metrics["coherence_vectorizer"] == "embedding":
            if self.clients is None:
                raise ConfigError("embedding coherence needs the embedder client")
            vectorizer = self.clients.embedder.sentence_vectorizer()
        report = metric_table(summaries, final_name, tok["policy"], metrics["epsilon"],
                              vectorizer, tok["abbreviations"])
        logger.info(f"evaluated topic={Path(directory).name} summaries={len(summaries)}")
        return report

    def run(self, directories: Sequence[str], final_name: str) -> Dict[str, MetricReport]:
        reports = {}
        for directory in directories:
            topic = Path(directory).resolve().name
            if topic in reports:
                raise ConfigError(f"two summary directories share the topic name {topic!r}")
            reports[topic] = self.evaluate(directory, final_name)
        return reports


def render(reports: Dict[str, MetricReport], fmt: str) -> str:
    if fmt == "json":
        if len(reports) == 1:
            return canonical_json(next(iter(reports.values())).to_dict())
        return canonical_json({topic: report.to_dict() for topic, report in reports.items()})
    if len(reports) == 1:
        topic, report = next(iter(reports.items()))
        return render_markdown(report, title=topic)
    return render_topics_markdown(reports)


def cmd_metrics(directories: Sequence[str], final_name: str, fmt: str, out_dir: Optional[str],
                config: Mapping[str, Any], clients: Optional[ClientFactory] = None) -> int:
    """
    Emit the metric and ROUGE tables for summary directories.

    With an output directory both report.json and report.md are written;
    otherwise the chosen format goes to stdout.
    """
    if fmt not in FORMATS:
        raise ConfigError(f"--format must be one of {FORMATS}, got {fmt!r}")
    reports = MetricReportScenario(config, clients).run(directories, final_name)

    if out_dir is None:
        sys.stdout.write(render(reports, fmt))
        return 0
    with StateManager(out_dir) as state:
        state.save_text("report.json", render(reports, "json"))
        state.save_text("report.md", render(reports, "markdown"))
    return 0
