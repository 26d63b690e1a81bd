"""
Report Emitters

Renders a MetricReport as canonical JSON and as markdown tables: a metrics
table (KL against each source, entropy, TTR, redundancy), a ROUGE table (one
row per summary pair with recall, precision and F1 for ROUGE-1, ROUGE-2 and
ROUGE-L), and a coherence table comparing several topics.
"""

from typing import Dict, List, Mapping, Optional, Sequence

from evaluation.metrics import MetricReport

DISPLAY_NAMES = {
    "final": "Final Summary",
    "arxiv": "arXiv",
    "web": "Web Search",
    "youtube": "YouTube",
}

ROUGE_VARIANTS = (("rouge1", "Rouge-1"), ("rouge2", "Rouge-2"), ("rougeL", "Rouge-L"))
ROUGE_FIELDS = (("recall", "Recall"), ("precision", "Precision"), ("f1", "F1"))

ABSENT = "n/a"


def display_name(source_id: str, final_id: Optional[str] = None) -> str:
    if final_id is not None and source_id == final_id:
        return DISPLAY_NAMES["final"]
    return DISPLAY_NAMES.get(source_id, source_id)


def _fmt(value: Optional[float]) -> str:
    return ABSENT if value is None else f"{value:.4f}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines)


def render_metrics_table(report: MetricReport) -> str:
    """Metric rows by summary columns, final summary first"""
    columns = report.order
    header = ["Metric"] + [display_name(c, report.final_id) for c in columns]
    rows: List[List[str]] = []

    for ref in columns:
        if ref == report.final_id:
            continue
        row = [f"KL Divergence (vs {display_name(ref)})"]
        row.extend("-" if c == ref else _fmt(report.kl.get((c, ref))) for c in columns)
        rows.append(row)

    rows.append(["Entropy"] + [_fmt(report.per_source[c].entropy) for c in columns])
    rows.append(["TTR"] + [_fmt(report.per_source[c].ttr) for c in columns])
    rows.append(["Redundancy Score"] + [_fmt(report.per_source[c].redundancy) for c in columns])
    return _table(header, rows)


def render_rouge_table(report: MetricReport) -> str:
    """One row per summary pair; the first-named summary is the candidate"""
    header = ["Category"] + [f"{variant} {label}" for _, variant in ROUGE_VARIANTS for _, label in ROUGE_FIELDS]
    rows = []
    for a, b in report.pairs():
        row = [f"{display_name(a, report.final_id)} vs {display_name(b, report.final_id)}"]
        scores = report.rouge[(a, b)]
        for key, _ in ROUGE_VARIANTS:
            score = scores.get(key)
            row.extend(_fmt(None if score is None else getattr(score, name)) for name, _ in ROUGE_FIELDS)
        rows.append(row)
    return _table(header, rows)


def render_coherence_table(reports: Mapping[str, MetricReport]) -> str:
    """Per-topic coherence, one column per summary id seen in any report"""
    columns: List[str] = []
    final_ids = {r.final_id for r in reports.values()}
    for report in reports.values():
        for sid in report.order:
            if sid not in columns:
                columns.append(sid)
    finals = [c for c in columns if c in final_ids]
    columns = finals + [c for c in columns if c not in final_ids]

    header = ["Topic"] + [DISPLAY_NAMES["final"] if c in final_ids else display_name(c) for c in columns]
    rows = []
    for topic in sorted(reports):
        report = reports[topic]
        rows.append([topic] + [_fmt(report.coherence.get(c)) for c in columns])
    return _table(header, rows)


def render_markdown(report: MetricReport, title: Optional[str] = None) -> str:
    parts = []
    if title:
        parts.append(f"# {title}\n")
    parts.append("## Metrics Evaluation\n")
    parts.append(render_metrics_table(report) + "\n")
    parts.append("## ROUGE Scores\n")
    parts.append(render_rouge_table(report) + "\n")
    parts.append("## Coherence\n")
    coherence_rows = [[display_name(sid, report.final_id), _fmt(report.coherence.get(sid))] for sid in report.order]
    parts.append(_table(["Summary", "Coherence"], coherence_rows) + "\n")
    return "\n".join(parts)


def render_topics_markdown(reports: Dict[str, MetricReport]) -> str:
    """Markdown for several topics plus the cross-topic coherence table"""
    sections = [render_markdown(reports[topic], title=topic) for topic in sorted(reports)]
    if len(reports) > 1:
        sections.append("# Coherence by Topic\n\n" + render_coherence_table(reports) + "\n")
    return "\n".join(sections)
