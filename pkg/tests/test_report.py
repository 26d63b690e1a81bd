import pytest

from evaluation.metrics import metric_table
from evaluation.report import (
    ABSENT, display_name, render_coherence_table, render_markdown, render_metrics_table,
    render_rouge_table, render_topics_markdown,
)
from tests.conftest import SAMPLES, TOPICS


def _read_topic(topic):
    return {kind: (SAMPLES / topic / f"{kind}.txt").read_text(encoding="utf-8")
            for kind in ("final", "arxiv", "web", "youtube")}


@pytest.fixture
def report():
    return metric_table(_read_topic("deeplearning"), "final")


def _rows(table):
    lines = table.splitlines()
    return [[cell.strip() for cell in line.strip("|").split("|")] for line in lines]


@pytest.mark.parametrize("source_id,expected", [
    ("final", "Final Summary"),
    ("arxiv", "arXiv"),
    ("web", "Web Search"),
    ("youtube", "YouTube"),
    ("blog", "blog"),
])
def test_display_name(source_id, expected):
    assert display_name(source_id) == expected


def test_display_name_for_custom_final_id():
    assert display_name("digest", final_id="digest") == "Final Summary"


def test_metrics_table_layout(report):
    rows = _rows(render_metrics_table(report))
    assert rows[0] == ["Metric", "Final Summary", "arXiv", "Web Search", "YouTube"]
    labels = [row[0] for row in rows[2:]]
    assert labels == [
        "KL Divergence (vs arXiv)", "KL Divergence (vs Web Search)", "KL Divergence (vs YouTube)",
        "Entropy", "TTR", "Redundancy Score",
    ]
    assert all(len(row) == 5 for row in rows)


def test_metrics_table_diagonal_and_values(report):
    rows = _rows(render_metrics_table(report))
    kl_vs_arxiv = rows[2]
    assert kl_vs_arxiv[2] == "-"
    assert float(kl_vs_arxiv[1]) == pytest.approx(report.kl[("final", "arxiv")], abs=1e-4)
    entropy_row = rows[5]
    assert float(entropy_row[1]) == pytest.approx(report.per_source["final"].entropy, abs=1e-4)


def test_rouge_table_has_one_row_per_pair(report):
    rows = _rows(render_rouge_table(report))
    assert len(rows[0]) == 10
    assert rows[0][1:4] == ["Rouge-1 Recall", "Rouge-1 Precision", "Rouge-1 F1"]
    body = rows[2:]
    assert len(body) == 6
    assert body[0][0] == "Final Summary vs arXiv"
    assert body[-1][0] == "Web Search vs YouTube"
    assert all(len(row) == 10 for row in body)


def test_absent_cells_render_as_marker():
    report = metric_table({"final": "Just one", "web": "Solo"}, "final")
    rows = _rows(render_rouge_table(report))
    assert rows[2][4:7] == [ABSENT, ABSENT, ABSENT]
    assert ABSENT in render_markdown(report)


def test_markdown_sections(report):
    text = render_markdown(report, title="deeplearning")
    assert text.startswith("# deeplearning")
    for heading in ("## Metrics Evaluation", "## ROUGE Scores", "## Coherence"):
        assert heading in text


def test_coherence_table_by_topic():
    reports = {topic: metric_table(_read_topic(topic), "final") for topic in TOPICS}
    rows = _rows(render_coherence_table(reports))
    assert rows[0] == ["Topic", "Final Summary", "arXiv", "Web Search", "YouTube"]
    assert [row[0] for row in rows[2:]] == sorted(TOPICS)
    combined = render_topics_markdown(reports)
    assert "# Coherence by Topic" in combined
    assert combined.count("## ROUGE Scores") == 3
