import numpy as np
import pandas as pd
import pytest

from services.core import UsageError
from services.decomposition import tracked_vectors
from services.engine import run
from services.export_service import ExportFormatter, ExportService
from services.problems import get_problem
from services.stn_service import Location, add_trajectory, build_vector_stn, empty_stn, merge_algorithms, stn_metrics


def _path(origin="A", cells=(("0.1", "0.1"), ("0.5", "0.5"), ("0.9", "0.9"))):
    g = empty_stn(1, "zdt1")
    return add_trajectory(g, [Location(c) for c in cells], origin, pareto=[False, False, True])


@pytest.fixture
def merged():
    other = _path("B", (("0.1", "0.1"), ("0.3", "0.3")))
    return merge_algorithms(_path(), other)


@pytest.mark.parametrize("fmt", ["graphml", "dot"])
def test_export_parse_export_identical(merged, fmt):
    text = ExportService.export_graph(merged, fmt)
    assert ExportService.export_graph(ExportService.parse_graph(text, fmt), fmt) == text


@pytest.mark.parametrize("fmt", ["graphml", "dot"])
def test_parse_restores_attributes(merged, fmt):
    parsed = ExportService.parse_graph(ExportService.export_graph(merged, fmt), fmt)
    assert parsed.graph == {"precision": 1, "problem": "zdt1"}
    assert set(parsed.nodes) == set(merged.nodes)
    assert set(parsed.edges) == set(merged.edges)
    start = parsed.nodes["0.1;0.1"]
    assert start["origins"] == frozenset({"A", "B"})
    assert start["count"] == 2 and start["start"]
    assert parsed.nodes["0.9;0.9"]["pareto"]
    assert stn_metrics(parsed) == stn_metrics(merged)


def test_graphml_counts_entries():
    text = ExportService.export_graph(_path(), "graphml")
    assert text.count("<node ") == 3
    assert text.count("<edge ") == 2


def test_dot_counts_entries():
    text = ExportService.export_graph(_path(), "dot")
    assert text.count("->") == 2


@pytest.mark.parametrize("fmt", ["graphml", "dot"])
def test_empty_graph(fmt):
    text = ExportService.export_graph(empty_stn(2, "zdt1"), fmt)
    assert ExportService.parse_graph(text, fmt).number_of_nodes() == 0


def test_unknown_format():
    with pytest.raises(UsageError):
        ExportService.export_graph(_path(), "gexf")
    with pytest.raises(UsageError):
        ExportService.parse_graph("", "gexf")


def test_unreadable_document():
    with pytest.raises(UsageError):
        ExportService.parse_graph("<graphml", "graphml")


def test_rows_csv_keeps_column_order():
    text = ExportService.generate_rows_csv([{"b": 1, "a": 0.5}], ("a", "b"))
    assert text == "a,b\n0.5,1\n"


def test_format_stn_metrics():
    line = ExportFormatter.format_stn_metrics("base", {"nodes": 3, "edges": 2, "shared": 1, "pf_nodes": 0})
    assert line == "base: nodes=3 edges=2 shared=1 pf_nodes=0"


def test_format_empty_table():
    assert ExportFormatter.format_table(pd.DataFrame()) == "(no rows)"


@pytest.mark.slow
def test_restart_changes_merged_stn():
    from services.tuning_service import AUTO_MOEAD

    zdt1 = get_problem("zdt1")
    base = AUTO_MOEAD.replace(budget=20_000, restart_evals=5_000, seed=5)
    variant = base.replace(restart="off", restart_evals=None)
    scale = (np.zeros(2), np.ones(2))
    stns = [
        build_vector_stn([run(c, zdt1).log], 2, tracked_vectors(2), 2, zdt1.bounds, scale, problem="zdt1", origin=o)
        for c, o in ((base, "base"), (variant, "no-restart"))
    ]
    merged = merge_algorithms(*stns)
    text = ExportService.export_graph(merged, "graphml")
    assert stn_metrics(ExportService.parse_graph(text, "graphml")) == stn_metrics(merged)
    assert stn_metrics(merged)["nodes"] > 1
