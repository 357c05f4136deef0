import networkx as nx
import numpy as np
import pytest

from services.core import UsageError
from services.decomposition import tracked_vectors
from services.engine import run
from services.export_service import ExportService
from services.metrics_service import ParetoReference
from services.problems import get_problem
from services.runlog import RunLog, parse_runlog, render_runlog
from services.stn_service import (
    Location,
    add_trajectory,
    build_vector_stn,
    empty_stn,
    map_location,
    merge_algorithms,
    merge_stns,
    stn_metrics,
    trajectory,
)

UNIT = (np.zeros(2), np.ones(2))


def _stn(logs, vector_id=0, origin="A", p=2, **kwargs):
    return build_vector_stn(logs, vector_id, tracked_vectors(2), p, UNIT, UNIT, problem="toy", origin=origin, **kwargs)


def _random_stn(rng, origin, steps=12) -> nx.DiGraph:
    g = empty_stn(1, "toy")
    cells = [Location((f"0.{a}", f"0.{b}")) for a, b in rng.integers(0, 4, size=(steps, 2))]
    return add_trajectory(g, cells, origin)


def test_map_location_rounds():
    assert map_location((0.123, 0.987), UNIT, 2).label == "0.12;0.99"


def test_map_location_half_up():
    assert map_location((0.125, 0.005), UNIT, 2).key == ("0.13", "0.01")


def test_map_location_normalizes_by_bounds():
    bounds = (np.array([0.0, -1.0]), np.array([5.0, 1.0]))
    assert map_location((2.5, 0.0), bounds, 1).coordinates == (0.5, 0.5)


def test_map_location_quantizes_neighbors():
    assert map_location((0.4410, 0.2), UNIT, 2) == map_location((0.4449, 0.2), UNIT, 2)


def test_precision_zero_collapses_to_corners():
    rng = np.random.default_rng(0)
    keys = {map_location(x, (np.zeros(3), np.ones(3)), 0) for x in rng.random((200, 3))}
    assert len(keys) <= 8
    assert all(set(k.key) <= {"0", "1"} for k in keys)


def test_stationary_trajectory(path_log):
    g = _stn([path_log([(0.3, 0.3)] * 5)])
    assert stn_metrics(g) == {"nodes": 1, "edges": 0, "shared": 0, "pf_nodes": 0}
    data = g.nodes["0.30;0.30"]
    assert data["count"] == 5
    assert data["start"] and data["end"]


def test_path_trajectory(path_log):
    g = _stn([path_log([(0.1, 0.1), (0.5, 0.5), (0.9, 0.9)])])
    assert stn_metrics(g)["nodes"] == 3
    assert list(g.edges) == [("0.10;0.10", "0.50;0.50"), ("0.50;0.50", "0.90;0.90")]
    assert g.nodes["0.10;0.10"]["start"] and not g.nodes["0.10;0.10"]["end"]
    assert g.nodes["0.90;0.90"]["end"]


def test_identical_runs_double_counts(path_log):
    points = [(0.1, 0.1), (0.5, 0.5), (0.1, 0.1)]
    once = _stn([path_log(points)])
    twice = _stn([path_log(points), path_log(points, run_id=1)])
    assert set(once.nodes) == set(twice.nodes)
    assert set(once.edges) == set(twice.edges)
    assert all(twice.nodes[n]["count"] == 2 * once.nodes[n]["count"] for n in once)
    assert all(twice.edges[e]["count"] == 2 * once.edges[e]["count"] for e in once.edges)


def test_empty_logs_rejected():
    with pytest.raises(UsageError):
        _stn([])


def test_vector_id_out_of_range(path_log):
    with pytest.raises(UsageError):
        _stn([path_log([(0.1, 0.1)])], vector_id=3)


def test_stride_keeps_last_generation(path_log):
    log = path_log([(0.1 * k, 0.1) for k in range(5)])
    generations = [rep.generation for _, rep in trajectory(log, np.array([1.0, 0.0]), UNIT, UNIT, 2, stride=3)]
    assert generations == [0, 3, 4]


def test_representative_prefers_feasible(record):
    log = RunLog(
        (
            record(0, (0.2, 0.2), (0.0, 0.0), v=0.5),
            record(0, (0.8, 0.8), (1.0, 1.0), subproblem_id=1),
        )
    )
    (location, rep), = trajectory(log, np.array([0.5, 0.5]), UNIT, UNIT, 2)
    assert rep.feasible
    assert location.label == "0.80;0.80"


def test_representative_minimizes_aggregation(record):
    log = RunLog(
        (
            record(0, (0.1, 0.1), (0.0, 1.0)),
            record(0, (0.9, 0.9), (1.0, 0.0), subproblem_id=1),
        )
    )
    (_, rep), = trajectory(log, np.array([1.0, 0.0]), UNIT, (np.zeros(2), np.ones(2)), 2)
    assert rep.x == (0.1, 0.1)


def test_pareto_flags(path_log):
    g = _stn([path_log([(0.1, 0.1), (0.5, 0.5)])], is_pareto=lambda f: f[0] > 0.5)
    assert not g.nodes["0.10;0.10"]["pareto"]
    assert g.nodes["0.50;0.50"]["pareto"]
    assert stn_metrics(g)["pf_nodes"] == 1


def test_merge_same_algorithm(path_log):
    g = _stn([path_log([(0.1, 0.1), (0.5, 0.5)])])
    merged = merge_stns([g, g])
    assert set(merged.nodes) == set(g.nodes)
    assert stn_metrics(merged)["shared"] == 0
    assert merged.nodes["0.10;0.10"]["count"] == 2


def test_merge_disjoint_algorithms(path_log):
    a = _stn([path_log([(0.1, 0.1), (0.2, 0.2)])], origin="A")
    b = _stn([path_log([(0.7, 0.7), (0.8, 0.8)])], origin="B")
    merged = merge_algorithms(a, b)
    assert stn_metrics(merged)["nodes"] == 4
    assert stn_metrics(merged)["shared"] == 0


def test_merge_union_identity():
    rng = np.random.default_rng(7)
    for _ in range(50):
        a, b = _random_stn(rng, "A"), _random_stn(rng, "B")
        ab, ba = merge_algorithms(a, b), merge_algorithms(b, a)
        shared = stn_metrics(ab)["shared"]
        assert shared == len(set(a.nodes) & set(b.nodes))
        assert ab.number_of_nodes() == a.number_of_nodes() + b.number_of_nodes() - shared
        assert stn_metrics(ab) == stn_metrics(ba)
        assert all(ab.nodes[n]["count"] == ba.nodes[n]["count"] for n in ab)


def test_merge_is_associative():
    rng = np.random.default_rng(8)
    a, b, c = (_random_stn(rng, o) for o in "ABC")
    left = merge_stns([merge_stns([a, b]), c])
    right = merge_stns([a, merge_stns([b, c])])
    assert set(left.edges) == set(right.edges)
    assert all(left.nodes[n] == right.nodes[n] for n in left)


def test_merge_precision_mismatch():
    with pytest.raises(UsageError):
        merge_stns([empty_stn(2, "toy"), empty_stn(3, "toy")])


def test_empty_graph_metrics():
    assert stn_metrics(empty_stn(2, "toy")) == {"nodes": 0, "edges": 0, "shared": 0, "pf_nodes": 0}


def test_edges_bounded_by_generations(small_config):
    result = run(small_config, get_problem("zdt1"))
    generations = len(result.log.generations())
    assert generations == result.generations + 1
    g = build_vector_stn([result.log], 2, tracked_vectors(2), 2, get_problem("zdt1").bounds, UNIT)
    assert sum(d["count"] for *_, d in g.edges(data=True)) <= generations - 1


def test_stn_from_parsed_logs_matches_memory(small_config):
    zdt1 = get_problem("zdt1")
    logs = [run(small_config.replace(seed=s), zdt1, run_id=s).log for s in range(3)]
    reparsed = [RunLog(tuple(parse_runlog(render_runlog(log.records)))) for log in logs]
    for vid in range(3):
        a = build_vector_stn(logs, vid, tracked_vectors(2), 2, zdt1.bounds, UNIT)
        b = build_vector_stn(reparsed, vid, tracked_vectors(2), 2, zdt1.bounds, UNIT)
        assert stn_metrics(a) == stn_metrics(b)
        assert set(a.edges) == set(b.edges)


def _config_stn(config, origin, seeds, reference):
    zdt1 = get_problem("zdt1")
    logs = [run(config.replace(seed=s), zdt1, run_id=s).log for s in seeds]
    is_pareto = lambda f: bool(reference.contains(f)[0])
    return merge_stns(
        build_vector_stn(logs, vid, tracked_vectors(2), 2, zdt1.bounds, UNIT, problem="zdt1", is_pareto=is_pareto, origin=origin)
        for vid in range(3)
    )


@pytest.mark.parametrize("fmt", ["graphml", "dot"])
def test_exported_base_vs_no_restart_matches_memory(fmt):
    from services.tuning_service import AUTO_MOEAD, make_variants

    base = AUTO_MOEAD.replace(budget=3_000, restart_evals=1_000)
    no_restart = next(v.config for v in make_variants(base) if v.name == "no-restart")
    reference = ParetoReference(get_problem("zdt1"))
    merged = merge_algorithms(
        _config_stn(base, "auto-moead", (0, 1), reference),
        _config_stn(no_restart, "no-restart", (0, 1), reference),
    )
    rebuilt = ExportService.parse_graph(ExportService.export_graph(merged, fmt), fmt)
    assert stn_metrics(rebuilt) == stn_metrics(merged)
    assert set(rebuilt.nodes) == set(merged.nodes)
    assert set(rebuilt.edges) == set(merged.edges)
    assert stn_metrics(merged)["shared"] > 0
