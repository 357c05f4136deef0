"""Search trajectory networks (STNs) for multiobjective runs.

A few decomposition vectors are tracked. At every logged generation the
population-front solution that best fits a vector is its representative,
and the representative's decision vector is quantized to a location. The
locations visited by consecutive representatives form a trajectory; the
trajectories of all runs of one algorithm are accumulated into a directed
graph (networkx.DiGraph) whose node ids are location labels.

Node attributes: count, start, end, pareto, origins (frozenset of algorithm ids).
Edge attributes: count, origins. Graph attributes: precision, problem.
"""

import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Iterable, Optional, Sequence

import networkx as nx
import numpy as np

from .core import UsageError
from .problems import scale_with
from .runlog import RunLog, RunLogRecord
from .scalarization import wt

logger = logging.getLogger(__name__)

DEFAULT_PRECISION = 2
LABEL_SEPARATOR = ";"

ParetoPredicate = Callable[[np.ndarray], bool]


@dataclass(frozen=True)
class Location:
    """Cell of the decision-space partition: bound-normalized coordinates at p decimals"""

    key: tuple[str, ...]

    @property
    def label(self) -> str:
        return LABEL_SEPARATOR.join(self.key)

    @property
    def coordinates(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.key)


def _round_half_up(value: float, p: int) -> str:
    quantum = Decimal(1).scaleb(-p)
    return str(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_UP))


def map_location(x, bounds, p: int = DEFAULT_PRECISION) -> Location:
    """Normalize x into [0, 1] per coordinate and round half-up to p decimals"""
    if p < 0:
        raise UsageError(f"Precision must be nonnegative, got {p}")
    lower, upper = (np.asarray(b, dtype=float) for b in bounds)
    normalized = np.clip((np.asarray(x, dtype=float) - lower) / (upper - lower), 0.0, 1.0)
    return Location(tuple(_round_half_up(c, p) for c in normalized))


def empty_stn(precision: int, problem: str) -> nx.DiGraph:
    return nx.DiGraph(precision=precision, problem=problem)


def add_trajectory(
    g: nx.DiGraph,
    locations: Sequence[Location],
    origin: str,
    pareto: Optional[Sequence[bool]] = None,
) -> nx.DiGraph:
    """Accumulate one trajectory into g (in place); consecutive repeats add no edge"""
    if not locations:
        return g
    pareto = pareto or [False] * len(locations)
    last = len(locations) - 1
    previous = None
    for step, (location, on_front) in enumerate(zip(locations, pareto)):
        node = location.label
        if node not in g:
            g.add_node(node, count=0, start=False, end=False, pareto=False, origins=frozenset())
        data = g.nodes[node]
        data["count"] += 1
        data["start"] = data["start"] or step == 0
        data["end"] = data["end"] or step == last
        data["pareto"] = data["pareto"] or bool(on_front)
        data["origins"] = data["origins"] | {origin}
        if previous is not None and previous != node:
            if g.has_edge(previous, node):
                edge = g.edges[previous, node]
                edge["count"] += 1
                edge["origins"] = edge["origins"] | {origin}
            else:
                g.add_edge(previous, node, count=1, origins=frozenset({origin}))
        previous = node
    return g


def _representative(records: list[RunLogRecord], vector: np.ndarray, scale) -> RunLogRecord:
    feasible = [r for r in records if r.feasible]
    candidates = feasible or records
    F = scale_with(np.array([r.f for r in candidates]), *scale)
    values = np.atleast_1d(wt(F, vector, np.zeros(F.shape[1])))
    return candidates[int(np.argmin(values))]


def trajectory(
    log: RunLog,
    vector: np.ndarray,
    decision_bounds,
    scale,
    p: int = DEFAULT_PRECISION,
    stride: int = 1,
) -> list[tuple[Location, RunLogRecord]]:
    """Representative location of every stride-th logged generation (the last one always kept)"""
    snapshots = list(log.generations().items())
    if not snapshots:
        return []
    chosen = snapshots[::stride]
    if chosen[-1][0] != snapshots[-1][0]:
        chosen.append(snapshots[-1])
    steps = []
    for _, records in chosen:
        rep = _representative(records, vector, scale)
        steps.append((map_location(rep.x, decision_bounds, p), rep))
    return steps


def build_vector_stn(
    logs: Sequence[RunLog],
    vector_id: int,
    weights: np.ndarray,
    p: int,
    decision_bounds,
    scale,
    problem: str = "",
    is_pareto: Optional[ParetoPredicate] = None,
    stride: int = 1,
    origin: str = "A",
) -> nx.DiGraph:
    """
    STN of one tracked vector accumulated over the runs of one algorithm.

    Args:
        weights: tracked vectors; vector_id indexes its rows
        scale: (lower, upper) objective bounds used to compare representatives
        is_pareto: flags locations whose representative lies on the Pareto front

    Raises:
        UsageError: no logs, or vector_id out of range
    """
    if not logs:
        raise UsageError("Cannot build an STN from an empty set of run logs")
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    if not 0 <= vector_id < len(weights):
        raise UsageError(f"Vector id {vector_id} out of range (0..{len(weights) - 1})")
    g = empty_stn(p, problem)
    for log in logs:
        steps = trajectory(log, weights[vector_id], decision_bounds, scale, p, stride)
        pareto = [bool(is_pareto(np.array(rep.f))) if is_pareto and rep.feasible else False for _, rep in steps]
        add_trajectory(g, [location for location, _ in steps], origin, pareto)
    logger.debug(
        f"STN {origin} vector {vector_id}: {g.number_of_nodes()} nodes, {g.number_of_edges()} edges"
    )
    return g


def merge_stns(graphs: Iterable[nx.DiGraph]) -> nx.DiGraph:
    """
    Graph union: counts summed, flags OR-ed, origins unioned.

    Raises:
        UsageError: graphs with different precision or problem
    """
    graphs = list(graphs)
    if not graphs:
        raise UsageError("Nothing to merge")
    precision = graphs[0].graph.get("precision")
    problem = graphs[0].graph.get("problem", "")
    merged = empty_stn(precision, problem)
    for g in graphs:
        if g.graph.get("precision") != precision:
            raise UsageError(
                f"Cannot merge STNs of precision {precision} and {g.graph.get('precision')}"
            )
        if g.graph.get("problem", "") != problem:
            raise UsageError(f"Cannot merge STNs of problems {problem} and {g.graph.get('problem')}")
        for node, data in g.nodes(data=True):
            if node in merged:
                into = merged.nodes[node]
                into["count"] += data["count"]
                for flag in ("start", "end", "pareto"):
                    into[flag] = into[flag] or data[flag]
                into["origins"] = into["origins"] | data["origins"]
            else:
                merged.add_node(node, **data)
        for u, v, data in g.edges(data=True):
            if merged.has_edge(u, v):
                into = merged.edges[u, v]
                into["count"] += data["count"]
                into["origins"] = into["origins"] | data["origins"]
            else:
                merged.add_edge(u, v, **data)
    return merged


def merge_algorithms(stn_a: nx.DiGraph, stn_b: nx.DiGraph) -> nx.DiGraph:
    """Merged STN of two algorithms; nodes visited by both are shared"""
    return merge_stns([stn_a, stn_b])


def is_shared(data: dict) -> bool:
    return len(data.get("origins", ())) >= 2


def stn_metrics(g: nx.DiGraph) -> dict[str, int]:
    return {
        "nodes": g.number_of_nodes(),
        "edges": g.number_of_edges(),
        "shared": sum(1 for _, data in g.nodes(data=True) if is_shared(data)),
        "pf_nodes": sum(1 for _, data in g.nodes(data=True) if data.get("pareto")),
    }
