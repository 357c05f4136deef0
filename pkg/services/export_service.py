import io
import logging
from typing import Iterable

import networkx as nx
import pandas as pd
import pydot

from .core import UsageError

logger = logging.getLogger(__name__)

GRAPH_FORMATS = ("dot", "graphml")
NODE_ATTRIBUTES = ("count", "start", "end", "pareto", "shared", "origins")
EDGE_ATTRIBUTES = ("count", "origins")
FLOAT_FORMAT = "%.10g"


def _origins_text(origins) -> str:
    return ",".join(sorted(origins))


def _origins_set(text: str) -> frozenset:
    return frozenset(o for o in str(text).split(",") if o)


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip('"').lower() == "true"


class ExportService:
    """Serialization of STNs and result tables"""

    @staticmethod
    def canonical_graph(g: nx.DiGraph) -> nx.DiGraph:
        """
        Copy of g with plain attribute values (origins as a comma-separated string,
        shared as a flag), nodes and edges sorted, attributes in schema order.
        """
        out = nx.DiGraph()
        out.graph["precision"] = int(g.graph.get("precision", 0))
        out.graph["problem"] = str(g.graph.get("problem", ""))
        for node in sorted(g.nodes):
            data = g.nodes[node]
            origins = data.get("origins", frozenset())
            out.add_node(
                str(node),
                count=int(data.get("count", 0)),
                start=bool(data.get("start", False)),
                end=bool(data.get("end", False)),
                pareto=bool(data.get("pareto", False)),
                shared=len(origins) >= 2,
                origins=_origins_text(origins),
            )
        for u, v in sorted(g.edges):
            data = g.edges[u, v]
            out.add_edge(
                str(u),
                str(v),
                count=int(data.get("count", 0)),
                origins=_origins_text(data.get("origins", frozenset())),
            )
        return out

    @staticmethod
    def generate_graphml(g: nx.DiGraph) -> str:
        canonical = ExportService.canonical_graph(g)
        return "\n".join(nx.generate_graphml(canonical)) + "\n"

    @staticmethod
    def generate_dot(g: nx.DiGraph) -> str:
        canonical = ExportService.canonical_graph(g)
        dot = pydot.Dot("stn", graph_type="digraph", strict=True)
        dot.set("precision", str(canonical.graph["precision"]))
        dot.set("problem", f'"{canonical.graph["problem"]}"')
        for node, data in canonical.nodes(data=True):
            attrs = {k: str(data[k]).lower() if isinstance(data[k], bool) else str(data[k]) for k in NODE_ATTRIBUTES}
            attrs["origins"] = f'"{attrs["origins"]}"'
            dot.add_node(pydot.Node(f'"{node}"', **attrs))
        for u, v, data in canonical.edges(data=True):
            dot.add_edge(pydot.Edge(f'"{u}"', f'"{v}"', count=str(data["count"]), origins=f'"{data["origins"]}"'))
        return dot.to_string()

    @staticmethod
    def export_graph(g: nx.DiGraph, fmt: str) -> str:
        """
        Render an STN as DOT or GraphML text.

        Raises:
            UsageError: unknown format
        """
        fmt = fmt.lower()
        if fmt == "graphml":
            text = ExportService.generate_graphml(g)
        elif fmt == "dot":
            text = ExportService.generate_dot(g)
        else:
            raise UsageError(f"Unknown graph format '{fmt}'. Available: {', '.join(GRAPH_FORMATS)}")
        logger.debug(f"Exported STN ({g.number_of_nodes()} nodes) as {fmt}")
        return text

    @staticmethod
    def _restore(parsed: nx.DiGraph, precision, problem) -> nx.DiGraph:
        g = nx.DiGraph(precision=int(precision), problem=str(problem).strip('"'))
        for node, data in parsed.nodes(data=True):
            g.add_node(
                str(node).strip('"'),
                count=int(str(data.get("count", 0)).strip('"')),
                start=_as_bool(data.get("start", False)),
                end=_as_bool(data.get("end", False)),
                pareto=_as_bool(data.get("pareto", False)),
                origins=_origins_set(str(data.get("origins", "")).strip('"')),
            )
        for u, v, data in parsed.edges(data=True):
            g.add_edge(
                str(u).strip('"'),
                str(v).strip('"'),
                count=int(str(data.get("count", 0)).strip('"')),
                origins=_origins_set(str(data.get("origins", "")).strip('"')),
            )
        return g

    @staticmethod
    def parse_graph(text: str, fmt: str) -> nx.DiGraph:
        """
        Parse DOT or GraphML text written by export_graph back into an STN.

        Raises:
            UsageError: unknown format or unreadable document
        """
        fmt = fmt.lower()
        try:
            if fmt == "graphml":
                parsed = nx.parse_graphml(text, force_multigraph=False)
                return ExportService._restore(
                    parsed, parsed.graph.get("precision", 0), parsed.graph.get("problem", "")
                )
            if fmt == "dot":
                documents = pydot.graph_from_dot_data(text)
                if not documents:
                    raise UsageError("Empty DOT document")
                dot = documents[0]
                parsed = nx.DiGraph(nx.nx_pydot.from_pydot(dot))
                attributes = dot.get_attributes()
                return ExportService._restore(
                    parsed,
                    str(attributes.get("precision", 0)).strip('"'),
                    attributes.get("problem", ""),
                )
        except UsageError:
            raise
        except Exception as e:
            raise UsageError(f"Cannot parse {fmt} document: {e}") from e
        raise UsageError(f"Unknown graph format '{fmt}'. Available: {', '.join(GRAPH_FORMATS)}")

    @staticmethod
    def generate_csv(table: pd.DataFrame, index: bool = False) -> str:
        """CSV text with floats at fixed significant digits"""
        output = io.StringIO()
        table.to_csv(output, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
        return output.getvalue()

    @staticmethod
    def generate_rows_csv(rows: Iterable[dict], columns: Iterable[str]) -> str:
        return ExportService.generate_csv(pd.DataFrame(list(rows), columns=list(columns)))


class ExportFormatter:
    """Helpers for human-readable summaries"""

    @staticmethod
    def format_table(table: pd.DataFrame) -> str:
        if table.empty:
            return "(no rows)"
        return table.to_string(index=False, float_format=lambda v: f"{v:.4g}")

    @staticmethod
    def format_stn_metrics(label: str, metrics: dict) -> str:
        return (
            f"{label}: nodes={metrics['nodes']} edges={metrics['edges']} "
            f"shared={metrics['shared']} pf_nodes={metrics['pf_nodes']}"
        )
