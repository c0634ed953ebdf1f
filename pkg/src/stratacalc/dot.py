"""Graphviz DOT export.

Vertices become nodes named by their sorted half-edge list; loops render
as a single self-edge.  Decorations show as ``g=..,w=..`` labels;
exceptional chain edges and vertices render dashed; level trees rank
their vertices by level.
"""

from __future__ import annotations

from typing import Optional, Union

from .decorations import DecoratedGraph
from .graphs import Graph, is_marker
from .serialize import vertex_key
from .treelike import DerivedGraph


def _node_id(v: frozenset) -> str:
    key = vertex_key(v) or "point"
    return '"' + key.replace('"', "'") + '"'


def _edge_label(e: frozenset) -> str:
    return ",".join(sorted(e))


def export_dot(obj: Union[Graph, DecoratedGraph, DerivedGraph],
               levels: Optional[dict] = None, name: str = "g") -> str:
    """Render a graph-like object as DOT text.

    ``levels`` (vertex -> int) adds same-rank rows per level.
    """
    dec = None
    exceptional_edges = set()
    exceptional_vertices = set()
    if isinstance(obj, DerivedGraph):
        exceptional_edges = {e for _, e in obj.exceptional_edges}
        exceptional_vertices = {v for _, v in obj.exceptional_vertices}
        dec = obj.decorated
        g = obj.graph
    elif isinstance(obj, DecoratedGraph):
        dec = obj
        g = obj.graph
    else:
        g = obj
    pg = dec.pg_map() if dec else {}
    w = dec.w_map() if dec else {}
    lines = [f"graph {name} {{"]
    for v in sorted(g.vertices, key=sorted):
        attrs = []
        if dec:
            attrs.append(f'label="g={pg[v]},w={w[v]}"')
        elif all(is_marker(h) for h in v):
            attrs.append('label="."')
        if v in exceptional_vertices:
            attrs.append("style=dashed")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_node_id(v)}{suffix};")
    for e in sorted(g.edges, key=sorted):
        ends = sorted(g.endpoints(e), key=sorted)
        a = ends[0]
        b = ends[-1]
        attrs = [f'label="{_edge_label(e)}"']
        if e in exceptional_edges:
            attrs.append("style=dashed")
        lines.append(f"  {_node_id(a)} -- {_node_id(b)} [{', '.join(attrs)}];")
    if levels:
        by_level = {}
        for v, l in levels.items():
            by_level.setdefault(l, []).append(v)
        for l in sorted(by_level, reverse=True):
            ids = "; ".join(_node_id(v) for v in sorted(by_level[l], key=sorted))
            lines.append(f"  {{ rank=same; {ids} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"
