"""Decorated graphs: per-vertex geometric genus and weight.

A decorated graph models the dual graph of a nodal curve with a line
bundle: vertices carry the component genus ``pg`` and the bundle degree
``w``.  The arithmetic genus is the first Betti number plus the total
genus; the core is the smallest connected subgraph carrying all of it.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .graphs import (
    Graph,
    GraphError,
    b1,
    canonical_form,
    contract_edges_with_map,
    enumerate_connected_graphs,
    is_connected,
    is_marker,
)


class DecorationError(ValueError):
    pass


def _freeze_vmap(m: Mapping):
    return tuple(sorted(((v, x) for v, x in m.items()), key=lambda p: sorted(p[0])))


@dataclass(frozen=True)
class DecoratedGraph:
    graph: Graph
    pg: tuple  # frozen (vertex, int) pairs
    w: tuple

    def __post_init__(self):
        pg = dict(self.pg) if not isinstance(self.pg, dict) else self.pg
        w = dict(self.w) if not isinstance(self.w, dict) else self.w
        if set(pg) != set(self.graph.vertices) or set(w) != set(self.graph.vertices):
            raise DecorationError("decorations must be total on the vertex set")
        if any(x < 0 for x in pg.values()) or any(x < 0 for x in w.values()):
            raise DecorationError("decorations must be non-negative")
        if not is_connected(self.graph):
            raise DecorationError("decorated graphs are connected")
        object.__setattr__(self, "pg", _freeze_vmap(pg))
        object.__setattr__(self, "w", _freeze_vmap(w))

    def pg_map(self) -> dict:
        return dict(self.pg)

    def w_map(self) -> dict:
        return dict(self.w)

    def total_weight(self) -> int:
        return sum(dict(self.w).values())


def decorated(graph: Graph, pg: Mapping, w: Mapping) -> DecoratedGraph:
    return DecoratedGraph(graph, pg, w)


def arithmetic_genus(dg: DecoratedGraph) -> int:
    return b1(dg.graph) + sum(dg.pg_map().values())


@dataclass(frozen=True)
class Subgraph:
    """A subgraph given by a vertex subset and an edge subset of the
    ambient graph; edges must run between chosen vertices."""

    vertices: frozenset
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        object.__setattr__(self, "edges", frozenset(frozenset(e) for e in self.edges))


def _subgraph_ok(dg: DecoratedGraph, sub: Subgraph) -> None:
    if not sub.vertices <= dg.graph.vertices:
        raise DecorationError("subgraph vertices must be vertices of the ambient graph")
    if not sub.edges <= dg.graph.edges:
        raise DecorationError("subgraph edges must be edges of the ambient graph")
    for e in sub.edges:
        if not dg.graph.endpoints(e) <= sub.vertices:
            raise DecorationError("subgraph edge with an endpoint outside the subgraph")


def _sub_connected(dg: DecoratedGraph, sub: Subgraph) -> bool:
    if not sub.vertices:
        return False
    verts = sorted(sub.vertices, key=sorted)
    adj = {v: set() for v in verts}
    for e in sub.edges:
        ends = sorted(dg.graph.endpoints(e), key=sorted)
        if len(ends) == 2:
            adj[ends[0]].add(ends[1])
            adj[ends[1]].add(ends[0])
    seen = {verts[0]}
    frontier = [verts[0]]
    while frontier:
        v = frontier.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                frontier.append(u)
    return len(seen) == len(verts)


def arithmetic_data(dg: DecoratedGraph, sub: Subgraph):
    """(arithmetic genus, total weight) of a connected subgraph."""
    _subgraph_ok(dg, sub)
    if not _sub_connected(dg, sub):
        raise DecorationError("arithmetic data requires a connected subgraph")
    pg = dg.pg_map()
    w = dg.w_map()
    bb = len(sub.edges) - len(sub.vertices) + 1
    return bb + sum(pg[v] for v in sub.vertices), sum(w[v] for v in sub.vertices)


def contract_decorated_with_map(dg: DecoratedGraph, contract: Iterable):
    """Contract edges and push the decoration forward: a collapsed
    component contributes its Betti number to the genus of its image.
    Returns the new decorated graph and the vertex map."""
    cset = {frozenset(e) for e in contract}
    new_graph, vmap = contract_edges_with_map(dg.graph, cset)
    pg, w = dg.pg_map(), dg.w_map()
    new_pg = {v: 0 for v in new_graph.vertices}
    new_w = {v: 0 for v in new_graph.vertices}
    cluster_sizes = {}
    for old, new in vmap.items():
        new_pg[new] += pg[old]
        new_w[new] += w[old]
        cluster_sizes.setdefault(new, []).append(old)
    for new, olds in cluster_sizes.items():
        if len(olds) > 1 or olds[0] != new:
            members = set(olds)
            inner = sum(1 for e in cset
                        if dg.graph.endpoints(e) <= members)
            new_pg[new] += inner - len(olds) + 1
    return DecoratedGraph(new_graph, new_pg, new_w), vmap


def contract_decorated(dg: DecoratedGraph, contract: Iterable) -> DecoratedGraph:
    return contract_decorated_with_map(dg, contract)[0]


def identify_decorated(dg: DecoratedGraph, identify: Iterable):
    """Glue vertices together, adding their decorations.  Returns the new
    decorated graph and the merged vertex."""
    from .graphs import identify_vertices

    iset = {frozenset(v) for v in identify}
    merged_graph = identify_vertices(dg.graph, iset)
    members = {h for v in iset for h in v if not is_marker(h)}
    if members:
        target = frozenset(members)
    else:
        target = next(v for v in merged_graph.vertices
                      if all(is_marker(h) for h in v))
    pg, w = dg.pg_map(), dg.w_map()
    new_pg = {v: pg[v] for v in dg.graph.vertices if v not in iset}
    new_w = {v: w[v] for v in dg.graph.vertices if v not in iset}
    new_pg[target] = sum(pg[v] for v in iset)
    new_w[target] = sum(w[v] for v in iset)
    return DecoratedGraph(merged_graph, new_pg, new_w), target


@functools.lru_cache(maxsize=200_000)
def core(dg: DecoratedGraph) -> Subgraph:
    """The smallest connected subgraph carrying the full arithmetic genus.

    It must contain every positive-genus vertex and a full cycle basis;
    the search scans edge subsets by size and fails loudly if minimality
    does not pin the subgraph down uniquely.
    """
    pg = dg.pg_map()
    target = arithmetic_genus(dg)
    genus_vertices = frozenset(v for v in dg.graph.vertices if pg[v] > 0)
    edge_list = sorted(dg.graph.edges, key=sorted)
    for k in range(0, len(edge_list) + 1):
        found = []
        for choice in itertools.combinations(edge_list, k):
            verts = set(genus_vertices)
            for e in choice:
                verts |= dg.graph.endpoints(e)
            if not verts:
                continue
            sub = Subgraph(frozenset(verts), frozenset(choice))
            if not _sub_connected(dg, sub):
                continue
            if arithmetic_data(dg, sub)[0] == target:
                found.append(sub)
        if found:
            if len(found) > 1:
                raise DecorationError("core is not unique; malformed decoration")
            return found[0]
    # a graph with no vertices cannot occur; the full graph always qualifies
    raise DecorationError("no core found")


def core_decorated(dg: DecoratedGraph) -> DecoratedGraph:
    """The core as a standalone decorated graph (restricted decorations)."""
    sub = core(dg)
    hes = frozenset(h for e in sub.edges for h in e)
    # vertices keep only the half-edges of core edges; empty ones become markers
    new_vs = []
    key = {}
    for v in sorted(sub.vertices, key=sorted):
        kept = frozenset(h for h in v if h in hes)
        if not kept:
            kept = frozenset({x for x in v if is_marker(x)}) or frozenset({"*c%d" % len(new_vs)})
        new_vs.append(kept)
        key[v] = kept
    g = Graph(hes, frozenset(new_vs), sub.edges)
    pg, w = dg.pg_map(), dg.w_map()
    return DecoratedGraph(g, {key[v]: pg[v] for v in sub.vertices},
                          {key[v]: w[v] for v in sub.vertices})


def core_weight(dg: DecoratedGraph) -> int:
    sub = core(dg)
    w = dg.w_map()
    return sum(w[v] for v in sub.vertices)


def is_stable(dg: DecoratedGraph) -> bool:
    """Every genus-0 weight-0 vertex needs valence at least 3."""
    pg, w = dg.pg_map(), dg.w_map()
    for v in dg.graph.vertices:
        if pg[v] == 0 and w[v] == 0 and dg.graph.valence(v) < 3:
            return False
    return True


def decorated_canonicalize(dg: DecoratedGraph):
    """Canonical form refined by the decoration values."""
    colors = {}
    pg, w = dg.pg_map(), dg.w_map()
    for v in dg.graph.vertices:
        colors[v] = (pg[v], w[v])
    return canonical_form(dg.graph, vertex_color=colors)


def decorated_isomorphic(d1: DecoratedGraph, d2: DecoratedGraph) -> bool:
    return decorated_canonicalize(d1) == decorated_canonicalize(d2)


def _weight_assignments(vertices, budget):
    """All weight maps with total at most the budget."""
    vs = list(vertices)
    if not vs:
        yield {}
        return
    for total in range(budget + 1):
        for cuts in itertools.combinations(range(total + len(vs) - 1), len(vs) - 1):
            parts = []
            prev = -1
            for c in list(cuts) + [total + len(vs) - 1]:
                parts.append(c - prev - 1)
                prev = c
            yield dict(zip(vs, parts))


def _genus_assignments(vertices, total):
    vs = list(vertices)
    if not vs:
        if total == 0:
            yield {}
        return
    if len(vs) == 1:
        yield {vs[0]: total}
        return
    for first in range(total + 1):
        for rest in _genus_assignments(vs[1:], total - first):
            out = {vs[0]: first}
            out.update(rest)
            yield out


def enumerate_genus2(max_edges: int, max_weight: int) -> list:
    """All stable connected decorated graphs of arithmetic genus 2 with
    Betti number at most 2, at most ``max_edges`` edges, and total weight
    at most ``max_weight``, one per decorated isomorphism class."""
    if max_edges < 0 or max_weight < 0:
        raise DecorationError("bounds must be non-negative")
    out = {}
    for g in enumerate_connected_graphs(max_edges, max_b1=2):
        bb = b1(g)
        verts = sorted(g.vertices, key=sorted)
        for pg in _genus_assignments(verts, 2 - bb):
            for w in _weight_assignments(verts, max_weight):
                dg = DecoratedGraph(g, pg, w)
                if not is_stable(dg):
                    continue
                key = decorated_canonicalize(dg)
                out.setdefault(key, dg)
    return [out[k] for k in sorted(out)]
