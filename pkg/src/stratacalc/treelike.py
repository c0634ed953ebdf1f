"""Treelike tuples, derived graphs, grafting, and the contraction calculus.

A treelike tuple attaches a rooted tree to a stratum of decorated graphs;
its edges are (identified with) edges of the ambient graph.  The derived
graph replaces the bundle of root paths leading to the highest leaves of a
level tree by a chain of exceptional edges, one per level, and contracts
the remaining stopped edges.  Grafting hangs a fresh leaf off a chosen
vertex.  Contracting an ambient edge acts on tuples by a three-case rule,
with an explicit collapse marker when the edge is both maximal and minimal
in the tuple tree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Union

from .decorations import (
    DecoratedGraph,
    contract_decorated,
    core,
    decorated_canonicalize,
    identify_decorated,
)
from .graphs import (
    Graph,
    GraphError,
    contract_edges_with_map,
    graph_leq,
    identify_vertices,
    is_marker,
)
from .trees import (
    RootedLevelTree,
    RootedTree,
    TreeError,
    level_profile,
    tau_point,
    tree_order,
)

COLLAPSE = "collapse"

GRAFT_PLUS = "!g+"
GRAFT_MINUS = "!g-"


class AnomalyError(RuntimeError):
    """An input broke a structural assumption the construction relies on."""


@dataclass(frozen=True)
class TreelikeTuple:
    """A rooted tree whose edges are ambient edges (identity pairing),
    plus the designated ambient vertex holding the root."""

    tree: RootedTree
    ambient_root: frozenset

    @property
    def edges(self):
        return self.tree.graph.edges

    def is_point(self) -> bool:
        return not self.tree.graph.edges

    def beta(self, edge):
        """Edge pairing into the ambient graph (always the identity here)."""
        return edge


def point_tuple(ambient_root: frozenset) -> TreelikeTuple:
    return TreelikeTuple(tau_point(), ambient_root)


def exceptional_half(tag: str, level: int, positive: bool) -> str:
    return f"!{tag}e{level}{'+' if positive else '-'}"


def exceptional_edge_name(tag: str, level: int) -> frozenset:
    return frozenset({exceptional_half(tag, level, True),
                      exceptional_half(tag, level, False)})


@dataclass(frozen=True)
class DerivedGraph:
    """Result of the chain replacement.

    ``exceptional_edges`` and ``exceptional_vertices`` are ordered from the
    top level downward; level 0 indexes the vertex absorbing the root side.
    ``vertex_images`` sends every ambient vertex to its image.
    """

    graph: Graph
    decorated: Optional[DecoratedGraph]
    exceptional_edges: tuple  # ((level, edge), ...) levels of [floor, 0) desc
    exceptional_vertices: tuple  # ((level, vertex), ...) levels of [floor, 0] desc
    origin_levels: tuple
    tag: str
    vertex_images: tuple = ()

    def vertex_at(self, level: int) -> frozenset:
        for l, v in self.exceptional_vertices:
            if l == level:
                return v
        raise KeyError(f"no exceptional vertex at level {level}")

    def edge_at(self, level: int) -> frozenset:
        for l, e in self.exceptional_edges:
            if l == level:
                return e
        raise KeyError(f"no exceptional edge at level {level}")

    def image_of(self, v: frozenset) -> frozenset:
        for old, new in self.vertex_images:
            if old == v:
                return new
        raise KeyError("vertex has no recorded image")


def derived_graph(ambient: Union[Graph, DecoratedGraph], t: RootedLevelTree,
                  tag: str) -> DerivedGraph:
    """Build the derived graph of an ambient graph along a level tree.

    The level tree lives on edges of the ambient graph (identity pairing);
    the trivial level tree returns the ambient unchanged.  When the ambient
    is decorated, the decorations of every vertex met by a stopped edge
    pool at the new top vertex and the other exceptional vertices carry
    zero.
    """
    dec = ambient if isinstance(ambient, DecoratedGraph) else None
    g = dec.graph if dec else ambient
    if not set(t.tree.graph.edges) <= set(g.edges):
        raise GraphError("level tree edges must be ambient edges")
    prof = level_profile(t)
    if prof.floor == 0:
        identity = tuple((v, v) for v in sorted(g.vertices, key=sorted))
        return DerivedGraph(g, dec, (), (), prof.levels, tag, identity)

    order = tree_order(t.tree)
    lv = t.level_map()
    spine = prof.spine
    stopped = prof.stopped_high
    spine_halves = {h for e in spine for h in e}
    uppers = list(prof.upper_levels)  # descending
    top_upper = uppers[0]

    bundle_plus = {i: exceptional_half(tag, i, True) for i in uppers}
    bundle_minus = {i: exceptional_half(tag, i, False) for i in uppers}
    for name in list(bundle_plus.values()) + list(bundle_minus.values()):
        if name in g.half_edges:
            raise GraphError(f"exceptional name {name!r} already present")

    # ambient vertices swallowed by the chain; a vertex met at several
    # levels (tuple edges realized as ambient loops after root merges)
    # surrenders its remaining half-edges to the highest level met
    claimed = {}

    def claim(vertex, level):
        claimed.setdefault(vertex, set()).add(level)

    for i in uppers:
        for e in prof.stopping[i] & spine:
            claim(g.vertex_of(order.lower_half[e]), i)
    for e in stopped:
        if lv[order.vertex_of_upper(e)] == 0:
            claim(g.vertex_of(order.upper_half[e]), 0)
    home = {v: max(ls) for v, ls in claimed.items()}

    def remnant(vertex):
        return {h for h in vertex if h not in spine_halves and not is_marker(h)}

    exc_vertices = {}
    members = {h for v, l in home.items() if l == 0 for h in remnant(v)}
    exc_vertices[0] = frozenset({bundle_plus[top_upper]} | members)
    for pos, i in enumerate(uppers):
        members = {h for v, l in home.items() if l == i for h in remnant(v)}
        base = {bundle_minus[i]}
        if i != prof.floor:
            base.add(bundle_plus[uppers[pos + 1]])
        exc_vertices[i] = frozenset(base | members)

    new_vertices = set(exc_vertices.values())
    for v in g.vertices:
        if v not in claimed:
            new_vertices.add(v)
    new_half_edges = (set(g.half_edges) - spine_halves) | set(bundle_plus.values()) \
        | set(bundle_minus.values())
    new_edges = set(e for e in g.edges if e not in spine)
    chain_edges = {i: exceptional_edge_name(tag, i) for i in uppers}
    new_edges |= set(chain_edges.values())
    expanded = Graph(frozenset(new_half_edges), frozenset(new_vertices),
                     frozenset(new_edges))

    final, vmap = contract_edges_with_map(expanded, stopped - spine)

    exc_edge_list = tuple((i, chain_edges[i]) for i in uppers)
    exc_vertex_list = tuple((i, vmap[exc_vertices[i]]) for i in [0] + uppers)
    images = []
    for v in sorted(g.vertices, key=sorted):
        if v in home:
            images.append((v, vmap[exc_vertices[home[v]]]))
        else:
            images.append((v, vmap[v]))
    images = tuple(images)

    dec_out = None
    if dec is not None:
        pg, w = dec.pg_map(), dec.w_map()
        touched = set()
        for e in stopped:
            for h in e:
                touched.add(g.vertex_of(h))
        new_pg = {}
        new_w = {}
        for v in final.vertices:
            new_pg[v] = 0
            new_w[v] = 0
        top_vertex = vmap[exc_vertices[0]]
        new_pg[top_vertex] = sum(pg[v] for v in sorted(touched, key=sorted))
        new_w[top_vertex] = sum(w[v] for v in sorted(touched, key=sorted))
        for v in g.vertices:
            if v in touched or v in claimed:
                continue
            new_pg[v] = pg[v]
            new_w[v] = w[v]
        dec_out = DecoratedGraph(final, new_pg, new_w)

    return DerivedGraph(final, dec_out, exc_edge_list, exc_vertex_list,
                        prof.levels, tag, images)


def derived_root(result: DerivedGraph, ambient_root: frozenset) -> frozenset:
    """Image of the ambient root vertex in the derived graph."""
    if not result.exceptional_edges:
        return ambient_root
    return result.vertex_at(0)


# -- grafting ----------------------------------------------------------------


def graft(g: Union[Graph, DecoratedGraph], v: frozenset):
    """Attach a fresh leaf to the chosen vertex via a fresh edge.

    For decorated input the new leaf carries genus and weight zero.
    """
    dec = g if isinstance(g, DecoratedGraph) else None
    graph = dec.graph if dec else g
    if v not in graph.vertices:
        raise GraphError("graft target is not a vertex")
    if GRAFT_PLUS in graph.half_edges or GRAFT_MINUS in graph.half_edges:
        raise GraphError("graph already grafted")
    host = frozenset({h for h in v if not is_marker(h)} | {GRAFT_PLUS})
    leaf = frozenset({GRAFT_MINUS})
    vertices = set(graph.vertices) - {v} | {host, leaf}
    out = Graph(graph.half_edges | {GRAFT_PLUS, GRAFT_MINUS},
                frozenset(vertices),
                graph.edges | {frozenset({GRAFT_PLUS, GRAFT_MINUS})})
    if dec is None:
        return out, host
    pg, w = dec.pg_map(), dec.w_map()
    pg[host] = pg.pop(v)
    w[host] = w.pop(v)
    pg[leaf] = 0
    w[leaf] = 0
    return DecoratedGraph(out, pg, w), host


def graft_edge() -> frozenset:
    return frozenset({GRAFT_PLUS, GRAFT_MINUS})


def graft_tuple(tup: TreelikeTuple, ambient_host: frozenset) -> TreelikeTuple:
    """Graft the tuple tree at its root; the new edge is the graft edge."""
    tree_grafted, new_root = graft(tup.tree.graph, tup.tree.root)
    return TreelikeTuple(RootedTree(tree_grafted, new_root), ambient_host)


# -- vertex identification of the core ---------------------------------------


def vic(dg: DecoratedGraph):
    """Identify all core vertices into a single root vertex.

    Returns the new decorated graph and the merged vertex; decorations of
    the core vertices add up, edges are untouched.
    """
    sub = core(dg)
    return identify_decorated(dg, sub.vertices)


# -- tuple contraction --------------------------------------------------------


def tuple_contract(tup: TreelikeTuple, e: frozenset,
                   ambient_edges: Optional[frozenset] = None):
    """Push a tuple through the contraction of one ambient edge.

    Returns the new tuple, or the :data:`COLLAPSE` marker when the edge
    is both maximal and minimal in the tuple tree (the caller must then
    send the stratum to the point tree).  The ambient root is left to the
    caller; the returned tuple keeps the old one.
    """
    e = frozenset(e)
    if ambient_edges is not None and e not in ambient_edges:
        raise GraphError("contracted edge is not an ambient edge")
    if e not in tup.edges:
        return tup
    order = tree_order(tup.tree)
    is_max = e in order.edges_max
    is_min = e in order.edges_min
    if is_max and is_min:
        return COLLAPSE
    if not is_min:
        doomed = {e}
    else:
        top = order.vertex_of_upper(e)
        doomed = set(order.subtree_edges(top))
    new_graph, vmap = contract_edges_with_map(tup.tree.graph, doomed)
    new_root = vmap[tup.tree.root]
    return TreelikeTuple(RootedTree(new_graph, new_root), tup.ambient_root)


# -- treelike validation ------------------------------------------------------


class ClosureError(ValueError):
    """The stratum set is not closed under single edge contraction."""


def _tuples_equal(t1: TreelikeTuple, t2: TreelikeTuple) -> bool:
    return t1.tree.graph == t2.tree.graph and t1.tree.root == t2.tree.root


def validate_treelike(strata: Iterable[DecoratedGraph],
                      assign: Callable[[DecoratedGraph], TreelikeTuple],
                      check_b2_subsets: bool = True) -> list:
    """Check the treelike axioms for a rule on a contraction-closed family.

    ``strata`` is a family of decorated graphs closed under single-edge
    contraction up to decorated isomorphism; ``assign`` maps each graph to
    its tuple.  For every graph and every edge the contracted graph must be
    present (else :class:`ClosureError`), the assigned trees must be
    monotone under contraction, and the contracted tuple must match the
    rule's output on the contracted graph; an edge that is both maximal and
    minimal in a tuple must send every contraction containing it to the
    point tree.  Returns a list of violation records.
    """
    entries = list(strata)
    index = {}
    for dg in entries:
        index.setdefault(decorated_canonicalize(dg), dg)
    missing = []
    for dg in entries:
        for e in sorted(dg.graph.edges, key=sorted):
            child = contract_decorated(dg, {e})
            if decorated_canonicalize(child) not in index:
                missing.append((dg, e))
    if missing:
        raise ClosureError(
            "strata not closed under contraction; missing children: "
            + "; ".join(f"{sorted(map(sorted, dg.graph.edges))} minus {sorted(e)}"
                        for dg, e in missing[:5]))

    violations = []

    def note(kind, parent, child, detail):
        violations.append({
            "violation_kind": kind,
            "parent": repr(decorated_canonicalize(parent)),
            "child": repr(decorated_canonicalize(child)) if child is not None else None,
            "detail": detail,
        })

    for dg in entries:
        tup = assign(dg)
        order = tree_order(tup.tree) if not tup.is_point() else None
        for e in sorted(dg.graph.edges, key=sorted):
            child = contract_decorated(dg, {e})
            child_tup = assign(child)
            if not graph_leq(tup.tree.graph, child_tup.tree.graph):
                note("tree-not-monotone", dg, child,
                     f"contracting {sorted(e)} does not shrink the assigned tree")
            if tup.is_point():
                continue
            in_tuple = e in tup.edges
            maxmin = in_tuple and e in order.edges_max and e in order.edges_min
            if maxmin:
                if check_b2_subsets:
                    others = sorted((f for f in dg.graph.edges if f != e), key=sorted)
                    supersets = []
                    for r in range(len(others) + 1):
                        for extra in itertools.combinations(others, r):
                            supersets.append({e} | set(extra))
                    for ss in supersets:
                        deep = contract_decorated(dg, ss)
                        deep_tup = assign(deep)
                        if not deep_tup.is_point():
                            note("collapse-not-point", dg, deep,
                                 f"contraction of {sorted(map(sorted, ss))} "
                                 "should carry the point tree")
                continue
            expected = tuple_contract(tup, e)
            if expected == COLLAPSE:
                continue
            if not _tuples_equal(expected, child_tup):
                note("tuple-mismatch", dg, child,
                     f"contracting {sorted(e)}: expected tree "
                     f"{sorted(map(sorted, expected.tree.graph.edges))}, assigned "
                     f"{sorted(map(sorted, child_tup.tree.graph.edges))}")
    return violations
