"""Rooted trees, tree orders, and rooted level trees.

A rooted level tree carries an integer level on every vertex: the root sits
at level 0, no other vertex does, and levels strictly decrease away from
the root along every edge.  Real-valued levels are normalized away: two
level maps that agree on the vertices at or above the floor level, up to an
order preserving relabeling, describe the same class, and each class is
represented by consecutive integer levels.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional

from .graphs import (
    Graph,
    GraphError,
    canonical_form,
    contract_edges,
    is_marker,
    is_single_vertex,
    single_vertex_graph,
)


class TreeError(ValueError):
    """Raised on malformed trees or level maps."""


@dataclass(frozen=True)
class RootedTree:
    graph: Graph
    root: frozenset

    def __post_init__(self):
        from .graphs import betti_connectivity

        bb, connected, _ = betti_connectivity(self.graph)
        if not connected:
            raise TreeError("rooted tree must be connected")
        if bb != 0:
            raise TreeError(f"rooted tree must have first Betti number 0, got {bb}")
        if self.root not in self.graph.vertices:
            raise TreeError("root is not a vertex of the tree")

    @property
    def edges(self):
        return self.graph.edges

    @property
    def vertices(self):
        return self.graph.vertices

    def is_point(self) -> bool:
        return not self.graph.edges


def tau_point() -> RootedTree:
    """The one-vertex edge-less rooted tree."""
    g = single_vertex_graph()
    return RootedTree(g, next(iter(g.vertices)))


@dataclass(frozen=True)
class TreeOrder:
    """Parent structure and the induced strict partial orders.

    ``lower_half[e]``/``upper_half[e]`` are the child-side and root-side
    half-edges of each edge; an edge is below another when it lies in the
    subtree hanging under the other's child vertex.
    """

    tree: RootedTree
    parent_vertex: Mapping
    parent_edge: Mapping
    depth: Mapping
    lower_half: Mapping
    upper_half: Mapping
    children: Mapping

    @cached_property
    def edges_max(self) -> frozenset:
        return frozenset(e for e in self.tree.edges
                         if self.vertex_of_upper(e) == self.tree.root)

    @cached_property
    def edges_min(self) -> frozenset:
        return frozenset(e for e in self.tree.edges
                         if not self.children[self.vertex_of_lower(e)])

    @cached_property
    def vertices_min(self) -> frozenset:
        return frozenset(v for v in self.tree.vertices if not self.children[v])

    @cached_property
    def vertices_max(self) -> frozenset:
        return frozenset({self.tree.root})

    def vertex_of_lower(self, e):
        return self.tree.graph.vertex_of(self.lower_half[e])

    def vertex_of_upper(self, e):
        return self.tree.graph.vertex_of(self.upper_half[e])

    def vertex_below(self, v, w) -> bool:
        """v strictly below w: w is a proper ancestor of v."""
        if v == w:
            return False
        cur = v
        while cur is not None:
            cur = self.parent_vertex.get(cur)
            if cur == w:
                return True
        return False

    def edge_below(self, e, f) -> bool:
        """e strictly below f: e lies in the subtree under f's child vertex."""
        if e == f:
            return False
        cur = self.vertex_of_upper(e)
        target = self.vertex_of_lower(f)
        while cur is not None:
            if cur == target:
                return True
            cur = self.parent_vertex.get(cur)
        return False

    def half_below(self, h, k) -> bool:
        """h strictly below k: the root path to h's vertex traverses k."""
        if h == k:
            return False
        v = self.tree.graph.vertex_of(h)
        path = set()
        cur = v
        while self.parent_edge.get(cur) is not None:
            e = self.parent_edge[cur]
            path.add(self.lower_half[e])
            path.add(self.upper_half[e])
            cur = self.parent_vertex[cur]
        if k in path:
            return True
        # within a vertex, every other half-edge is below the parent half
        pe = self.parent_edge.get(v)
        return pe is not None and k == self.lower_half[pe] and k != h

    def ancestors_or_self(self, e) -> frozenset:
        """All edges on the root path through e, including e."""
        out = {e}
        cur = self.vertex_of_upper(e)
        while self.parent_edge.get(cur) is not None:
            out.add(self.parent_edge[cur])
            cur = self.parent_vertex[cur]
        return frozenset(out)

    def subtree_edges(self, v) -> frozenset:
        """All edges whose upper vertex is v or below v."""
        out = set()
        stack = [v]
        while stack:
            cur = stack.pop()
            for e in self.children[cur]:
                out.add(e)
                stack.append(self.vertex_of_lower(e))
        return frozenset(out)


@functools.lru_cache(maxsize=200_000)
def tree_order(tree: RootedTree) -> TreeOrder:
    """Compute parent pointers, depths, and the edge orientation maps."""
    g = tree.graph
    vert_of = {}
    for v in g.vertices:
        for h in v:
            vert_of[h] = v
    adj = {v: [] for v in g.vertices}
    for e in g.edges:
        a, b = sorted(e)
        adj[vert_of[a]].append((e, a, b))
        adj[vert_of[b]].append((e, b, a))
    parent_vertex, parent_edge, depth = {tree.root: None}, {tree.root: None}, {tree.root: 0}
    lower, upper = {}, {}
    children = {v: [] for v in g.vertices}
    frontier = [tree.root]
    seen = {tree.root}
    while frontier:
        v = frontier.pop()
        for e, mine, other in adj[v]:
            w = vert_of[other]
            if w in seen:
                continue
            seen.add(w)
            parent_vertex[w] = v
            parent_edge[w] = e
            depth[w] = depth[v] + 1
            upper[e] = mine
            lower[e] = other
            children[v].append(e)
            frontier.append(w)
    for v in children:
        children[v] = tuple(sorted(children[v], key=sorted))
    return TreeOrder(tree, parent_vertex, parent_edge, depth, lower, upper, children)


# -- rooted level trees ------------------------------------------------------


@dataclass(frozen=True)
class RootedLevelTree:
    tree: RootedTree
    levels: Mapping  # vertex -> non-positive integer

    def __post_init__(self):
        lv = dict(self.levels)
        if set(lv) != set(self.tree.vertices):
            raise TreeError("level map must cover exactly the vertices")
        if lv[self.tree.root] != 0:
            raise TreeError("root must sit at level 0")
        for v, l in lv.items():
            if l > 0:
                raise TreeError("levels must be non-positive")
            if l == 0 and v != self.tree.root:
                raise TreeError("only the root may sit at level 0")
        order = tree_order(self.tree)
        for e in self.tree.edges:
            lo = lv[order.vertex_of_lower(e)]
            hi = lv[order.vertex_of_upper(e)]
            if lo >= hi:
                raise TreeError("levels must strictly decrease along edges")
        object.__setattr__(self, "levels", _freeze_levels(lv))

    def level_of_half(self, h) -> int:
        return dict(self.levels)[self.tree.graph.vertex_of(h)]

    def level_map(self) -> dict:
        return dict(self.levels)

    def is_trivial(self) -> bool:
        return not self.tree.edges


def _freeze_levels(lv: dict):
    return tuple(sorted(((v, l) for v, l in lv.items()), key=lambda p: sorted(p[0])))


def trivial_level_tree(tree: Optional[RootedTree] = None) -> RootedLevelTree:
    t = tree if tree is not None else tau_point()
    if t.edges:
        raise TreeError("trivial level tree requires an edge-less tree")
    return RootedLevelTree(t, {t.root: 0})


@dataclass(frozen=True)
class LevelProfile:
    """Derived level data of a rooted level tree.

    ``floor`` is the highest level holding a minimal vertex.  ``crossing``
    maps a level to the edges whose upper half sits strictly above it and
    lower half at or below it; ``stopping`` keeps those whose lower half
    sits exactly there.  ``spine`` collects the edges of the root paths to
    the minimal vertices on the floor level.  ``upper_levels`` lists the
    levels in [floor, 0); ``passing_floor`` the edges crossing the floor
    without stopping; ``submerged`` the edges entirely below the floor.
    """

    tree: RootedTree
    floor: int
    levels: tuple  # descending distinct levels
    crossing: Mapping
    stopping: Mapping
    stopped_high: frozenset
    spine: frozenset
    upper_levels: tuple
    passing_floor: frozenset
    submerged: frozenset

    def narrow_level(self, k: int) -> int:
        """Lowest level of [floor, 0) where at most k spine edges cross,
        defaulting to 0."""
        candidates = [i for i in self.upper_levels
                      if len(self.crossing[i] & self.spine) <= k]
        return min(candidates + [0])

    def level_above(self, i: int) -> Optional[int]:
        ups = [j for j in self.levels if j > i]
        return min(ups) if ups else None

    def level_below(self, i: int) -> Optional[int]:
        downs = [j for j in self.levels if j < i]
        return max(downs) if downs else None

    def index_set(self) -> frozenset:
        """Levels of [floor, 0) together with the passing-floor and
        submerged edges."""
        return frozenset(self.upper_levels) | self.passing_floor | self.submerged


@functools.lru_cache(maxsize=200_000)
def level_profile(t: RootedLevelTree) -> LevelProfile:
    lv = t.level_map()
    order = tree_order(t.tree)
    floor = max(lv[v] for v in order.vertices_min)
    levels = tuple(sorted(set(lv.values()), reverse=True))
    crossing, stopping = {}, {}
    for i in levels:
        cross = set()
        stop = set()
        for e in t.tree.edges:
            hi = lv[order.vertex_of_upper(e)]
            lo = lv[order.vertex_of_lower(e)]
            if hi > i >= lo:
                cross.add(e)
                if lo == i:
                    stop.add(e)
        crossing[i] = frozenset(cross)
        stopping[i] = frozenset(stop)
    upper_levels = tuple(i for i in levels if floor <= i < 0)
    stopped_high = frozenset(e for i in upper_levels for e in stopping[i])
    floor_min_edges = (stopping.get(floor, frozenset()) & order.edges_min
                       if floor < 0 else frozenset())
    spine = set()
    for e in floor_min_edges:
        spine |= order.ancestors_or_self(e)
    passing_floor = (crossing[floor] - stopping[floor]) if floor < 0 else frozenset()
    submerged = frozenset(
        e for e in t.tree.edges if lv[order.vertex_of_upper(e)] <= floor)
    return LevelProfile(
        tree=t.tree,
        floor=floor,
        levels=levels,
        crossing=crossing,
        stopping=stopping,
        stopped_high=stopped_high,
        spine=frozenset(spine),
        upper_levels=upper_levels,
        passing_floor=passing_floor,
        submerged=submerged,
    )


def _clipped_span(profile: LevelProfile, lv, order, e) -> frozenset:
    """Levels of [floor, 0) strictly crossed by the edge, floor-clipped."""
    lo = max(lv[order.vertex_of_lower(e)], profile.floor)
    hi = lv[order.vertex_of_upper(e)]
    return frozenset(i for i in profile.levels if lo <= i < hi)


def contract_level_tree(t: RootedLevelTree, selector: Iterable) -> RootedLevelTree:
    """Contract a subset of the index set out of a rooted level tree.

    The selector may contain levels of [floor, 0), passing-floor edges, and
    submerged edges.  Selected levels are squeezed out (edges spanning only
    those levels contract); selected passing-floor edges have their lower
    half lifted to the surviving floor; selected submerged edges contract.
    Level values of surviving vertices are reassigned by the smallest
    surviving level at or above the old one.  The result keeps the original
    level values (no renormalization).
    """
    prof = level_profile(t)
    lv = t.level_map()
    order = tree_order(t.tree)
    idx = prof.index_set()
    chosen = set(selector)
    bad = chosen - idx
    if bad:
        raise TreeError(f"selector items outside the index set: {sorted(map(repr, bad))}")
    killed_levels = {i for i in chosen if isinstance(i, int)}
    sel_passing = {e for e in chosen if e in prof.passing_floor}
    sel_submerged = {e for e in chosen if e in prof.submerged}

    to_contract = set(sel_submerged)
    for e in prof.stopped_high | sel_passing:
        if _clipped_span(prof, lv, order, e) <= killed_levels:
            to_contract.add(e)

    new_graph = contract_edges(t.tree.graph, to_contract)
    # locate the root image: the vertex holding a surviving root half-edge,
    # or the merged cluster when the whole tree collapsed
    surviving_root_halves = {h for h in t.tree.root if h in new_graph.half_edges}
    if surviving_root_halves:
        new_root = new_graph.vertex_of(next(iter(sorted(surviving_root_halves))))
    else:
        candidates = [v for v in new_graph.vertices
                      if any(h in t.tree.root for h in v) or all(is_marker(h) for h in v)]
        if len(candidates) != 1:
            raise TreeError("could not locate the root image after contraction")
        new_root = candidates[0]

    upper_surviving = [i for i in list(prof.upper_levels) + [0] if i not in killed_levels]
    new_floor_candidate = min(upper_surviving)
    all_surviving = sorted((set(prof.levels) - killed_levels) | {0})

    def lift(value, floor_lift: bool) -> int:
        if floor_lift:
            return new_floor_candidate
        return min(i for i in all_surviving if i >= value)

    lifted_bottom_halves = {order.lower_half[e] for e in sel_passing if e not in to_contract}
    new_levels = {}
    for v in new_graph.vertices:
        vals = set()
        for h in v:
            if is_marker(h):
                continue
            vals.add(lift(lv[t.tree.graph.vertex_of(h)], h in lifted_bottom_halves))
        if not vals:
            vals = {0}
        # merged clusters agree at or above the surviving floor; below it the
        # class is unconstrained and the top constituent wins
        high = {x for x in vals if x >= new_floor_candidate}
        if len(high) > 1:
            raise TreeError(f"inconsistent lifted levels {sorted(vals)} on a merged vertex")
        new_levels[v] = max(vals)
    return RootedLevelTree(RootedTree(new_graph, new_root), new_levels)


# -- equivalence, canonical representatives, enumeration ---------------------


def level_equiv(t1: RootedLevelTree, t2: RootedLevelTree) -> bool:
    """Equivalence of level maps on the same rooted tree: equal vertex sets
    at or above the floors, matched by the order preserving relabeling of
    the level ranges."""
    if t1.tree != t2.tree:
        return False
    p1, p2 = level_profile(t1), level_profile(t2)
    lv1, lv2 = t1.level_map(), t2.level_map()
    upper1 = {v for v, l in lv1.items() if l >= p1.floor}
    upper2 = {v for v, l in lv2.items() if l >= p2.floor}
    if upper1 != upper2:
        return False
    range1 = sorted({lv1[v] for v in upper1}, reverse=True)
    range2 = sorted({lv2[v] for v in upper2}, reverse=True)
    if len(range1) != len(range2):
        return False
    rank1 = {l: i for i, l in enumerate(range1)}
    rank2 = {l: i for i, l in enumerate(range2)}
    return all(rank1[lv1[v]] == rank2[lv2[v]] for v in upper1)


def class_representative(t: RootedLevelTree) -> RootedLevelTree:
    """Canonical representative of the equivalence class: consecutive
    integer levels 0, -1, ... at or above the floor, and depth-based filler
    values below the floor."""
    prof = level_profile(t)
    lv = t.level_map()
    order = tree_order(t.tree)
    upper = sorted({l for l in lv.values() if l >= prof.floor}, reverse=True)
    remap = {l: -i for i, l in enumerate(upper)}
    new_floor = remap[prof.floor] if prof.floor in remap else 0
    new_levels = {}
    for v in t.tree.vertices:
        if lv[v] >= prof.floor:
            new_levels[v] = remap[lv[v]]
    # below the floor, the class does not constrain values: fill by depth
    # under the nearest ancestor at or above the floor
    pending = sorted((v for v in t.tree.vertices if lv[v] < prof.floor),
                     key=lambda v: order.depth[v])
    for v in pending:
        parent = order.parent_vertex[v]
        base = new_levels[parent]
        new_levels[v] = min(base - 1, new_floor - 1)
    return RootedLevelTree(t.tree, new_levels)


def is_class_representative(t: RootedLevelTree) -> bool:
    return class_representative(t).levels == t.levels


def enumerate_level_classes(tau: RootedTree) -> list:
    """One canonical representative per equivalence class of level maps on
    the given rooted tree, by exhaustive monotone assignment."""
    if not tau.edges:
        return [trivial_level_tree(tau)]
    order = tree_order(tau)
    verts = sorted(tau.vertices, key=lambda v: (order.depth[v], sorted(v)))
    n = len(verts)
    lowest = -(n - 1)
    reps = {}

    def assign(i, current):
        if i == n:
            t = RootedLevelTree(tau, dict(current))
            rep = class_representative(t)
            reps.setdefault(rep.levels, rep)
            return
        v = verts[i]
        if v == tau.root:
            current[v] = 0
            assign(i + 1, current)
            del current[v]
            return
        top = current[order.parent_vertex[v]]
        for l in range(top - 1, lowest - 1, -1):
            current[v] = l
            assign(i + 1, current)
            del current[v]

    assign(0, {})
    return [reps[k] for k in sorted(reps)]


def level_tree_canonical_form(t: RootedLevelTree):
    """Canonical form of a level tree up to rooted isomorphism, computed on
    the class representative with levels as vertex colors."""
    rep = class_representative(t)
    lv = rep.level_map()
    colors = {v: (lv[v], v == rep.tree.root) for v in rep.tree.vertices}
    return canonical_form(rep.tree.graph, vertex_color=colors)


def class_leq(c1: RootedLevelTree, c2: RootedLevelTree) -> bool:
    """True when contracting some subset of the index set of c1 lands in
    the class of c2 (empty subset included)."""
    target = level_tree_canonical_form(c2)
    if level_tree_canonical_form(c1) == target:
        return True
    idx = sorted(level_profile(c1).index_set(), key=repr)
    for r in range(1, len(idx) + 1):
        for sel in itertools.combinations(idx, r):
            contracted = contract_level_tree(c1, sel)
            if level_tree_canonical_form(contracted) == target:
                return True
    return False
