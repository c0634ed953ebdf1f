"""Half-edge graphs and their elementary operations.

A graph is a finite set of half-edges together with two partitions of it:
vertices (arbitrary disjoint subsets) and edges (disjoint 2-element
subsets).  Self-loops and parallel edges are allowed.  All values are
immutable; every operation returns a new graph and preserves the names of
surviving half-edges, so transformations can be audited by name.

A vertex whose half-edges were all consumed by a contraction is kept as a
placeholder: a singleton vertex containing a marker symbol (prefix ``*``)
that is not a half-edge.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

HalfEdge = str
Vertex = frozenset
Edge = frozenset

MARKER_PREFIX = "*"


class GraphError(ValueError):
    """Raised on malformed graphs or invalid operation inputs."""


def is_marker(symbol: str) -> bool:
    return symbol.startswith(MARKER_PREFIX)


def _fresh_marker(taken: set) -> str:
    n = 0
    while f"{MARKER_PREFIX}{n}" in taken:
        n += 1
    return f"{MARKER_PREFIX}{n}"


@dataclass(frozen=True)
class Graph:
    """Immutable half-edge graph.

    ``vertices`` partition the half-edge set, except that a vertex may
    instead be a singleton marker (no half-edges).  ``edges`` partition the
    half-edge set into pairs.
    """

    half_edges: frozenset
    vertices: frozenset
    edges: frozenset

    def __post_init__(self):
        seen = set()
        for v in self.vertices:
            if not isinstance(v, frozenset):
                raise GraphError("vertex must be a frozenset")
            members = {h for h in v if not is_marker(h)}
            markers = v - members
            if markers and (members or len(markers) != 1):
                raise GraphError(f"marker vertex must be a lone marker: {sorted(v)}")
            for h in members:
                if h not in self.half_edges:
                    raise GraphError(f"vertex member {h!r} is not a half-edge")
                if h in seen:
                    raise GraphError(f"half-edge {h!r} in two vertices")
                seen.add(h)
        if seen != set(self.half_edges):
            raise GraphError("vertices do not cover the half-edge set")
        paired = set()
        for e in self.edges:
            if not isinstance(e, frozenset) or len(e) != 2:
                raise GraphError(f"edge must pair exactly 2 half-edges: {sorted(e)}")
            for h in e:
                if h not in self.half_edges:
                    raise GraphError(f"edge member {h!r} is not a half-edge")
                if h in paired:
                    raise GraphError(f"half-edge {h!r} in two edges")
                paired.add(h)
        if paired != set(self.half_edges):
            raise GraphError("edges do not cover the half-edge set")

    # -- basic incidence -------------------------------------------------

    def vertex_of(self, h: HalfEdge) -> Vertex:
        for v in self.vertices:
            if h in v:
                return v
        raise GraphError(f"unknown half-edge {h!r}")

    def edge_of(self, h: HalfEdge) -> Edge:
        for e in self.edges:
            if h in e:
                return e
        raise GraphError(f"unknown half-edge {h!r}")

    def mate(self, h: HalfEdge) -> HalfEdge:
        e = self.edge_of(h)
        a, b = sorted(e)
        return b if h == a else a

    def incidence(self) -> Mapping:
        """vertex -> list of (edge, half-edge at this vertex)."""
        vert_of = {}
        for v in self.vertices:
            for h in v:
                vert_of[h] = v
        inc = {v: [] for v in self.vertices}
        for e in self.edges:
            for h in e:
                inc[vert_of[h]].append((e, h))
        return inc

    def endpoints(self, e: Edge):
        """The one or two vertices met by an edge (one for a loop)."""
        vs = {self.vertex_of(h) for h in e}
        return vs

    def valence(self, v: Vertex) -> int:
        """Number of half-edges at the vertex (loops count twice)."""
        return sum(1 for h in v if not is_marker(h))

    def is_loop(self, e: Edge) -> bool:
        return len(self.endpoints(e)) == 1


def graph_from_pairs(vertex_sets: Iterable, edge_pairs: Iterable) -> Graph:
    """Build a graph from iterables of vertex member lists and edge pairs."""
    vertices = frozenset(frozenset(v) for v in vertex_sets)
    edges = frozenset(frozenset(e) for e in edge_pairs)
    half_edges = frozenset(h for e in edges for h in e)
    return Graph(half_edges, vertices, edges)


def single_vertex_graph() -> Graph:
    """The edge-less one-vertex graph (a lone marker vertex)."""
    return Graph(frozenset(), frozenset({frozenset({MARKER_PREFIX + "0"})}), frozenset())


def is_single_vertex(g: Graph) -> bool:
    return not g.edges and len(g.vertices) == 1


# -- components and Betti number ------------------------------------------


def components(g: Graph) -> list:
    """Connected components as subgraphs, via path reachability."""
    if not g.vertices:
        return []
    vert_of = {}
    for v in g.vertices:
        for h in v:
            vert_of[h] = v
    adj = {v: set() for v in g.vertices}
    for e in g.edges:
        a, b = sorted(e)
        va, vb = vert_of[a], vert_of[b]
        adj[va].add(vb)
        adj[vb].add(va)
    out, left = [], set(g.vertices)
    while left:
        seed = next(iter(sorted(left, key=sorted)))
        block = {seed}
        frontier = [seed]
        while frontier:
            v = frontier.pop()
            for w in adj[v]:
                if w not in block:
                    block.add(w)
                    frontier.append(w)
        left -= block
        hes = frozenset(h for v in block for h in v if not is_marker(h))
        edges = frozenset(e for e in g.edges if e <= hes)
        out.append(Graph(hes, frozenset(block), edges))
    out.sort(key=lambda c: (-len(c.vertices), sorted(map(sorted, c.vertices))))
    return out


def betti_connectivity(g: Graph):
    """(first Betti number or None, connected flag, component list).

    The Betti number |edges| - |vertices| + 1 is reported only for
    connected graphs.
    """
    comps = components(g)
    connected = len(comps) == 1
    b1 = len(g.edges) - len(g.vertices) + 1 if connected else None
    return b1, connected, comps


def is_connected(g: Graph) -> bool:
    return len(components(g)) == 1


def b1(g: Graph) -> int:
    bb, connected, _ = betti_connectivity(g)
    if not connected:
        raise GraphError("Betti number requested for a disconnected graph")
    return bb


# -- the three elementary operations ---------------------------------------


def contract_edges_with_map(g: Graph, contract: Iterable):
    """Contract edges and report the vertex correspondence.

    Returns ``(graph, vertex_map)`` where ``vertex_map`` sends every old
    vertex to its image.  Each connected component of the contracted edge
    set collapses its incident vertices into a single new vertex; the
    half-edges of the contracted edges disappear.  A component that leaves
    no half-edge behind becomes a marker vertex.
    """
    cset = {frozenset(e) for e in contract}
    unknown = cset - set(g.edges)
    if unknown:
        raise GraphError(f"cannot contract unknown edges: {sorted(map(sorted, unknown))}")
    if not cset:
        return g, {v: v for v in g.vertices}
    gone = {h for e in cset for h in e}
    vert_of = {}
    for v in g.vertices:
        for h in v:
            vert_of[h] = v
    # union-find over the vertices touched by contracted edges
    parent = {}

    def find(v):
        while parent[v] is not v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for e in cset:
        for h in e:
            v = vert_of[h]
            parent.setdefault(v, v)
        a, b = sorted(e)
        ra, rb = find(vert_of[a]), find(vert_of[b])
        if ra is not rb:
            parent[ra] = rb
    clusters = {}
    for v in parent:
        clusters.setdefault(find(v), set()).add(v)
    vertex_map = {v: v for v in g.vertices if v not in parent}
    new_vertices = set(vertex_map)
    taken = {h for v in new_vertices for h in v if is_marker(h)}
    for root in sorted(clusters, key=sorted):
        merged = set()
        for v in clusters[root]:
            merged |= v
        merged -= gone
        merged = {h for h in merged if not is_marker(h)}
        if not merged:
            m = _fresh_marker(taken)
            taken.add(m)
            merged = {m}
        image = frozenset(merged)
        new_vertices.add(image)
        for v in clusters[root]:
            vertex_map[v] = image
    out = Graph(
        frozenset(h for h in g.half_edges if h not in gone),
        frozenset(new_vertices),
        frozenset(e for e in g.edges if e not in cset),
    )
    return out, vertex_map


def contract_edges(g: Graph, contract: Iterable) -> Graph:
    """Contract a set of edges; see :func:`contract_edges_with_map`."""
    return contract_edges_with_map(g, contract)[0]


def dissolve_vertices(g: Graph, dissolve: Iterable) -> Graph:
    """Replace each listed vertex by singleton vertices, one per half-edge.

    Half-edges and edges are unchanged; the result may be disconnected.
    Dissolving a marker vertex removes it.
    """
    dset = {frozenset(v) for v in dissolve}
    unknown = dset - set(g.vertices)
    if unknown:
        raise GraphError(f"cannot dissolve unknown vertices: {sorted(map(sorted, unknown))}")
    new_vertices = set(v for v in g.vertices if v not in dset)
    for v in dset:
        for h in v:
            if not is_marker(h):
                new_vertices.add(frozenset({h}))
    return Graph(g.half_edges, frozenset(new_vertices), g.edges)


def identify_vertices(g: Graph, identify: Iterable) -> Graph:
    """Glue the listed vertices into a single vertex.

    Half-edges and edges are unchanged.
    """
    iset = {frozenset(v) for v in identify}
    if not iset:
        raise GraphError("cannot identify an empty vertex collection")
    unknown = iset - set(g.vertices)
    if unknown:
        raise GraphError(f"cannot identify unknown vertices: {sorted(map(sorted, unknown))}")
    merged = set()
    for v in iset:
        merged |= v
    members = {h for h in merged if not is_marker(h)}
    if not members:
        members = {sorted(merged)[0]}
    new_vertices = set(v for v in g.vertices if v not in iset)
    new_vertices.add(frozenset(members))
    return Graph(g.half_edges, frozenset(new_vertices), g.edges)


# -- canonical forms --------------------------------------------------------


def _neighbor_profile(g: Graph, colors, vert_of):
    prof = {}
    for v in g.vertices:
        prof[v] = []
    for e in g.edges:
        a, b = sorted(e)
        va, vb = vert_of[a], vert_of[b]
        if va == vb:
            prof[va].append(("loop", colors[va]))
        else:
            prof[va].append(("adj", colors[vb]))
            prof[vb].append(("adj", colors[va]))
    return {v: (colors[v], tuple(sorted(prof[v]))) for v in g.vertices}


def _refine_colors(g: Graph, init_colors):
    """Iterative neighborhood refinement; returns stable vertex colors."""
    vert_of = {}
    for v in g.vertices:
        for h in v:
            vert_of[h] = v
    colors = dict(init_colors)
    # replace colors by dense ranks for stable comparison
    while True:
        prof = _neighbor_profile(g, colors, vert_of)
        ranking = {p: i for i, p in enumerate(sorted(set(prof.values())))}
        new = {v: ranking[prof[v]] for v in g.vertices}
        if len(set(new.values())) == len(set(colors.values())):
            keyed = {v: (colors[v], new[v]) for v in g.vertices}
            ranking = {p: i for i, p in enumerate(sorted(set(keyed.values())))}
            return {v: ranking[keyed[v]] for v in g.vertices}
        colors = new


def _encode(g: Graph, order, vcolor, ecolor):
    """Encode the graph under a fixed vertex ordering."""
    index = {v: i for i, v in enumerate(order)}
    vert_of = {}
    for v in g.vertices:
        for h in v:
            vert_of[h] = v
    rows = []
    for e in g.edges:
        a, b = sorted(e)
        i, j = index[vert_of[a]], index[vert_of[b]]
        if i > j:
            i, j = j, i
        rows.append((i, j, repr(ecolor.get(e)) if ecolor else ""))
    rows.sort()
    vcolors = tuple(repr(vcolor.get(v)) if vcolor else "" for v in order)
    return (len(order), vcolors, tuple(rows))


_MAX_LABELINGS = 2_000_000


def canonical_form(g: Graph, vertex_color: Optional[Mapping] = None,
                   edge_color: Optional[Mapping] = None):
    """A total, deterministic canonical form.

    Two graphs (with optional vertex and edge colorings) have equal
    canonical forms exactly when some half-edge bijection matches their
    vertex and edge partitions and colors.  Computed by color refinement
    followed by exhaustive labeling within refined classes.
    """
    vc_items = tuple(sorted(vertex_color.items(), key=repr)) if vertex_color else ()
    ec_items = tuple(sorted(((frozenset(e), c) for e, c in edge_color.items()),
                            key=repr)) if edge_color else ()
    return _canonical_form_cached(g, vc_items, ec_items)


@functools.lru_cache(maxsize=400_000)
def _canonical_form_cached(g: Graph, vc_items, ec_items):
    vcolor = dict(vc_items)
    ecolor = dict(ec_items)
    init = {}
    vert_of = {}
    for v in g.vertices:
        for h in v:
            vert_of[h] = v
    loops = {v: 0 for v in g.vertices}
    degs = {v: 0 for v in g.vertices}
    einfo = {v: [] for v in g.vertices}
    for e in g.edges:
        a, b = sorted(e)
        va, vb = vert_of[a], vert_of[b]
        degs[va] += 1
        degs[vb] += 1
        ec = ecolor.get(e)
        if va == vb:
            loops[va] += 1
            einfo[va].append(("l", ec))
        else:
            einfo[va].append(("e", ec))
            einfo[vb].append(("e", ec))
    for v in g.vertices:
        init[v] = (repr(vcolor.get(v)), degs[v], loops[v], tuple(sorted(einfo[v], key=repr)))
    ranking = {c: i for i, c in enumerate(sorted(set(init.values()), key=repr))}
    colors = _refine_colors(g, {v: ranking[init[v]] for v in g.vertices})
    classes = {}
    for v in g.vertices:
        classes.setdefault(colors[v], []).append(v)
    class_order = sorted(classes)
    for c in class_order:
        classes[c].sort(key=sorted)
    total = 1
    for c in class_order:
        for k in range(2, len(classes[c]) + 1):
            total *= k
        if total > _MAX_LABELINGS:
            raise GraphError("graph too symmetric for exhaustive canonicalization")
    best = None
    for perm_choice in itertools.product(*[itertools.permutations(classes[c]) for c in class_order]):
        order = [v for block in perm_choice for v in block]
        enc = _encode(g, order, vcolor, ecolor)
        if best is None or enc < best:
            best = enc
    return best


def canonicalize(g: Graph, vertex_color: Optional[Mapping] = None,
                 edge_color: Optional[Mapping] = None):
    """Alias for :func:`canonical_form` (the exported operation name)."""
    return canonical_form(g, vertex_color, edge_color)


def isomorphic(g1: Graph, g2: Graph, vc1=None, vc2=None, ec1=None, ec2=None) -> bool:
    return canonical_form(g1, vc1, ec1) == canonical_form(g2, vc2, ec2)


def graph_leq(g1: Graph, g2: Graph) -> bool:
    """Contraction partial order: g1 <= g2 iff contracting some
    (possibly empty) edge set of g1 yields a graph isomorphic to g2."""
    for g in (g1, g2):
        if not is_connected(g):
            raise GraphError("partial order is defined on connected graphs only")
    target = canonical_form(g2)
    if canonical_form(g1) == target:
        return True
    if len(g2.edges) >= len(g1.edges):
        return False
    k = len(g1.edges) - len(g2.edges)
    for sub in itertools.combinations(sorted(g1.edges, key=sorted), k):
        if canonical_form(contract_edges(g1, sub)) == target:
            return True
    return False


# -- isomorphism and automorphism search ------------------------------------


def _vertex_bijections(g1, g2, vc1, vc2, ec1, ec2):
    """Yield vertex bijections compatible with colors and incidence counts."""
    vs1 = sorted(g1.vertices, key=sorted)
    vs2 = sorted(g2.vertices, key=sorted)
    if len(vs1) != len(vs2) or len(g1.edges) != len(g2.edges):
        return

    def signature(g, v, vc, ec):
        loops, plain = [], []
        for e in g.edges:
            ends = g.endpoints(e)
            if v in ends:
                c = ec.get(e) if ec else None
                if len(ends) == 1:
                    loops.append(repr(c))
                else:
                    plain.append(repr(c))
        return (repr(vc.get(v) if vc else None), sorted(loops), sorted(plain))

    sig1 = {v: signature(g1, v, vc1, ec1) for v in vs1}
    sig2 = {v: signature(g2, v, vc2, ec2) for v in vs2}

    def backtrack(i, mapping, used):
        if i == len(vs1):
            yield dict(mapping)
            return
        v = vs1[i]
        for w in vs2:
            if w in used or sig1[v] != sig2[w]:
                continue
            mapping[v] = w
            used.add(w)
            yield from backtrack(i + 1, mapping, used)
            del mapping[v]
            used.discard(w)

    yield from backtrack(0, {}, set())


def half_edge_isomorphisms(g1: Graph, g2: Graph, vc1=None, vc2=None,
                           ec1=None, ec2=None, limit: Optional[int] = None):
    """Yield half-edge bijections realizing colored isomorphisms.

    A bijection maps vertices to vertices, edges to equally colored edges,
    and restricts to pairings of parallel edges; both swap orders of each
    loop are produced.
    """
    ec1 = {frozenset(e): c for e, c in ec1.items()} if ec1 else {}
    ec2 = {frozenset(e): c for e, c in ec2.items()} if ec2 else {}
    count = 0
    for vmap in _vertex_bijections(g1, g2, vc1, vc2, ec1, ec2):
        # group edges of g1 by (mapped endpoint set, color); match within groups
        groups = {}
        for e in g1.edges:
            ends = frozenset(vmap[v] for v in g1.endpoints(e))
            groups.setdefault((ends, repr(ec1.get(e))), []).append(e)
        groups2 = {}
        for e in g2.edges:
            ends = frozenset(g2.endpoints(e))
            groups2.setdefault((ends, repr(ec2.get(e))), []).append(e)
        if set(groups) != set(groups2):
            continue
        if any(len(groups[k]) != len(groups2[k]) for k in groups):
            continue
        keys = sorted(groups, key=repr)
        pools = []
        for k in keys:
            pools.append([list(zip(groups[k], p))
                          for p in itertools.permutations(groups2[k])])
        for combo in itertools.product(*pools):
            pairs = [pq for block in combo for pq in block]
            # each matched edge pair admits 1 or 2 half-edge pairings
            choices = []
            feasible = True
            for e1, e2 in pairs:
                a1, b1 = sorted(e1)
                a2, b2 = sorted(e2)
                opts = []
                for pa, pb in ((a2, b2), (b2, a2)):
                    if vmap[g1.vertex_of(a1)] == g2.vertex_of(pa) and \
                       vmap[g1.vertex_of(b1)] == g2.vertex_of(pb):
                        opts.append(((a1, pa), (b1, pb)))
                if not opts:
                    feasible = False
                    break
                choices.append(opts)
            if not feasible:
                continue
            for pick in itertools.product(*choices):
                hmap = {}
                for (x, y), (u, w) in pick:
                    hmap[x] = y
                    hmap[u] = w
                yield hmap
                count += 1
                if limit is not None and count >= limit:
                    return


def half_edge_automorphisms(g: Graph, vertex_color=None, edge_color=None) -> list:
    """All colored automorphisms of a graph, as half-edge maps."""
    return list(half_edge_isomorphisms(g, g, vertex_color, vertex_color,
                                       edge_color, edge_color))


# -- exhaustive enumeration of small graphs ---------------------------------


def _enumerate_connected_impl(sizes, max_b1):
    seen = {}
    for ne in sizes:
        if ne == 0:
            g = single_vertex_graph()
            seen.setdefault(canonical_form(g), g)
            continue
        for nv in range(1, ne + 2):
            bb = ne - nv + 1
            if bb < 0 or (max_b1 is not None and bb > max_b1):
                continue
            pairs = list(itertools.combinations_with_replacement(range(nv), 2))
            for combo in itertools.combinations_with_replacement(pairs, ne):
                degs = [0] * nv
                for i, j in combo:
                    degs[i] += 1
                    degs[j] += 1
                if 0 in degs:
                    continue
                # each isomorphism class has a labeling with sorted degrees,
                # so skipping unsorted ones loses nothing
                if any(degs[i] < degs[i + 1] for i in range(nv - 1)):
                    continue
                vsets = [set() for _ in range(nv)]
                edges = []
                for idx, (i, j) in enumerate(combo):
                    a, b = f"e{idx}a", f"e{idx}b"
                    vsets[i].add(a)
                    vsets[j].add(b)
                    edges.append({a, b})
                g = graph_from_pairs(vsets, edges)
                if not is_connected(g):
                    continue
                key = canonical_form(g)
                seen.setdefault(key, g)
    return tuple(seen[k] for k in sorted(seen))


@functools.lru_cache(maxsize=64)
def _enumerate_connected_cached(max_edges, max_b1, exact_edges):
    sizes = [exact_edges] if exact_edges is not None else list(range(0, max_edges + 1))
    return _enumerate_connected_impl(sizes, max_b1)


def enumerate_connected_graphs(max_edges: int, max_b1: Optional[int] = None,
                               exact_edges: Optional[int] = None) -> list:
    """All connected graphs with at most (or exactly) the given number of
    edges, up to isomorphism, loops and parallel edges included.

    Half-edges are named ``e{i}a``/``e{i}b``; vertices are assembled from
    endpoint assignments over all vertex counts consistent with the edge
    count and an optional Betti bound.  Results are cached.
    """
    return list(_enumerate_connected_cached(max_edges, max_b1, exact_edges))
