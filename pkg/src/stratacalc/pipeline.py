"""The eight-step recursive stratum construction for genus-2 decorated
dual graphs.

Each stratum record starts from a stable genus-2 decorated graph and walks
through eight rounds.  A round assigns a rooted tree (the step's tuple) to
the current ambient graph, branches over the level classes on that tree,
and passes to the derived graph.  Round six classifies the record, and
classified records additionally spawn a grafted branch carrying an extra
leaf edge at the root; rounds seven and eight act on grafted records only.

All constructions keep half-edge names alive across rounds, so every
later object can be audited against the base graph by name.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from .decorations import (
    DecoratedGraph,
    DecorationError,
    Subgraph,
    contract_decorated,
    contract_decorated_with_map,
    core,
    core_weight,
    decorated_canonicalize,
    enumerate_genus2,
    identify_decorated,
    is_stable,
)
from .graphs import (
    Graph,
    GraphError,
    betti_connectivity,
    components,
    dissolve_vertices,
    contract_edges_with_map,
    half_edge_automorphisms,
    is_marker,
)
from .monomials import Monomial, level_symbol
from .treelike import (
    COLLAPSE,
    AnomalyError,
    DerivedGraph,
    TreelikeTuple,
    derived_graph,
    derived_root,
    exceptional_edge_name,
    exceptional_half,
    graft,
    graft_edge,
    graft_tuple,
    point_tuple,
    tuple_contract,
    vic,
)
from .trees import (
    RootedLevelTree,
    RootedTree,
    TreeError,
    class_representative,
    enumerate_level_classes,
    level_profile,
    level_tree_canonical_form,
    tree_order,
    trivial_level_tree,
)

RECORD_CAP_ENV = "STRATACALC_RECORD_CAP"
DEFAULT_RECORD_CAP = 200_000

N6_CLASSES = ("a1", "a2", "a3", "b", "c", "d")
STEP_TAGS = {k: f"s{k}" for k in range(1, 9)}


class PipelineError(RuntimeError):
    pass


# -- small helpers -----------------------------------------------------------


def _vertex_with_half(g: Graph, h: str) -> Optional[frozenset]:
    for v in g.vertices:
        if h in v:
            return v
    return None


def _root_component(dg: DecoratedGraph, root: frozenset,
                    dissolve_extra: Iterable = ()):
    """Dissolve the positively weighted non-root vertices (and the extra
    ones), then return the component of the root as a rooted tree.

    Returns (RootedTree or None, anomaly string or None); a surviving
    cycle through the root makes the result undefined and is reported.
    """
    w = dg.w_map()
    doomed = {v for v in dg.graph.vertices if w[v] > 0 and v != root}
    doomed |= {v for v in dissolve_extra if v != root and v in dg.graph.vertices}
    loose = dissolve_vertices(dg.graph, doomed)
    for comp in components(loose):
        if root in comp.vertices:
            bb = len(comp.edges) - len(comp.vertices) + 1
            if bb != 0:
                return None, "root-component-not-a-tree"
            return RootedTree(comp, root), None
    return None, "root-lost-in-dissolution"


def _tree_from_component(tree, anomaly, ambient_root, anomalies):
    if tree is None:
        anomalies.append(anomaly)
        return point_tuple(ambient_root)
    return TreelikeTuple(tree, ambient_root)


def genus_one_pieces(dg: DecoratedGraph) -> list:
    """Minimal connected subgraphs of arithmetic genus 1 and weight 0:
    genus-1 weight-0 vertices and pure cycles of plain vertices."""
    pg, w = dg.pg_map(), dg.w_map()
    out = []
    for v in sorted(dg.graph.vertices, key=sorted):
        if pg[v] == 1 and w[v] == 0:
            out.append(Subgraph(frozenset({v}), frozenset()))
    plain = {v for v in dg.graph.vertices if pg[v] == 0 and w[v] == 0}
    edges = sorted(dg.graph.edges, key=sorted)
    for r in range(1, len(edges) + 1):
        for choice in itertools.combinations(edges, r):
            verts = set()
            for e in choice:
                verts |= dg.graph.endpoints(e)
            if not verts <= plain:
                continue
            # a pure cycle touches each of its vertices with exactly 2 halves
            touch = {v: 0 for v in verts}
            for e in choice:
                for h in e:
                    touch[dg.graph.vertex_of(h)] += 1
            if any(t != 2 for t in touch.values()):
                continue
            sub = Subgraph(frozenset(verts), frozenset(choice))
            if len(sub.edges) - len(sub.vertices) + 1 != 1:
                continue
            from .decorations import _sub_connected

            if _sub_connected(dg, sub):
                out.append(sub)
    return out


def _image_vertex(vmap: Mapping, v: frozenset) -> frozenset:
    return vmap[v]


# -- per-step state -----------------------------------------------------------


@dataclass
class StepData:
    ambient: DecoratedGraph
    ambient_root: frozenset
    tup: TreelikeTuple
    klass: Optional[RootedLevelTree] = None
    consumed: frozenset = frozenset()  # stopped edges of the class

    def floor(self) -> int:
        return level_profile(self.klass).floor if self.klass else 0

    def upper_levels(self) -> tuple:
        return level_profile(self.klass).upper_levels if self.klass else ()


@dataclass
class Record:
    """Full history of one stratum component through the pipeline."""

    base: DecoratedGraph
    vic_graph: DecoratedGraph
    vic_root: frozenset
    steps: dict = field(default_factory=dict)  # 1..8 -> StepData
    pre_vi3: Optional[DecoratedGraph] = None  # round-4 ambient before merging
    tau6_pre: Optional[TreelikeTuple] = None  # round-6 tree before grafting
    n6_class: str = "none"
    grafted: bool = False
    final: Optional[DecoratedGraph] = None  # ambient after round 8
    final_root: Optional[frozenset] = None
    anomalies: tuple = ()

    def ambient(self, k: int) -> DecoratedGraph:
        return self.steps[k].ambient

    def klass(self, k: int) -> Optional[RootedLevelTree]:
        return self.steps[k].klass

    def consumed(self, k: int) -> frozenset:
        return self.steps[k].consumed

    def trivial(self, k: int) -> bool:
        kl = self.steps[k].klass
        return kl is None or kl.is_trivial()


def class_is_trivial(kl: Optional[RootedLevelTree]) -> bool:
    return kl is None or kl.is_trivial()


def _narrow(kl: Optional[RootedLevelTree], k: int) -> int:
    if class_is_trivial(kl):
        return 0
    return level_profile(kl).narrow_level(k)


def _stopped(kl: Optional[RootedLevelTree]) -> frozenset:
    if class_is_trivial(kl):
        return frozenset()
    return level_profile(kl).stopped_high


# -- step rules ----------------------------------------------------------------


def assign_step1(vic_dg: DecoratedGraph, vic_root: frozenset, anomalies: list) -> TreelikeTuple:
    sub = core(vic_dg)
    w = vic_dg.w_map()
    if sum(w[v] for v in sub.vertices) > 0:
        return point_tuple(vic_root)
    ctr, vmap = contract_decorated_with_map(vic_dg, sub.edges)
    root = vmap[vic_root]
    tree, anomaly = _root_component(ctr, root)
    return _tree_from_component(tree, anomaly, vic_root, anomalies)


def assign_step2(base: DecoratedGraph, e1: frozenset, ambient_root: frozenset,
                 anomalies: list) -> TreelikeTuple:
    stage = contract_decorated(base, e1)
    pieces = genus_one_pieces(stage)
    pairs = [(x, y) for x, y in itertools.combinations(pieces, 2)
             if not (x.vertices & y.vertices)]
    if not pairs:
        return point_tuple(ambient_root)
    if len(pairs) > 1:
        anomalies.append("step2-multiple-piece-pairs")
        return point_tuple(ambient_root)
    x, y = pairs[0]
    merged, vmap = contract_decorated_with_map(stage, x.edges | y.edges)
    ox = vmap[sorted(x.vertices, key=sorted)[0]]
    oy = vmap[sorted(y.vertices, key=sorted)[0]]
    glued, o_hat = identify_decorated(merged, {ox, oy})
    tree, anomaly = _root_component(glued, o_hat)
    if anomaly == "root-component-not-a-tree":
        anomaly = "step2-cycle-at-root"
    return _tree_from_component(tree, anomaly, ambient_root, anomalies)


def assign_step3(base: DecoratedGraph, e12: frozenset, ambient_root: frozenset,
                 anomalies: list) -> TreelikeTuple:
    stage = contract_decorated(base, e12)
    pieces = genus_one_pieces(stage)
    if not pieces:
        return point_tuple(ambient_root)
    if len(pieces) > 1:
        anomalies.append("step3-multiple-pieces")
        return point_tuple(ambient_root)
    piece = pieces[0]
    merged, vmap = contract_decorated_with_map(stage, piece.edges)
    o_ctr = vmap[sorted(piece.vertices, key=sorted)[0]]
    tree, anomaly = _root_component(merged, o_ctr)
    if anomaly == "root-component-not-a-tree":
        anomaly = "step3-cycle-at-root"
    return _tree_from_component(tree, anomaly, ambient_root, anomalies)


def assign_step4(base: DecoratedGraph, e123: frozenset, ambient_root: frozenset,
                 anomalies: list) -> TreelikeTuple:
    stage = contract_decorated(base, e123)
    sub = core(stage)
    w = stage.w_map()
    wc = sum(w[v] for v in sub.vertices)
    if wc != 1:
        return point_tuple(ambient_root)
    merged, vmap = contract_decorated_with_map(stage, sub.edges)
    o_ctr = vmap[sorted(sub.vertices, key=sorted)[0]]
    tree, anomaly = _root_component(merged, o_ctr)
    if anomaly == "root-component-not-a-tree":
        anomaly = "step4-cycle-at-root"
    return _tree_from_component(tree, anomaly, ambient_root, anomalies)


def build_tilde2(base: DecoratedGraph, t1: Optional[RootedLevelTree]) -> DecoratedGraph:
    """Derived graph of the base along the round-1 class with the root
    region left unmerged (the base itself for the trivial class)."""
    if class_is_trivial(t1):
        return base
    return derived_graph(base, t1, STEP_TAGS[1]).decorated


def build_hat5(base: DecoratedGraph, rec: Record):
    """The round-5 auxiliary tree: contract the rounds 2-4 consumed edges
    out of the unmerged derived graph, then its core into the root.

    Returns (unmerged derived graph, auxiliary tree, its root)."""
    t1 = rec.klass(1)
    tilde2 = build_tilde2(base, t1)
    e234 = frozenset(rec.consumed(2) | rec.consumed(3) | rec.consumed(4))
    missing = e234 - set(tilde2.graph.edges)
    if missing:
        raise AnomalyError("consumed edges missing from the unmerged derived graph")
    stage = contract_decorated(tilde2, e234)
    sub = core(stage)
    merged, vmap = contract_decorated_with_map(stage, sub.edges)
    o_hat = vmap[sorted(sub.vertices, key=sorted)[0]]
    return tilde2, merged, o_hat


def assign_step5(base: DecoratedGraph, rec: Record, ambient_root: frozenset,
                 anomalies: list):
    """Round-5 tree; returns (tuple, hat5 graph, hat5 root) for reuse."""
    tilde2, hat5, o_hat = build_hat5(base, rec)
    t1 = rec.klass(1)
    n1 = _narrow(t1, 1)
    if n1 == 0:
        return point_tuple(ambient_root), hat5, o_hat
    w_tilde_core = core_weight(tilde2)
    w_hat_root = hat5.w_map()[o_hat]
    if w_tilde_core < w_hat_root:
        return point_tuple(ambient_root), hat5, o_hat
    if w_tilde_core > w_hat_root:
        anomalies.append("step5-weight-inversion")
        return point_tuple(ambient_root), hat5, o_hat
    anchor = _vertex_with_half(hat5.graph, exceptional_half(STEP_TAGS[1], n1, False))
    if anchor is None:
        anomalies.append("step5-chain-vertex-missing")
        return point_tuple(ambient_root), hat5, o_hat
    tree, anomaly = _root_component(hat5, o_hat, dissolve_extra=[anchor])
    if anomaly == "root-component-not-a-tree":
        anomaly = "step5-cycle-at-root"
    return _tree_from_component(tree, anomaly, ambient_root, anomalies), hat5, o_hat


def classify_n6(rec: Record) -> str:
    """Evaluate the six membership conditions in order; first match wins."""
    t = {k: rec.klass(k) for k in range(1, 6)}
    n1_t1 = _narrow(t[1], 1)
    n2_t1 = _narrow(t[1], 2)
    wc = {k: core_weight(rec.ambient(k)) for k in (2, 3, 5, 6)}
    wc[4] = core_weight(rec.pre_vi3) if rec.pre_vi3 is not None else core_weight(rec.ambient(4))
    if n2_t1 < n1_t1 == 0 and wc[2] == wc[6]:
        return "a1"
    if n1_t1 < 0 and _narrow(t[2], 1) < 0 and wc[2] < wc[3] == wc[6]:
        return "a2"
    if n1_t1 < 0 and _narrow(t[3], 1) < 0 and wc[2] == wc[3] < wc[4] == wc[6]:
        return "a3"
    if _narrow(t[5], 1) < 0:
        return "b"
    if wc[6] == 2 and rec.base.graph.edges:
        return "c"
    if _narrow(t[4], 1) < 0 and wc[6] == wc[5]:
        return "d"
    return "none"


def _hat6(rec: Record, hat5: DecoratedGraph, o_hat5: frozenset):
    """Derived graph of the round-5 auxiliary tree along the round-5 class.
    Returns the graph, its root, and the vertex image map from hat5."""
    t5 = rec.klass(5)
    if class_is_trivial(t5):
        return hat5, o_hat5, {v: v for v in hat5.graph.vertices}
    res = derived_graph(hat5, t5, STEP_TAGS[5])
    return res.decorated, derived_root(res, o_hat5), dict(res.vertex_images)


def assign_step6(rec: Record, n6: str, hat5, o_hat5, ambient_root: frozenset,
                 anomalies: list) -> TreelikeTuple:
    if n6 in ("c", "none"):
        return point_tuple(ambient_root)
    hat6, root6, images6 = _hat6(rec, hat5, o_hat5)
    t1 = rec.klass(1)
    t5 = rec.klass(5)
    n1_t1 = _narrow(t1, 1)
    n2_t1 = _narrow(t1, 2)

    def chain_vertex(level):
        """Image in hat6 of the round-1 chain vertex at the level; None when
        the level is 0 (nothing to dissolve) or the vertex degenerated."""
        if level == 0:
            return None
        v5 = _vertex_with_half(hat5.graph, exceptional_half(STEP_TAGS[1], level, False))
        if v5 is None:
            return None
        return images6.get(v5)

    def finish(anchor, must_exist):
        extra = []
        if anchor is not None:
            extra.append(anchor)
        elif must_exist:
            anomalies.append("step6-chain-vertex-missing")
            return point_tuple(ambient_root)
        tree, anomaly = _root_component(hat6, root6, dissolve_extra=extra)
        if anomaly == "root-component-not-a-tree":
            anomaly = "step6-cycle-at-root"
        return _tree_from_component(tree, anomaly, ambient_root, anomalies)

    if n6 == "a1":
        return finish(chain_vertex(n2_t1), n2_t1 < 0)
    if n6 in ("a2", "a3", "d"):
        return finish(chain_vertex(n1_t1), n1_t1 < 0)
    # class b: the round-5 class is non-trivial here
    prof5 = level_profile(t5)
    upper1 = level_profile(t1).upper_levels if not class_is_trivial(t1) else ()
    top_chain = {exceptional_edge_name(STEP_TAGS[1], i)
                 for i in upper1 if i >= n1_t1}
    if prof5.spine == frozenset(top_chain):
        return finish(chain_vertex(n2_t1), n2_t1 < 0)
    anchor = chain_vertex(n1_t1)
    if anchor is None and n1_t1 < 0:
        anomalies.append("step6-chain-vertex-missing")
        return point_tuple(ambient_root)
    # dissolve first, then squeeze out the lower band of the round-5 chain
    w = hat6.w_map()
    doomed = {v for v in hat6.graph.vertices if w[v] > 0 and v != root6}
    if anchor is not None:
        doomed.add(anchor)
    doomed.discard(root6)
    loose = dissolve_vertices(hat6.graph, doomed & set(hat6.graph.vertices))
    t5_levels = dict(t5.levels)
    lam_levels = []
    for j in upper1:
        if exceptional_edge_name(STEP_TAGS[1], j) in prof5.spine:
            for v in t5.tree.vertices:
                if exceptional_half(STEP_TAGS[1], j, False) in v:
                    lam_levels.append(t5_levels[v])
                    break
    lam = min(lam_levels + [0])
    squeeze = {exceptional_edge_name(STEP_TAGS[5], i)
               for i in prof5.upper_levels if i < lam}
    squeeze &= set(loose.edges)
    shrunk, vmap_sq = contract_edges_with_map(loose, squeeze)
    root_img = vmap_sq.get(root6)
    if root_img is None:
        root_img = next((v for v in shrunk.vertices
                         if any(h in root6 for h in v)), None)
    if root_img is None:
        anomalies.append("step6-root-lost")
        return point_tuple(ambient_root)
    for comp in components(shrunk):
        if root_img in comp.vertices:
            bb = len(comp.edges) - len(comp.vertices) + 1
            if bb != 0:
                anomalies.append("step6-cycle-at-root")
                return point_tuple(ambient_root)
            return TreelikeTuple(RootedTree(comp, root_img), ambient_root)
    anomalies.append("step6-root-lost")
    return point_tuple(ambient_root)


def _hat7(rec: Record, hat5, o_hat5, e6: frozenset, anomalies: list):
    hat6, root6 = _hat6(rec, hat5, o_hat5)
    if hat6 is None:
        return None, None
    grafted, host = graft(hat6, root6)
    doomed = set(e6)
    for k in (1, 5):
        kl = rec.klass(k)
        if not class_is_trivial(kl):
            for i in level_profile(kl).upper_levels:
                doomed.add(exceptional_edge_name(STEP_TAGS[k], i))
    doomed &= set(grafted.graph.edges)
    hat7, vmap = contract_decorated_with_map(grafted, doomed)
    return hat7, vmap[host]


def assign_step7(rec: Record, hat5, o_hat5, ambient_root: frozenset,
                 anomalies: list) -> TreelikeTuple:
    e6 = rec.consumed(6)
    hat7, root7 = _hat7(rec, hat5, o_hat5, e6, anomalies)
    if hat7 is None:
        # the auxiliary chain degenerated; grafting still leaves a tree
        anomalies.append("step7-missing-aux")
        return point_tuple(ambient_root)
    w7 = hat7.w_map()[root7]
    if w7 > 2 or (w7 == 2 and graft_edge() in e6):
        return point_tuple(ambient_root)
    if w7 < 2:
        anomalies.append("step7-low-root-weight")
        return point_tuple(ambient_root)
    tree, anomaly = _root_component(hat7, root7)
    if anomaly == "root-component-not-a-tree":
        anomaly = "step7-cycle-at-root"
    return _tree_from_component(tree, anomaly, ambient_root, anomalies)


def assign_step8(rec: Record, ambient_root: frozenset, anomalies: list) -> TreelikeTuple:
    e6, e7 = rec.consumed(6), rec.consumed(7)
    if rec.n6_class != "d" or graft_edge() in (e6 | e7):
        return point_tuple(ambient_root)
    wc6 = core_weight(rec.ambient(6))
    wc8 = core_weight(rec.ambient(8))
    if wc6 != wc8:
        return point_tuple(ambient_root)
    t4 = rec.klass(4)
    tilde2 = build_tilde2(rec.base, rec.klass(1))
    e23 = frozenset(rec.consumed(2) | rec.consumed(3))
    stage = contract_decorated(tilde2.graph, e23 & frozenset(tilde2.graph.graph.edges))
    if not class_is_trivial(t4):
        missing = set(t4.tree.graph.edges) - set(stage.graph.edges)
        if missing:
            anomalies.append("step8-chain-missing")
            return point_tuple(ambient_root)
        res4 = derived_graph(stage, t4, STEP_TAGS[4])
        tilde4 = res4.decorated
    else:
        tilde4 = stage
    sub = core(tilde4)
    tilde5, vmap = contract_decorated_with_map(tilde4, sub.edges)
    o5 = vmap[sorted(sub.vertices, key=sorted)[0]]
    t5 = rec.klass(5)
    if not class_is_trivial(t5):
        missing = set(t5.tree.graph.edges) - set(tilde5.graph.edges)
        if missing:
            anomalies.append("step8-chain-missing")
            return point_tuple(ambient_root)
        res5 = derived_graph(tilde5, t5, STEP_TAGS[5])
        rho, o6 = res5.decorated, derived_root(res5, o5)
    else:
        rho, o6 = tilde5, o5
    grafted, host = graft(rho, o6)
    doomed = set(e6)
    for k in (1, 5):
        kl = rec.klass(k)
        if not class_is_trivial(kl):
            for i in level_profile(kl).upper_levels:
                doomed.add(exceptional_edge_name(STEP_TAGS[k], i))
    doomed &= set(grafted.graph.edges)
    tilde7, vmap7 = contract_decorated_with_map(grafted, doomed)
    o7 = vmap7[host]
    e7_present = e7 & frozenset(tilde7.graph.edges)
    if e7_present != e7:
        anomalies.append("step8-chain-missing")
        return point_tuple(ambient_root)
    hat8, vmap8 = contract_decorated_with_map(tilde7, e7_present)
    o8 = vmap8[o7]
    n1_t4 = _narrow(t4, 1)
    anchor = _vertex_with_half(hat8.graph, exceptional_half(STEP_TAGS[4], n1_t4, False))
    if anchor is None:
        anomalies.append("step8-chain-vertex-missing")
        return point_tuple(ambient_root)
    tree, anomaly = _root_component(hat8, o8, dissolve_extra=[anchor])
    if anomaly == "root-component-not-a-tree":
        anomaly = "step8-cycle-at-root"
    return _tree_from_component(tree, anomaly, ambient_root, anomalies)


# -- the genus-1 reference assignment -----------------------------------------


def genus1_assign(dg: DecoratedGraph) -> TreelikeTuple:
    """The weighted dual tree rule for arithmetic genus 1: contract the
    core, dissolve positively weighted vertices, keep the root component.
    A positively weighted core yields the point tree."""
    from .decorations import arithmetic_genus

    if arithmetic_genus(dg) != 1:
        raise PipelineError("genus-1 assignment needs arithmetic genus 1")
    sub = core(dg)
    w = dg.w_map()
    rep = sorted(sub.vertices, key=sorted)[0]
    if sum(w[v] for v in sub.vertices) > 0:
        return point_tuple(rep)
    ctr, vmap = contract_decorated_with_map(dg, sub.edges)
    root = vmap[rep]
    tree, anomaly = _root_component(ctr, root)
    if tree is None:
        raise PipelineError(f"genus-1 assignment failed: {anomaly}")
    return TreelikeTuple(tree, rep)


# -- record assembly -----------------------------------------------------------


def _advance(ambient: DecoratedGraph, root: frozenset, kl: RootedLevelTree, tag: str):
    """Derived ambient and root for the next round."""
    if class_is_trivial(kl):
        return ambient, root
    res = derived_graph(ambient, kl, tag)
    return res.decorated, derived_root(res, root)


def _vi3(rec: Record, ambient: DecoratedGraph, root: frozenset):
    """Merge the root with the chain vertices of rounds 1 to 3."""
    targets = {root}
    for k in (1, 2, 3):
        kl = rec.klass(k)
        if class_is_trivial(kl):
            continue
        for i in level_profile(kl).upper_levels:
            v = _vertex_with_half(ambient.graph, exceptional_half(STEP_TAGS[k], i, False))
            if v is not None:
                targets.add(v)
    merged, o = identify_decorated(ambient, targets)
    return merged, o


def step_classes(tup: TreelikeTuple) -> list:
    return enumerate_level_classes(tup.tree)


def _class_ser(kl: Optional[RootedLevelTree], hmap=None):
    if kl is None:
        return ()
    lv = kl.level_map()

    def name(h):
        if is_marker(h):
            return "*"
        return hmap.get(h, h) if hmap else h

    return tuple(sorted((tuple(sorted(name(h) for h in v)), l) for v, l in lv.items()))


def record_choice_ser(rec_choices, hmap=None):
    """Serialize a choice vector (class per round plus flags) for orbit
    comparison under base-graph automorphisms."""
    out = []
    for item in rec_choices:
        if isinstance(item, (bool, str)) or item is None:
            out.append(item)
        else:
            out.append(_class_ser(item, hmap))
    return tuple(out)


def orbit_min_ser(rec_choices, autos) -> tuple:
    best = None
    for g in autos:
        ser = record_choice_ser(rec_choices, g)
        if best is None or ser < best:
            best = ser
    return best


# -- monomials ------------------------------------------------------------------


def record_z1(rec: Record) -> Monomial:
    syms = []
    for k in (1, 2):
        kl = rec.klass(k)
        if not class_is_trivial(kl):
            syms.extend(level_symbol(k, i) for i in level_profile(kl).upper_levels)
    return Monomial.of(syms, unit_flag=True)


def record_z2(rec: Record) -> Monomial:
    syms = []
    for k in range(1, 9):
        kl = rec.klass(k)
        if not class_is_trivial(kl):
            syms.extend(level_symbol(k, i) for i in level_profile(kl).upper_levels)
    return Monomial.of(syms, unit_flag=True)


def pullback_product(rec: Record, k: int, e: frozenset) -> Monomial:
    """Pull a product of node parameters over the tree-order upset of an
    edge back through round k: the level parameters of the round times the
    edge parameter when the edge passes the floor without stopping."""
    from .monomials import edge_symbol

    kl = rec.klass(k)
    if class_is_trivial(kl):
        return Monomial.one(unit_flag=True)
    prof = level_profile(kl)
    e = frozenset(e)
    if e not in prof.crossing.get(prof.floor, frozenset()):
        raise PipelineError("edge does not cross the floor level of the class")
    syms = [level_symbol(k, i) for i in prof.upper_levels]
    if e in prof.passing_floor:
        syms.append(edge_symbol(k, e))
    return Monomial.of(syms, unit_flag=True)


# -- pipeline ------------------------------------------------------------------


@dataclass
class PipelineResult:
    max_edges: int
    max_weight: int
    records: list
    capped: bool


def _emit(records, rec, cap):
    records.append(rec)
    return len(records) < cap


def run_pipeline(max_edges: int, max_weight: int,
                 record_cap: Optional[int] = None) -> PipelineResult:
    """Enumerate all stratum records within the bounds.

    Breadth is organized per base graph: rounds branch over level classes,
    deduplicated under the automorphisms of the base; classified records
    spawn a grafted sibling that runs rounds six to eight.
    """
    if record_cap is None:
        record_cap = int(os.environ.get(RECORD_CAP_ENV, DEFAULT_RECORD_CAP))
    records: list = []
    capped = False
    for base in enumerate_genus2(max_edges, max_weight):
        if capped:
            break
        colors = {}
        pgm, wm = base.pg_map(), base.w_map()
        for v in base.graph.vertices:
            colors[v] = (pgm[v], wm[v])
        autos = half_edge_automorphisms(base.graph, vertex_color=colors)
        hmaps = [dict(a) for a in autos]
        seen = set()

        def fresh(choices):
            key = orbit_min_ser(choices, hmaps)
            if key in seen:
                return False
            seen.add(key)
            return True

        vic_dg, vic_root = vic(base)
        anomalies0: list = []
        tup1 = assign_step1(vic_dg, vic_root, anomalies0)
        for t1 in step_classes(tup1):
            if capped:
                break
            if not fresh([t1]):
                continue
            rec = Record(base=base, vic_graph=vic_dg, vic_root=vic_root)
            rec.anomalies = tuple(anomalies0)
            rec.steps[1] = StepData(vic_dg, vic_root, tup1, t1, _stopped(t1))
            a2, o2 = _advance(vic_dg, vic_root, t1, STEP_TAGS[1])
            anomalies = list(rec.anomalies)
            tup2 = assign_step2(base, rec.consumed(1), o2, anomalies)
            for t2 in step_classes(tup2):
                if capped:
                    break
                if not fresh([t1, t2]):
                    continue
                rec2 = replace(rec, anomalies=tuple(anomalies), steps=dict(rec.steps))
                rec2.steps[2] = StepData(a2, o2, tup2, t2, _stopped(t2))
                a3, o3 = _advance(a2, o2, t2, STEP_TAGS[2])
                an3 = list(rec2.anomalies)
                tup3 = assign_step3(base, frozenset(rec2.consumed(1) | rec2.consumed(2)),
                                    o3, an3)
                for t3 in step_classes(tup3):
                    if capped:
                        break
                    if not fresh([t1, t2, t3]):
                        continue
                    rec3 = replace(rec2, anomalies=tuple(an3), steps=dict(rec2.steps))
                    rec3.steps[3] = StepData(a3, o3, tup3, t3, _stopped(t3))
                    a4pre, o4pre = _advance(a3, o3, t3, STEP_TAGS[3])
                    a4, o4 = _vi3(rec3, a4pre, o4pre)
                    an4 = list(rec3.anomalies)
                    tup4 = assign_step4(base,
                                        frozenset(rec3.consumed(1) | rec3.consumed(2)
                                                  | rec3.consumed(3)), o4, an4)
                    for t4 in step_classes(tup4):
                        if capped:
                            break
                        if not fresh([t1, t2, t3, t4]):
                            continue
                        rec4 = replace(rec3, anomalies=tuple(an4),
                                       steps=dict(rec3.steps), pre_vi3=a4pre)
                        rec4.steps[4] = StepData(a4, o4, tup4, t4, _stopped(t4))
                        a5, o5 = _advance(a4, o4, t4, STEP_TAGS[4])
                        an5 = list(rec4.anomalies)
                        tup5, hat5, o_hat5 = assign_step5(base, rec4, o5, an5)
                        for t5 in step_classes(tup5):
                            if capped:
                                break
                            if not fresh([t1, t2, t3, t4, t5]):
                                continue
                            rec5 = replace(rec4, anomalies=tuple(an5),
                                           steps=dict(rec4.steps))
                            rec5.steps[5] = StepData(a5, o5, tup5, t5, _stopped(t5))
                            a6, o6 = _advance(a5, o5, t5, STEP_TAGS[5])
                            an6 = list(rec5.anomalies)
                            rec5.steps[6] = StepData(a6, o6, point_tuple(o6), None,
                                                     frozenset())
                            n6 = classify_n6(rec5)
                            rec5.n6_class = n6
                            tau6_pre = assign_step6(rec5, n6, hat5, o_hat5, o6, an6)
                            rec5.tau6_pre = tau6_pre
                            # the ungrafted branch freezes here
                            rec_u = replace(rec5, anomalies=tuple(an6),
                                            steps=dict(rec5.steps), grafted=False)
                            for k in (7, 8):
                                rec_u.steps[k] = StepData(a6, o6, point_tuple(o6),
                                                          None, frozenset())
                            rec_u.final = a6
                            rec_u.final_root = o6
                            if fresh([t1, t2, t3, t4, t5, "u"]):
                                if not _emit(records, rec_u, record_cap):
                                    capped = True
                            if n6 == "none":
                                continue
                            # grafted branch
                            a6g, host = graft(a6, o6)
                            tup6g = graft_tuple(tau6_pre, host)
                            for t6 in step_classes(tup6g):
                                if capped:
                                    break
                                if not fresh([t1, t2, t3, t4, t5, "g", t6]):
                                    continue
                                rec6 = replace(rec5, anomalies=tuple(an6),
                                               steps=dict(rec5.steps), grafted=True)
                                rec6.steps[6] = StepData(a6g, host, tup6g, t6,
                                                         _stopped(t6))
                                a7, o7 = _advance(a6g, host, t6, STEP_TAGS[6])
                                an7 = list(rec6.anomalies)
                                tup7 = assign_step7(rec6, hat5, o_hat5, o7, an7)
                                for t7 in step_classes(tup7):
                                    if capped:
                                        break
                                    if not fresh([t1, t2, t3, t4, t5, "g", t6, t7]):
                                        continue
                                    rec7 = replace(rec6, anomalies=tuple(an7),
                                                   steps=dict(rec6.steps))
                                    rec7.steps[7] = StepData(a7, o7, tup7, t7,
                                                             _stopped(t7))
                                    a8, o8 = _advance(a7, o7, t7, STEP_TAGS[7])
                                    an8 = list(rec7.anomalies)
                                    rec7.steps[8] = StepData(a8, o8, point_tuple(o8),
                                                             None, frozenset())
                                    tup8 = assign_step8(rec7, o8, an8)
                                    for t8 in step_classes(tup8):
                                        if capped:
                                            break
                                        if not fresh([t1, t2, t3, t4, t5, "g", t6,
                                                      t7, t8]):
                                            continue
                                        rec8 = replace(rec7, anomalies=tuple(an8),
                                                       steps=dict(rec7.steps))
                                        rec8.steps[8] = StepData(a8, o8, tup8, t8,
                                                                 _stopped(t8))
                                        a9, o9 = _advance(a8, o8, t8, STEP_TAGS[8])
                                        rec8.final = a9
                                        rec8.final_root = o9
                                        if not _emit(records, rec8, record_cap):
                                            capped = True
    records.sort(key=record_sort_key)
    return PipelineResult(max_edges, max_weight, records, capped)


def record_sort_key(rec: Record):
    parts = [repr(decorated_canonicalize(rec.base))]
    for k in range(1, 9):
        parts.append(repr(_class_ser(rec.klass(k))))
    parts.append("g" if rec.grafted else "u")
    parts.append(rec.n6_class)
    return tuple(parts)


# -- invariant checks (inclusion chains and friends) ---------------------------


def _exceptional_family(rec: Record, k: int) -> frozenset:
    kl = rec.klass(k)
    if class_is_trivial(kl):
        return frozenset()
    return frozenset(exceptional_edge_name(STEP_TAGS[k], i)
                     for i in level_profile(kl).upper_levels)


_FORBIDDEN = {
    2: (1,),
    3: (1, 2),
    4: (1, 2, 3),
    5: (2, 3, 4),
    6: (2, 3, 4, 5),
    7: (1, 2, 3, 4, 5, 6),
    8: (1, 2, 3, 5, 6, 7),
}


def check_inclusion_chains(rec: Record) -> list:
    """Every round's tree must avoid the earlier exceptional families named
    in its display, and consumed edges must come from the round's tree."""
    problems = []
    for k in range(1, 9):
        sd = rec.steps[k]
        tree_edges = set(sd.tup.tree.graph.edges)
        if not tree_edges <= set(sd.ambient.graph.edges):
            problems.append(f"step{k}: tree edges leave the ambient graph")
        if sd.klass is not None and not sd.tup.is_point():
            if not sd.consumed <= tree_edges:
                problems.append(f"step{k}: consumed edges leave the tree")
        for j in _FORBIDDEN.get(k, ()):
            bad = tree_edges & _exceptional_family(rec, j)
            if bad:
                problems.append(
                    f"step{k}: tree uses round-{j} exceptional edges "
                    f"{sorted(sorted(e) for e in bad)}")
        if not sd.tup.is_point():
            root_halves = {h for h in sd.tup.tree.root if not is_marker(h)}
            if root_halves and not root_halves <= sd.ambient_root:
                problems.append(f"step{k}: tuple root leaves the ambient root")
    if rec.grafted:
        tup6 = rec.steps[6].tup
        if not tup6.is_point():
            order = tree_order(tup6.tree)
            ge = graft_edge()
            if ge not in order.edges_max or ge not in order.edges_min:
                problems.append("graft edge is not both maximal and minimal")
    if not class_is_trivial(rec.klass(1)):
        if core_weight(rec.ambient(2)) < 1:
            problems.append("round-2 core weight below 1")
    if not class_is_trivial(rec.klass(5)):
        if core_weight(rec.ambient(6)) < 2:
            problems.append("round-6 core weight below 2")
    return problems
