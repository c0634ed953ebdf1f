"""JSON serialization for graphs, decorated graphs, and level trees.

Vertices are addressed by a stable key: the comma-joined sorted list of
their half-edge names (markers included).  All emitted lists are sorted,
so serialization is deterministic and round-trips byte-identically.
"""

from __future__ import annotations

import hashlib
import json
from typing import Mapping, Optional, Union

import jsonschema

from .decorations import DecoratedGraph
from .graphs import Graph, GraphError, is_marker
from .trees import RootedLevelTree, RootedTree

GRAPH_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "stratacalc/graph.schema.json",
    "type": "object",
    "required": ["half_edges", "edges", "vertices"],
    "additionalProperties": False,
    "properties": {
        "half_edges": {"type": "array", "items": {"type": "string"}},
        "edges": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "string"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "vertices": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "string"}},
        },
    },
}

DECORATED_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "stratacalc/decorated_graph.schema.json",
    "type": "object",
    "required": ["half_edges", "edges", "vertices", "pg", "w"],
    "additionalProperties": False,
    "properties": {
        **GRAPH_SCHEMA["properties"],
        "pg": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
        "w": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
    },
}

LEVEL_TREE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "stratacalc/level_tree.schema.json",
    "type": "object",
    "required": ["half_edges", "edges", "vertices", "root", "levels"],
    "additionalProperties": False,
    "properties": {
        **GRAPH_SCHEMA["properties"],
        "root": {"type": "string"},
        "levels": {"type": "object", "additionalProperties": {"type": "integer", "maximum": 0}},
    },
}

ARCHIVE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "stratacalc/record_archive.schema.json",
    "type": "object",
    "required": ["version", "max_edges", "max_weight", "capped", "records", "checksum"],
    "additionalProperties": False,
    "properties": {
        "version": {"type": "string"},
        "max_edges": {"type": "integer", "minimum": 0},
        "max_weight": {"type": "integer", "minimum": 0},
        "capped": {"type": "boolean"},
        "records": {"type": "array"},
        "checksum": {"type": "string"},
    },
}

ALL_SCHEMAS = {
    "graph": GRAPH_SCHEMA,
    "decorated_graph": DECORATED_SCHEMA,
    "level_tree": LEVEL_TREE_SCHEMA,
    "record_archive": ARCHIVE_SCHEMA,
}


class SerializationError(ValueError):
    def __init__(self, message, pointer=""):
        super().__init__(f"{message} (at {pointer or '/'})")
        self.pointer = pointer


def vertex_key(v: frozenset) -> str:
    return ",".join(sorted(v))


def _validate(payload, schema):
    try:
        jsonschema.validate(payload, schema)
    except jsonschema.ValidationError as err:
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise SerializationError(err.message, pointer) from err


def graph_to_json(g: Graph) -> dict:
    return {
        "half_edges": sorted(g.half_edges),
        "edges": sorted(sorted(e) for e in g.edges),
        "vertices": sorted(sorted(h for h in v if not is_marker(h)) for v in g.vertices),
    }


def graph_from_json(payload: Mapping) -> Graph:
    _validate(payload, GRAPH_SCHEMA)
    declared = set(payload["half_edges"])
    vertices = []
    marker_n = 0
    for members in payload["vertices"]:
        if not members:
            vertices.append(frozenset({f"*{marker_n}"}))
            marker_n += 1
            continue
        for h in members:
            if h not in declared:
                raise SerializationError(f"vertex member {h!r} is not a declared half-edge",
                                         "/vertices")
        vertices.append(frozenset(members))
    edges = [frozenset(e) for e in payload["edges"]]
    try:
        return Graph(frozenset(declared), frozenset(vertices), frozenset(edges))
    except GraphError as err:
        raise SerializationError(str(err)) from err


def decorated_to_json(dg: DecoratedGraph) -> dict:
    out = graph_to_json(dg.graph)
    pg, w = dg.pg_map(), dg.w_map()
    out["pg"] = {vertex_key(v): pg[v] for v in sorted(dg.graph.vertices, key=sorted)}
    out["w"] = {vertex_key(v): w[v] for v in sorted(dg.graph.vertices, key=sorted)}
    return out


def decorated_from_json(payload: Mapping) -> DecoratedGraph:
    _validate(payload, DECORATED_SCHEMA)
    g = graph_from_json({k: payload[k] for k in ("half_edges", "edges", "vertices")})
    by_key = {vertex_key(v): v for v in g.vertices}
    for fieldname in ("pg", "w"):
        for key in payload[fieldname]:
            if key not in by_key:
                raise SerializationError(f"{fieldname} names unknown vertex {key!r}",
                                         f"/{fieldname}")
    pg = {by_key[k]: x for k, x in payload["pg"].items()}
    w = {by_key[k]: x for k, x in payload["w"].items()}
    missing = set(by_key.values()) - set(pg) | set(by_key.values()) - set(w)
    if missing:
        raise SerializationError("decorations must cover every vertex", "/pg")
    return DecoratedGraph(g, pg, w)


def level_tree_to_json(t: RootedLevelTree) -> dict:
    out = graph_to_json(t.tree.graph)
    lv = t.level_map()
    out["root"] = vertex_key(t.tree.root)
    out["levels"] = {vertex_key(v): lv[v] for v in sorted(t.tree.vertices, key=sorted)}
    return out


def level_tree_from_json(payload: Mapping) -> RootedLevelTree:
    _validate(payload, LEVEL_TREE_SCHEMA)
    g = graph_from_json({k: payload[k] for k in ("half_edges", "edges", "vertices")})
    by_key = {vertex_key(v): v for v in g.vertices}
    if payload["root"] not in by_key:
        raise SerializationError("root names an unknown vertex", "/root")
    levels = {}
    for key, lvl in payload["levels"].items():
        if key not in by_key:
            raise SerializationError(f"levels name unknown vertex {key!r}", "/levels")
        levels[by_key[key]] = lvl
    tree = RootedTree(g, by_key[payload["root"]])
    return RootedLevelTree(tree, levels)


def canonical_dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def payload_checksum(payload) -> str:
    return hashlib.sha256(canonical_dumps(payload).encode()).hexdigest()


ARCHIVE_VERSION = "stratum-archive/1"


def archive_to_json(max_edges: int, max_weight: int, records: list,
                    capped: bool) -> dict:
    body = {
        "version": ARCHIVE_VERSION,
        "max_edges": max_edges,
        "max_weight": max_weight,
        "capped": capped,
        "records": records,
    }
    body["checksum"] = payload_checksum(body["records"])
    _validate(body, ARCHIVE_SCHEMA)
    return body


def archive_verify(payload: Mapping) -> bool:
    _validate(payload, ARCHIVE_SCHEMA)
    return payload["checksum"] == payload_checksum(payload["records"])
