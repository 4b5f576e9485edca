"""Property-graph data model for a single driving scene.

A scene graph holds the road infrastructure (lane segments, intersection
connectors, lane markers, crosswalks) and the traffic participants (ego,
objects) visible around the ego vehicle at one timestamp.  Graphs are
assembled through :class:`SceneGraphBuilder` and are immutable once built;
pattern evaluations keep their scratch state outside the graph.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence, Union

AttrValue = Union[str, float, tuple[float, float]]


class GraphError(Exception):
    """Base class for scene-graph construction and validation errors."""


class DuplicateIdError(GraphError):
    def __init__(self, node_id: str):
        super().__init__(f"node id {node_id!r} already present")
        self.node_id = node_id


class MissingRequiredAttributeError(GraphError):
    def __init__(self, kind: "NodeKind", attribute: str, detail: str = ""):
        msg = f"{kind.value} node requires attribute {attribute!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.kind = kind
        self.attribute = attribute


class UnknownNodeError(GraphError):
    def __init__(self, node_id: str):
        super().__init__(f"unknown node id {node_id!r}")
        self.node_id = node_id


class IllegalEndpointKindsError(GraphError):
    def __init__(self, kind: "EdgeKind", source_kind: "NodeKind", target_kind: "NodeKind"):
        super().__init__(
            f"{kind.value} edge may not connect {source_kind.value} -> {target_kind.value}"
        )
        self.kind = kind
        self.source_kind = source_kind
        self.target_kind = target_kind


class MissingEdgeAttributeError(GraphError):
    def __init__(self, kind: "EdgeKind", attribute: str, detail: str = ""):
        msg = f"{kind.value} edge requires attribute {attribute!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.kind = kind
        self.attribute = attribute


class ValidationError(GraphError):
    """Scene-level invariant violated (ego/root rules)."""


class NodeKind(enum.Enum):
    LANE = "Lane"
    CONNECTOR = "Connector"
    LANE_MARKER = "LaneMarker"
    CROSSWALK = "Crosswalk"
    EGO = "Ego"
    OBJECT = "Object"


class EdgeKind(enum.Enum):
    NEXT = "Next"
    CONNECTED_TO = "ConnectedTo"
    ON = "On"


# (edge kind) -> (allowed source kinds, allowed target kinds)
EDGE_SCHEMA: dict[EdgeKind, tuple[frozenset[NodeKind], frozenset[NodeKind]]] = {
    EdgeKind.NEXT: (
        frozenset({NodeKind.LANE, NodeKind.CONNECTOR}),
        frozenset({NodeKind.LANE, NodeKind.CONNECTOR}),
    ),
    EdgeKind.CONNECTED_TO: (
        frozenset({NodeKind.LANE, NodeKind.CONNECTOR}),
        frozenset({NodeKind.LANE_MARKER}),
    ),
    EdgeKind.ON: (
        frozenset({NodeKind.CROSSWALK, NodeKind.EGO, NodeKind.OBJECT}),
        frozenset({NodeKind.LANE, NodeKind.CONNECTOR}),
    ),
}

MAX_LANE_LENGTH_M = 10.0


def _require_number(attrs: Mapping[str, AttrValue], kind: NodeKind, name: str) -> float:
    if name not in attrs:
        raise MissingRequiredAttributeError(kind, name)
    value = attrs[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MissingRequiredAttributeError(kind, name, "expected a number")
    return float(value)


def _require_string(attrs: Mapping[str, AttrValue], kind: NodeKind, name: str) -> str:
    if name not in attrs:
        raise MissingRequiredAttributeError(kind, name)
    value = attrs[name]
    if not isinstance(value, str):
        raise MissingRequiredAttributeError(kind, name, "expected a string")
    return value


def _require_pair(attrs: Mapping[str, AttrValue], kind: NodeKind, name: str) -> tuple[float, float]:
    if name not in attrs:
        raise MissingRequiredAttributeError(kind, name)
    value = attrs[name]
    if (
        not isinstance(value, (tuple, list))
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        raise MissingRequiredAttributeError(kind, name, "expected a pair of numbers")
    return (float(value[0]), float(value[1]))


def validate_node_attrs(kind: NodeKind, attrs: Mapping[str, AttrValue]) -> dict[str, AttrValue]:
    """Check the per-kind attribute schema and normalize numeric values.

    Returns a fresh attribute dict with numbers as floats and pairs as
    2-tuples of floats.  Extra attributes beyond the required set are kept
    as-is (they remain queryable by pattern predicates).
    """
    out: dict[str, AttrValue] = {}
    for key, value in attrs.items():
        if isinstance(value, (tuple, list)):
            pair = _require_pair(attrs, kind, key)
            out[key] = pair
        elif isinstance(value, bool):
            raise MissingRequiredAttributeError(kind, key, "booleans are not attribute values")
        elif isinstance(value, (int, float)):
            out[key] = float(value)
        elif isinstance(value, str):
            out[key] = value
        else:
            raise MissingRequiredAttributeError(
                kind, key, f"unsupported value type {type(value).__name__}"
            )

    if kind is NodeKind.LANE:
        speed = _require_number(attrs, kind, "speed_limit")
        length = _require_number(attrs, kind, "length")
        if speed < 0:
            raise MissingRequiredAttributeError(kind, "speed_limit", "must be >= 0")
        if not (0.0 < length <= MAX_LANE_LENGTH_M):
            raise MissingRequiredAttributeError(
                kind, "length", f"must be in (0, {MAX_LANE_LENGTH_M:g}] m, got {length:g}"
            )
    elif kind is NodeKind.CONNECTOR:
        _require_string(attrs, kind, "turn_type")
        length = _require_number(attrs, kind, "length")
        if length <= 0:
            raise MissingRequiredAttributeError(kind, "length", "must be > 0")
    elif kind is NodeKind.LANE_MARKER:
        _require_string(attrs, kind, "boundary_type")
    elif kind is NodeKind.EGO:
        velocity = _require_number(attrs, kind, "velocity")
        if velocity < 0:
            raise MissingRequiredAttributeError(kind, "velocity", "must be >= 0")
        _require_pair(attrs, kind, "dimensions")
    elif kind is NodeKind.OBJECT:
        _require_string(attrs, kind, "object_type")
        _require_pair(attrs, kind, "distance")
        velocity = _require_number(attrs, kind, "velocity")
        if velocity < 0:
            raise MissingRequiredAttributeError(kind, "velocity", "must be >= 0")
        _require_pair(attrs, kind, "dimensions")
    return out


@dataclass(frozen=True)
class Node:
    """A typed node with an attribute map."""

    id: str
    kind: NodeKind
    attributes: Mapping[str, AttrValue] = field(default_factory=dict)


@dataclass(frozen=True)
class Edge:
    """A typed directed edge; ``index`` gives each edge a stable identity."""

    source: str
    kind: EdgeKind
    target: str
    attributes: Mapping[str, AttrValue] = field(default_factory=dict)
    index: int = -1


class SceneGraph:
    """Immutable validated scene graph.

    Node and edge iteration order is id-sorted so that matching and
    reporting are deterministic.  A validated graph has exactly one Ego
    node with exactly one outgoing On edge; ``root_id`` is that edge's
    target segment.
    """

    def __init__(
        self,
        scene_id: str,
        timestamp_us: int,
        nodes: Mapping[str, Node],
        edges: Sequence[Edge],
        root_id: str,
    ):
        self.scene_id = scene_id
        self.timestamp_us = timestamp_us
        self._nodes = dict(nodes)
        self._edges = list(edges)
        self.root_id = root_id
        self._out: dict[str, list[Edge]] = {nid: [] for nid in self._nodes}
        self._in: dict[str, list[Edge]] = {nid: [] for nid in self._nodes}
        for edge in self._edges:
            self._out[edge.source].append(edge)
            self._in[edge.target].append(edge)
        for adjacency in (self._out, self._in):
            for edge_list in adjacency.values():
                edge_list.sort(key=lambda e: (e.target, e.source, e.kind.value, e.index))
        self._by_kind: dict[NodeKind, list[str]] = {kind: [] for kind in NodeKind}
        for nid in sorted(self._nodes):
            self._by_kind[self._nodes[nid].kind].append(nid)

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._nodes

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def node_ids(self) -> list[str]:
        return sorted(self._nodes)

    def nodes(self) -> Iterator[Node]:
        for nid in sorted(self._nodes):
            yield self._nodes[nid]

    def nodes_of_kind(self, kind: NodeKind) -> list[str]:
        return list(self._by_kind[kind])

    def edges(self) -> list[Edge]:
        return list(self._edges)

    @property
    def root(self) -> Node:
        return self._nodes[self.root_id]

    @property
    def ego_id(self) -> str:
        return self._by_kind[NodeKind.EGO][0]

    def neighbors(
        self,
        node_id: str,
        direction: str = "any",
        kind: Optional[EdgeKind] = None,
    ) -> list[tuple[Edge, Node]]:
        """Adjacent (edge, node) pairs, id-sorted for reproducible matching.

        ``direction`` is ``"out"``, ``"in"`` or ``"any"``; the edge keeps its
        stored orientation either way.
        """
        if node_id not in self._nodes:
            raise UnknownNodeError(node_id)
        if direction not in ("out", "in", "any"):
            raise ValueError(f"direction must be out/in/any, got {direction!r}")
        result: list[tuple[Edge, Node]] = []
        if direction in ("out", "any"):
            for edge in self._out[node_id]:
                if kind is None or edge.kind is kind:
                    result.append((edge, self._nodes[edge.target]))
        if direction in ("in", "any"):
            for edge in self._in[node_id]:
                if kind is None or edge.kind is kind:
                    result.append((edge, self._nodes[edge.source]))
        if direction == "any":
            result.sort(key=lambda pair: (pair[1].id, pair[0].kind.value, pair[0].index))
        return result

    def out_edges(self, node_id: str, kind: Optional[EdgeKind] = None) -> list[Edge]:
        if node_id not in self._nodes:
            raise UnknownNodeError(node_id)
        return [e for e in self._out[node_id] if kind is None or e.kind is kind]

    def in_edges(self, node_id: str, kind: Optional[EdgeKind] = None) -> list[Edge]:
        if node_id not in self._nodes:
            raise UnknownNodeError(node_id)
        return [e for e in self._in[node_id] if kind is None or e.kind is kind]

    def structurally_equal(self, other: "SceneGraph") -> bool:
        """Content equality ignoring edge insertion order."""
        if self.scene_id != other.scene_id or self.timestamp_us != other.timestamp_us:
            return False
        if self.root_id != other.root_id:
            return False
        if set(self._nodes) != set(other._nodes):
            return False
        for nid, node in self._nodes.items():
            theirs = other._nodes[nid]
            if node.kind is not theirs.kind or dict(node.attributes) != dict(theirs.attributes):
                return False
        mine = sorted(
            (e.source, e.kind.value, e.target, tuple(sorted(e.attributes.items())))
            for e in self._edges
        )
        theirs_edges = sorted(
            (e.source, e.kind.value, e.target, tuple(sorted(e.attributes.items())))
            for e in other._edges
        )
        return mine == theirs_edges


class SceneGraphBuilder:
    """Mutable accumulator that validates inserts and produces a SceneGraph."""

    def __init__(self, scene_id: str = "scene", timestamp_us: int = 0):
        self.scene_id = scene_id
        self.timestamp_us = timestamp_us
        self._nodes: dict[str, Node] = {}
        self._edges: list[Edge] = []

    def add_node(
        self, node_id: str, kind: NodeKind, attributes: Optional[Mapping[str, AttrValue]] = None
    ) -> str:
        if node_id in self._nodes:
            raise DuplicateIdError(node_id)
        attrs = validate_node_attrs(kind, attributes or {})
        self._nodes[node_id] = Node(id=node_id, kind=kind, attributes=attrs)
        return node_id

    def add_edge(
        self,
        source: str,
        kind: EdgeKind,
        target: str,
        attributes: Optional[Mapping[str, AttrValue]] = None,
    ) -> Edge:
        if source not in self._nodes:
            raise UnknownNodeError(source)
        if target not in self._nodes:
            raise UnknownNodeError(target)
        source_kind = self._nodes[source].kind
        target_kind = self._nodes[target].kind
        allowed_sources, allowed_targets = EDGE_SCHEMA[kind]
        if source_kind not in allowed_sources or target_kind not in allowed_targets:
            raise IllegalEndpointKindsError(kind, source_kind, target_kind)
        attrs = dict(attributes or {})
        if kind is EdgeKind.CONNECTED_TO:
            side = attrs.get("side")
            if side not in ("left", "right"):
                raise MissingEdgeAttributeError(kind, "side", "must be 'left' or 'right'")
        edge = Edge(
            source=source, kind=kind, target=target, attributes=attrs, index=len(self._edges)
        )
        self._edges.append(edge)
        return edge

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def node_kind(self, node_id: str) -> NodeKind:
        if node_id not in self._nodes:
            raise UnknownNodeError(node_id)
        return self._nodes[node_id].kind

    def build(self) -> SceneGraph:
        """Validate the ego/root invariants and freeze the graph."""
        egos = [nid for nid, node in self._nodes.items() if node.kind is NodeKind.EGO]
        if len(egos) != 1:
            raise ValidationError(f"scene must contain exactly one Ego node, found {len(egos)}")
        ego_on = [
            e for e in self._edges if e.source == egos[0] and e.kind is EdgeKind.ON
        ]
        if len(ego_on) != 1:
            raise ValidationError(
                f"Ego must have exactly one outgoing On edge, found {len(ego_on)}"
            )
        return SceneGraph(
            scene_id=self.scene_id,
            timestamp_us=self.timestamp_us,
            nodes=self._nodes,
            edges=self._edges,
            root_id=ego_on[0].target,
        )
