"""Scene corpus persistence: newline-delimited JSON, one scene per line.

The document format is a flat dump of the scene graph (nodes, edges,
root id).  Loading streams scenes one line at a time so corpora never
need to fit in memory.  This module also owns the WorldSnapshot JSON
schema consumed by the builder (see README for a worked example).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator, Union

from .builder import (
    ActorState,
    AdjacencySpec,
    ConnectorSpec,
    CrosswalkSpec,
    EgoState,
    LaneSpec,
    RoadSpec,
    WorldSnapshot,
)
from .graph import EdgeKind, GraphError, NodeKind, SceneGraph, SceneGraphBuilder


class SchemaViolationError(Exception):
    """A corpus line that does not encode a valid scene."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _attrs_to_json(attrs) -> dict:
    return {key: list(value) if isinstance(value, tuple) else value for key, value in attrs.items()}


def _attrs_from_json(attrs: dict) -> dict:
    out = {}
    for key, value in attrs.items():
        out[key] = tuple(value) if isinstance(value, list) else value
    return out


def scene_to_dict(graph: SceneGraph) -> dict:
    nodes = [
        {"id": node.id, "kind": node.kind.value, "attrs": _attrs_to_json(node.attributes)}
        for node in graph.nodes()
    ]
    edges = sorted(
        (
            {
                "src": edge.source,
                "kind": edge.kind.value,
                "dst": edge.target,
                "attrs": _attrs_to_json(edge.attributes),
            }
            for edge in graph.edges()
        ),
        key=lambda e: (e["src"], e["kind"], e["dst"], json.dumps(e["attrs"], sort_keys=True)),
    )
    return {
        "scene_id": graph.scene_id,
        "timestamp_us": graph.timestamp_us,
        "nodes": nodes,
        "edges": edges,
        "root_id": graph.root_id,
    }


def scene_from_dict(data: dict) -> SceneGraph:
    try:
        builder = SceneGraphBuilder(str(data["scene_id"]), int(data["timestamp_us"]))
        for node in data["nodes"]:
            builder.add_node(
                str(node["id"]), NodeKind(node["kind"]), _attrs_from_json(node.get("attrs", {}))
            )
        for edge in data["edges"]:
            builder.add_edge(
                str(edge["src"]),
                EdgeKind(edge["kind"]),
                str(edge["dst"]),
                _attrs_from_json(edge.get("attrs", {})),
            )
        graph = builder.build()
    except (KeyError, TypeError, ValueError, GraphError) as exc:
        raise ValueError(f"invalid scene document: {exc}") from exc
    if graph.root_id != data.get("root_id"):
        raise ValueError(
            f"stored root_id {data.get('root_id')!r} does not match the ego's On target "
            f"{graph.root_id!r}"
        )
    return graph


def scene_to_json(graph: SceneGraph) -> str:
    return json.dumps(scene_to_dict(graph), sort_keys=True, separators=(",", ":"))


def save_corpus(path: Union[str, Path], graphs: Iterable[SceneGraph]) -> int:
    """Write scenes as NDJSON; returns the number of scenes written."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for graph in graphs:
            handle.write(scene_to_json(graph) + "\n")
            count += 1
    return count


def scene_from_json_line(line: str, line_no: int) -> SceneGraph:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaViolationError(line_no, f"not valid JSON: {exc.msg}") from exc
    try:
        return scene_from_dict(data)
    except ValueError as exc:
        raise SchemaViolationError(line_no, str(exc)) from exc


def load_corpus(path: Union[str, Path]) -> Iterator[SceneGraph]:
    """Stream scenes from an NDJSON corpus, one graph in memory at a time."""
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            yield scene_from_json_line(line, line_no)


# --- WorldSnapshot JSON ------------------------------------------------------


def snapshot_to_dict(snapshot: WorldSnapshot) -> dict:
    def pairlist(points) -> list:
        return [list(p) for p in points]

    actors = []
    for actor in snapshot.actors:
        entry = {
            "id": actor.actor_id,
            "type": actor.object_type,
            "x": actor.x,
            "y": actor.y,
            "heading": actor.heading,
            "speed": actor.speed,
            "length": actor.length,
            "width": actor.width,
        }
        if actor.bbox is not None:
            entry["bbox"] = pairlist(actor.bbox)
        actors.append(entry)

    roads = []
    for road in snapshot.roads:
        lanes = []
        for lane in road.lanes:
            entry = {
                "id": lane.lane_id,
                "centerline": pairlist(lane.centerline),
                "speed_limit": lane.speed_limit,
            }
            if lane.width is not None:
                entry["width"] = lane.width
            lanes.append(entry)
        roads.append(
            {
                "id": road.road_id,
                "lanes": lanes,
                "adjacency": [
                    {"left": adj.left_lane, "right": adj.right_lane, "boundary_type": adj.boundary_type}
                    for adj in road.adjacency
                ],
            }
        )

    connectors = []
    for conn in snapshot.connectors:
        entry = {
            "id": conn.connector_id,
            "from": conn.source,
            "to": conn.target,
            "turn_type": conn.turn_type,
        }
        if conn.centerline is not None:
            entry["centerline"] = pairlist(conn.centerline)
        if conn.length is not None:
            entry["length"] = conn.length
        if conn.width is not None:
            entry["width"] = conn.width
        connectors.append(entry)

    return {
        "scene_id": snapshot.scene_id,
        "timestamp_us": snapshot.timestamp_us,
        "ego": {
            "x": snapshot.ego.x,
            "y": snapshot.ego.y,
            "heading": snapshot.ego.heading,
            "speed": snapshot.ego.speed,
            "length": snapshot.ego.length,
            "width": snapshot.ego.width,
        },
        "actors": actors,
        "map": {
            "roads": roads,
            "connectors": connectors,
            "crosswalks": [
                {"id": cw.crosswalk_id, "polygon": pairlist(cw.polygon)}
                for cw in snapshot.crosswalks
            ],
            "successors": [list(pair) for pair in snapshot.successors],
        },
    }


def snapshot_from_dict(data: dict) -> WorldSnapshot:
    def pairs(points) -> tuple:
        return tuple((float(p[0]), float(p[1])) for p in points)

    ego = data["ego"]
    map_data = data.get("map", {})
    roads = []
    for road in map_data.get("roads", ()):
        lanes = tuple(
            LaneSpec(
                lane_id=str(lane["id"]),
                centerline=pairs(lane["centerline"]),
                speed_limit=float(lane["speed_limit"]),
                width=float(lane["width"]) if "width" in lane else None,
            )
            for lane in road["lanes"]
        )
        adjacency = tuple(
            AdjacencySpec(
                left_lane=str(adj["left"]),
                right_lane=str(adj["right"]),
                boundary_type=str(adj["boundary_type"]),
            )
            for adj in road.get("adjacency", ())
        )
        roads.append(RoadSpec(road_id=str(road["id"]), lanes=lanes, adjacency=adjacency))

    connectors = tuple(
        ConnectorSpec(
            connector_id=str(conn["id"]),
            source=str(conn["from"]),
            target=str(conn["to"]),
            turn_type=str(conn["turn_type"]),
            centerline=pairs(conn["centerline"]) if "centerline" in conn else None,
            length=float(conn["length"]) if "length" in conn else None,
            width=float(conn["width"]) if "width" in conn else None,
        )
        for conn in map_data.get("connectors", ())
    )

    crosswalks = tuple(
        CrosswalkSpec(crosswalk_id=str(cw["id"]), polygon=pairs(cw["polygon"]))
        for cw in map_data.get("crosswalks", ())
    )

    actors = tuple(
        ActorState(
            actor_id=str(actor.get("id", f"obj-{i:03d}")),
            object_type=str(actor["type"]),
            x=float(actor["x"]),
            y=float(actor["y"]),
            heading=float(actor.get("heading", 0.0)),
            speed=float(actor["speed"]),
            length=float(actor["length"]),
            width=float(actor["width"]),
            bbox=pairs(actor["bbox"]) if "bbox" in actor else None,
        )
        for i, actor in enumerate(data.get("actors", ()))
    )

    return WorldSnapshot(
        scene_id=str(data.get("scene_id", "scene")),
        timestamp_us=int(data.get("timestamp_us", 0)),
        ego=EgoState(
            x=float(ego["x"]),
            y=float(ego["y"]),
            heading=float(ego["heading"]),
            speed=float(ego["speed"]),
            length=float(ego["length"]),
            width=float(ego["width"]),
        ),
        actors=actors,
        roads=tuple(roads),
        connectors=connectors,
        crosswalks=crosswalks,
        successors=tuple(
            (str(pair[0]), str(pair[1])) for pair in map_data.get("successors", ())
        ),
    )


def load_snapshots(path: Union[str, Path]) -> Iterator[WorldSnapshot]:
    """Read WorldSnapshots from a .json file (one object) or .ndjson stream."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("[") or Path(path).suffix == ".json":
        data = json.loads(text)
        items = data if isinstance(data, list) else [data]
        for i, item in enumerate(items, start=1):
            try:
                yield snapshot_from_dict(item)
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaViolationError(i, f"invalid snapshot: {exc}") from exc
        return
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield snapshot_from_dict(json.loads(line))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolationError(line_no, f"invalid snapshot: {exc}") from exc
