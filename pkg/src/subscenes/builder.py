"""Construct scene graphs from world-model snapshots.

The pipeline: keep map elements and actors within a radius of the ego,
split every lane of a road into the same number of segments (each at
most ``max_segment`` meters), wire segment chains, lane markers,
connectors and crosswalks, then place the ego and the other actors on
the segments their bounding boxes overlap most.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from shapely.geometry import Polygon

from . import geometry
from .graph import EdgeKind, NodeKind, SceneGraph, SceneGraphBuilder

DEFAULT_RADIUS_M = 50.0
DEFAULT_MAX_SEGMENT_M = 10.0
DEFAULT_LANE_WIDTH_M = 3.5


class BuildError(Exception):
    """Base class for snapshot-to-graph construction errors."""


class InvalidSnapshotError(BuildError):
    pass


class DegenerateLaneError(BuildError):
    def __init__(self, lane_id: str):
        super().__init__(f"lane {lane_id!r} has non-positive length")
        self.lane_id = lane_id


class NoInfrastructureError(BuildError):
    pass


class NoEgoPlacementError(BuildError):
    pass


@dataclass(frozen=True)
class EgoState:
    x: float
    y: float
    heading: float
    speed: float
    length: float
    width: float


@dataclass(frozen=True)
class ActorState:
    actor_id: str
    object_type: str
    x: float
    y: float
    heading: float
    speed: float
    length: float
    width: float
    bbox: Optional[tuple[tuple[float, float], ...]] = None

    def box(self) -> Polygon:
        if self.bbox is not None:
            return Polygon(self.bbox)
        return geometry.oriented_box(self.x, self.y, self.heading, self.length, self.width)


@dataclass(frozen=True)
class LaneSpec:
    lane_id: str
    centerline: tuple[tuple[float, float], ...]
    speed_limit: float
    width: Optional[float] = None

    def polyline(self) -> np.ndarray:
        return geometry.as_polyline(self.centerline)


@dataclass(frozen=True)
class AdjacencySpec:
    left_lane: str  # lane immediately to the left of right_lane
    right_lane: str
    boundary_type: str


@dataclass(frozen=True)
class RoadSpec:
    road_id: str
    lanes: tuple[LaneSpec, ...]
    adjacency: tuple[AdjacencySpec, ...] = ()


@dataclass(frozen=True)
class ConnectorSpec:
    connector_id: str
    source: str  # lane or connector id the movement starts from
    target: str  # lane or connector id it leads into
    turn_type: str
    centerline: Optional[tuple[tuple[float, float], ...]] = None
    length: Optional[float] = None
    width: Optional[float] = None


@dataclass(frozen=True)
class CrosswalkSpec:
    crosswalk_id: str
    polygon: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class WorldSnapshot:
    scene_id: str
    timestamp_us: int
    ego: EgoState
    actors: tuple[ActorState, ...] = ()
    roads: tuple[RoadSpec, ...] = ()
    connectors: tuple[ConnectorSpec, ...] = ()
    crosswalks: tuple[CrosswalkSpec, ...] = ()
    successors: tuple[tuple[str, str], ...] = ()  # (lane id, successor lane id)

    def lane_by_id(self) -> dict[str, LaneSpec]:
        return {lane.lane_id: lane for road in self.roads for lane in road.lanes}


@dataclass(frozen=True)
class BuildConfig:
    radius: float = DEFAULT_RADIUS_M
    max_segment: float = DEFAULT_MAX_SEGMENT_M
    lane_width: float = DEFAULT_LANE_WIDTH_M

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidSnapshotError(f"radius must be > 0, got {self.radius}")
        if not (0 < self.max_segment <= 10.0):
            # Lane nodes carry length <= 10 m by schema, so larger segments
            # could never validate.
            raise InvalidSnapshotError(
                f"max_segment must be in (0, 10] m, got {self.max_segment}"
            )
        if self.lane_width <= 0:
            raise InvalidSnapshotError(f"lane_width must be > 0, got {self.lane_width}")


@dataclass
class BuildReport:
    dropped_actors: list[tuple[str, str, str]] = field(default_factory=list)  # id, type, reason
    dropped_crosswalks: list[str] = field(default_factory=list)
    segment_count: int = 0
    connector_count: int = 0


@dataclass(frozen=True)
class Segment:
    """One lane piece plus its builder-side geometry (not stored in the graph)."""

    segment_id: str
    lane_id: str
    index: int
    polyline: np.ndarray
    length: float
    speed_limit: float
    width: float


def _resolve_connector_geometry(snapshot: WorldSnapshot) -> dict[str, np.ndarray]:
    """Concrete centerlines for every connector.

    Lane-to-lane movements default to the straight line from the source
    lane's end to the target lane's start; movements touching another
    connector must ship their own centerline.
    """
    lanes = snapshot.lane_by_id()
    resolved: dict[str, np.ndarray] = {}
    for conn in snapshot.connectors:
        if conn.centerline is not None:
            resolved[conn.connector_id] = geometry.as_polyline(conn.centerline)
            continue
        if conn.source in lanes and conn.target in lanes:
            start = lanes[conn.source].polyline()[-1]
            end = lanes[conn.target].polyline()[0]
            if geometry.distance(start[0], start[1], end[0], end[1]) <= 0:
                raise InvalidSnapshotError(
                    f"connector {conn.connector_id!r} between coincident lane endpoints "
                    "needs an explicit centerline"
                )
            resolved[conn.connector_id] = np.array([start, end], dtype=float)
        else:
            raise InvalidSnapshotError(
                f"connector {conn.connector_id!r} references non-lane endpoints and "
                "needs an explicit centerline"
            )
    return resolved


def filter_radius(snapshot: WorldSnapshot, radius: float) -> WorldSnapshot:
    """Keep map elements and actors whose center lies within the radius.

    Element centers: arclength midpoint for lanes and connectors, area
    centroid for crosswalk polygons, pose position for actors.  The ego
    is always retained.
    """
    if radius <= 0:
        raise InvalidSnapshotError(f"radius must be > 0, got {radius}")
    ex, ey = snapshot.ego.x, snapshot.ego.y

    def lane_in(lane: LaneSpec) -> bool:
        mid = geometry.midpoint(lane.polyline())
        return geometry.distance(mid[0], mid[1], ex, ey) <= radius

    roads = []
    for road in snapshot.roads:
        kept = tuple(lane for lane in road.lanes if lane_in(lane))
        if not kept:
            continue
        kept_ids = {lane.lane_id for lane in kept}
        adjacency = tuple(
            adj
            for adj in road.adjacency
            if adj.left_lane in kept_ids and adj.right_lane in kept_ids
        )
        roads.append(replace(road, lanes=kept, adjacency=adjacency))

    connector_geometry = _resolve_connector_geometry(snapshot)
    connectors = []
    for conn in snapshot.connectors:
        mid = geometry.midpoint(connector_geometry[conn.connector_id])
        if geometry.distance(mid[0], mid[1], ex, ey) <= radius:
            connectors.append(conn)

    crosswalks = []
    for crosswalk in snapshot.crosswalks:
        centroid = Polygon(crosswalk.polygon).centroid
        if geometry.distance(centroid.x, centroid.y, ex, ey) <= radius:
            crosswalks.append(crosswalk)

    actors = tuple(
        actor
        for actor in snapshot.actors
        if geometry.distance(actor.x, actor.y, ex, ey) <= radius
    )

    kept_lane_ids = {lane.lane_id for road in roads for lane in road.lanes}
    successors = tuple(
        (src, dst)
        for src, dst in snapshot.successors
        if src in kept_lane_ids and dst in kept_lane_ids
    )
    return replace(
        snapshot,
        roads=tuple(roads),
        connectors=tuple(connectors),
        crosswalks=tuple(crosswalks),
        actors=actors,
        successors=successors,
    )


def segment_id(lane_id: str, index: int) -> str:
    return f"{lane_id}#{index:03d}"


def segment_lanes(road: RoadSpec, max_segment: float, default_width: float) -> dict[str, list[Segment]]:
    """Split every lane of the road into the same number of segments.

    The count is driven by the longest lane in the group so each piece
    stays within ``max_segment`` meters.
    """
    lengths = {}
    for lane in road.lanes:
        length = geometry.arclength(lane.polyline())
        if length <= 0:
            raise DegenerateLaneError(lane.lane_id)
        lengths[lane.lane_id] = length
    parts = max(1, math.ceil(max(lengths.values()) / max_segment))
    chains: dict[str, list[Segment]] = {}
    for lane in road.lanes:
        pieces = geometry.split_polyline(lane.polyline(), parts)
        total = lengths[lane.lane_id]
        chain = []
        for index, piece in enumerate(pieces):
            # Equal-split lengths stated exactly so they sum to the arclength.
            piece_len = total * (index + 1) / parts - total * index / parts
            chain.append(
                Segment(
                    segment_id=segment_id(lane.lane_id, index),
                    lane_id=lane.lane_id,
                    index=index,
                    polyline=piece,
                    length=piece_len,
                    speed_limit=lane.speed_limit,
                    width=lane.width if lane.width is not None else default_width,
                )
            )
        chains[lane.lane_id] = chain
    return chains


def place_actor(box: Polygon, footprints: Sequence[tuple[str, Polygon]]) -> Optional[str]:
    """Segment id with maximal footprint overlap; None when nothing overlaps.

    Ties break toward the smallest segment id.
    """
    if not footprints:
        raise NoInfrastructureError("no lane or connector segments to place actors on")
    best_id: Optional[str] = None
    best_area = 0.0
    for seg_id, poly in sorted(footprints, key=lambda pair: pair[0]):
        area = geometry.overlap_area(box, poly)
        if area > best_area + 1e-12:
            best_area = area
            best_id = seg_id
    return best_id


def build_scene(snapshot: WorldSnapshot, config: Optional[BuildConfig] = None) -> SceneGraph:
    graph, _ = build_scene_with_report(snapshot, config)
    return graph


def build_scene_with_report(
    snapshot: WorldSnapshot, config: Optional[BuildConfig] = None
) -> tuple[SceneGraph, BuildReport]:
    config = config or BuildConfig()
    report = BuildReport()
    connector_geometry = _resolve_connector_geometry(snapshot)
    filtered = filter_radius(snapshot, config.radius)

    builder = SceneGraphBuilder(filtered.scene_id, filtered.timestamp_us)
    chains: dict[str, list[Segment]] = {}
    for road in filtered.roads:
        chains.update(segment_lanes(road, config.max_segment, config.lane_width))

    footprints: list[tuple[str, Polygon]] = []
    for chain in chains.values():
        for seg in chain:
            builder.add_node(
                seg.segment_id,
                NodeKind.LANE,
                {"speed_limit": seg.speed_limit, "length": seg.length},
            )
            footprints.append((seg.segment_id, geometry.footprint(seg.polyline, seg.width)))
        for prev, nxt in zip(chain, chain[1:]):
            builder.add_edge(prev.segment_id, EdgeKind.NEXT, nxt.segment_id)
    report.segment_count = len(footprints)

    for road in filtered.roads:
        for adj in road.adjacency:
            left_chain = chains[adj.left_lane]
            right_chain = chains[adj.right_lane]
            for left_seg, right_seg in zip(left_chain, right_chain):
                marker_id = f"{adj.left_lane}|{adj.right_lane}#{left_seg.index:03d}"
                builder.add_node(marker_id, NodeKind.LANE_MARKER, {"boundary_type": adj.boundary_type})
                builder.add_edge(
                    left_seg.segment_id, EdgeKind.CONNECTED_TO, marker_id, {"side": "right"}
                )
                builder.add_edge(
                    right_seg.segment_id, EdgeKind.CONNECTED_TO, marker_id, {"side": "left"}
                )

    # Connector endpoints may describe the same chain hop twice (for example
    # consecutive ring pieces naming each other), so dedupe the wiring.
    wired: set[tuple[str, str]] = set()

    def wire(src: str, dst: str) -> None:
        if (src, dst) not in wired:
            wired.add((src, dst))
            builder.add_edge(src, EdgeKind.NEXT, dst)

    for src, dst in filtered.successors:
        wire(chains[src][-1].segment_id, chains[dst][0].segment_id)

    retained_connectors = {conn.connector_id for conn in filtered.connectors}
    for conn in filtered.connectors:
        polyline = connector_geometry[conn.connector_id]
        length = conn.length if conn.length is not None else geometry.arclength(polyline)
        builder.add_node(
            conn.connector_id, NodeKind.CONNECTOR, {"turn_type": conn.turn_type, "length": length}
        )
        width = conn.width if conn.width is not None else config.lane_width
        footprints.append((conn.connector_id, geometry.footprint(polyline, width)))
    report.connector_count = len(filtered.connectors)
    for conn in filtered.connectors:
        if conn.source in chains:
            wire(chains[conn.source][-1].segment_id, conn.connector_id)
        elif conn.source in retained_connectors:
            wire(conn.source, conn.connector_id)
        if conn.target in chains:
            wire(conn.connector_id, chains[conn.target][0].segment_id)
        elif conn.target in retained_connectors:
            wire(conn.connector_id, conn.target)

    for crosswalk in filtered.crosswalks:
        polygon = Polygon(crosswalk.polygon)
        touched = [seg_id for seg_id, poly in footprints if polygon.intersects(poly)]
        if not touched:
            report.dropped_crosswalks.append(crosswalk.crosswalk_id)
            continue
        builder.add_node(crosswalk.crosswalk_id, NodeKind.CROSSWALK, {})
        for seg_id in sorted(touched):
            builder.add_edge(crosswalk.crosswalk_id, EdgeKind.ON, seg_id)

    if not footprints:
        raise NoInfrastructureError("snapshot has no lane or connector segments in range")

    ego = filtered.ego
    ego_box = geometry.oriented_box(ego.x, ego.y, ego.heading, ego.length, ego.width)
    root_segment = place_actor(ego_box, footprints)
    if root_segment is None:
        raise NoEgoPlacementError("ego bounding box overlaps no lane or connector segment")
    builder.add_node(
        "ego", NodeKind.EGO, {"velocity": ego.speed, "dimensions": (ego.length, ego.width)}
    )
    builder.add_edge("ego", EdgeKind.ON, root_segment)

    for actor in filtered.actors:
        target = place_actor(actor.box(), footprints)
        if target is None:
            report.dropped_actors.append((actor.actor_id, actor.object_type, "no segment overlap"))
            continue
        distance_pair = geometry.to_ego_frame(ego.x, ego.y, ego.heading, actor.x, actor.y)
        builder.add_node(
            actor.actor_id,
            NodeKind.OBJECT,
            {
                "object_type": actor.object_type,
                "distance": distance_pair,
                "velocity": actor.speed,
                "dimensions": (actor.length, actor.width),
            },
        )
        builder.add_edge(actor.actor_id, EdgeKind.ON, target)

    return builder.build(), report
