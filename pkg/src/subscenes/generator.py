"""Deterministic synthetic scenario generator with a ground-truth manifest.

Each template lays out a small world snapshot (straight road, T or 4-way
intersection, roundabout, crosswalk, parking lot) in a canonical frame,
plants the ego and actors at positions whose resulting sub-scene
signature is known by construction, applies a random rigid motion, and
runs the real builder.  The manifest records the intended signature per
scene so corpus-level counts can be checked end to end.

Scene randomness comes from a per-index RNG stream seeded with
``f"{seed}:{index}"``, so generation is reproducible and order-free.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

from .builder import (
    ActorState,
    AdjacencySpec,
    BuildConfig,
    ConnectorSpec,
    CrosswalkSpec,
    EgoState,
    LaneSpec,
    RoadSpec,
    WorldSnapshot,
    build_scene_with_report,
)
from .catalog import SubsceneSignature
from .corpus import scene_to_json
from .graph import SceneGraph

TEMPLATES = (
    "straight",
    "t_intersection",
    "four_way",
    "roundabout",
    "crosswalk",
    "parking_lot",
)

DEFAULT_WEIGHTS = {
    "straight": 0.35,
    "t_intersection": 0.15,
    "four_way": 0.15,
    "roundabout": 0.10,
    "crosswalk": 0.15,
    "parking_lot": 0.10,
}

SPEED_LIMITS = (8.33, 13.9, 16.7)

VEHICLE_DIMS = (4.5, 2.0)
CONE_DIMS = (0.5, 0.5)
PEDESTRIAN_DIMS = (0.6, 0.6)


class InvalidSpecError(Exception):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int = 0
    count: int = 100
    weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    background_actors: float = 1.5  # mean extra neutral actors per scene
    ego_speed: tuple[float, float] = (0.5, 15.0)
    actor_speed: tuple[float, float] = (0.0, 15.0)

    def __post_init__(self):
        if self.count < 0:
            raise InvalidSpecError(f"count must be >= 0, got {self.count}")
        if not self.weights:
            raise InvalidSpecError("weights must not be empty")
        for name, weight in self.weights.items():
            if name not in TEMPLATES:
                raise InvalidSpecError(f"unknown template {name!r}")
            if weight < 0:
                raise InvalidSpecError(f"weight for {name} must be >= 0, got {weight}")
        if sum(self.weights.values()) <= 0:
            raise InvalidSpecError("weights must sum to > 0")
        if self.background_actors < 0:
            raise InvalidSpecError("background_actors must be >= 0")

    @staticmethod
    def from_dict(data: dict) -> "GeneratorSpec":
        try:
            kwargs = {}
            if "seed" in data:
                kwargs["seed"] = int(data["seed"])
            if "count" in data:
                kwargs["count"] = int(data["count"])
            if "weights" in data:
                kwargs["weights"] = {str(k): float(v) for k, v in data["weights"].items()}
            if "background_actors" in data:
                kwargs["background_actors"] = float(data["background_actors"])
            for key in ("ego_speed", "actor_speed"):
                if key in data:
                    lo, hi = data[key]
                    kwargs[key] = (float(lo), float(hi))
            return GeneratorSpec(**kwargs)
        except (TypeError, ValueError, KeyError) as exc:
            raise InvalidSpecError(f"bad generator spec: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "count": self.count,
            "weights": dict(sorted(self.weights.items())),
            "background_actors": self.background_actors,
            "ego_speed": list(self.ego_speed),
            "actor_speed": list(self.actor_speed),
        }


@dataclass
class GeneratedScene:
    index: int
    template: str
    variant: str
    snapshot: WorldSnapshot
    graph: SceneGraph
    planted: SubsceneSignature


# --- rigid motion -------------------------------------------------------------


class _Frame:
    """Rigid motion applied to a whole canonical layout."""

    def __init__(self, angle: float, dx: float, dy: float):
        self.c = math.cos(angle)
        self.s = math.sin(angle)
        self.dx = dx
        self.dy = dy
        self.angle = angle

    def pt(self, x: float, y: float) -> tuple[float, float]:
        return (self.c * x - self.s * y + self.dx, self.s * x + self.c * y + self.dy)

    def pts(self, points: Sequence[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
        return tuple(self.pt(x, y) for x, y in points)

    def heading(self, heading: float) -> float:
        return heading + self.angle


# --- canonical layout scratchpad ----------------------------------------------


@dataclass
class _Layout:
    """Canonical-frame staging area for one template instance."""

    roads: list[RoadSpec] = field(default_factory=list)
    connectors: list[ConnectorSpec] = field(default_factory=list)
    crosswalks: list[CrosswalkSpec] = field(default_factory=list)
    successors: list[tuple[str, str]] = field(default_factory=list)
    actors: list[ActorState] = field(default_factory=list)
    ego: Optional[EgoState] = None
    planted: list[str] = field(default_factory=list)

    def straight_lane(
        self, lane_id: str, start: tuple[float, float], end: tuple[float, float], speed_limit: float
    ) -> LaneSpec:
        return LaneSpec(lane_id=lane_id, centerline=(start, end), speed_limit=speed_limit)

    def add_actor(
        self,
        actor_id: str,
        object_type: str,
        x: float,
        y: float,
        heading: float,
        speed: float,
        dims: tuple[float, float],
    ) -> None:
        self.actors.append(
            ActorState(
                actor_id=actor_id,
                object_type=object_type,
                x=x,
                y=y,
                heading=heading,
                speed=speed,
                length=dims[0],
                width=dims[1],
            )
        )

    def to_snapshot(self, scene_id: str, timestamp_us: int, frame: _Frame) -> WorldSnapshot:
        assert self.ego is not None
        roads = tuple(
            RoadSpec(
                road_id=road.road_id,
                lanes=tuple(
                    LaneSpec(
                        lane_id=lane.lane_id,
                        centerline=frame.pts(lane.centerline),
                        speed_limit=lane.speed_limit,
                        width=lane.width,
                    )
                    for lane in road.lanes
                ),
                adjacency=road.adjacency,
            )
            for road in self.roads
        )
        connectors = tuple(
            ConnectorSpec(
                connector_id=conn.connector_id,
                source=conn.source,
                target=conn.target,
                turn_type=conn.turn_type,
                centerline=frame.pts(conn.centerline) if conn.centerline else None,
                length=conn.length,
                width=conn.width,
            )
            for conn in self.connectors
        )
        crosswalks = tuple(
            CrosswalkSpec(crosswalk_id=cw.crosswalk_id, polygon=frame.pts(cw.polygon))
            for cw in self.crosswalks
        )
        ego_xy = frame.pt(self.ego.x, self.ego.y)
        ego = EgoState(
            x=ego_xy[0],
            y=ego_xy[1],
            heading=frame.heading(self.ego.heading),
            speed=self.ego.speed,
            length=self.ego.length,
            width=self.ego.width,
        )
        actors = tuple(
            ActorState(
                actor_id=a.actor_id,
                object_type=a.object_type,
                x=frame.pt(a.x, a.y)[0],
                y=frame.pt(a.x, a.y)[1],
                heading=frame.heading(a.heading),
                speed=a.speed,
                length=a.length,
                width=a.width,
            )
            for a in self.actors
        )
        return WorldSnapshot(
            scene_id=scene_id,
            timestamp_us=timestamp_us,
            ego=ego,
            actors=actors,
            roads=roads,
            connectors=connectors,
            crosswalks=crosswalks,
            successors=tuple(self.successors),
        )


def _poisson(rng: random.Random, mean: float) -> int:
    if mean <= 0:
        return 0
    threshold = math.exp(-mean)
    count, product = 0, rng.random()
    while product > threshold:
        count += 1
        product *= rng.random()
    return count


def _segment_center(length: float, parts: int, index: int) -> float:
    """Arclength of the middle of segment ``index`` on a lane of ``length``."""
    return length * (index + 0.5) / parts


# --- templates ------------------------------------------------------------------


def _template_straight(rng: random.Random, spec: GeneratorSpec) -> tuple[_Layout, str]:
    layout = _Layout()
    n_lanes = rng.choice((1, 2, 3))
    length = rng.uniform(25.0, 60.0)
    parts = math.ceil(length / 10.0)
    speed_limit = rng.choice(SPEED_LIMITS)
    lanes = []
    for i in range(n_lanes):
        y = -3.5 * i
        lanes.append(layout.straight_lane(f"L{i}", (0.0, y), (length, y), speed_limit))
    adjacency = tuple(
        AdjacencySpec(left_lane=f"L{i}", right_lane=f"L{i + 1}", boundary_type="dashed")
        for i in range(n_lanes - 1)
    )
    layout.roads.append(RoadSpec(road_id="R0", lanes=tuple(lanes), adjacency=adjacency))

    ego_idx = parts // 2
    ego_s = _segment_center(length, parts, ego_idx)
    layout.ego = EgoState(
        x=ego_s, y=0.0, heading=0.0, speed=rng.uniform(*spec.ego_speed),
        length=VEHICLE_DIMS[0], width=VEHICLE_DIMS[1],
    )
    layout.planted.append("straight_road")

    room_ahead = parts - 1 - ego_idx
    room_behind = ego_idx
    variant = rng.choice(("plain", "lead", "rear", "lead_rear", "same_segment"))
    if variant in ("lead", "lead_rear") and room_ahead >= 1:
        d = rng.randint(1, min(3, room_ahead))
        s = _segment_center(length, parts, ego_idx + d)
        layout.add_actor("lead", "vehicle", s, 0.0, 0.0, rng.uniform(*spec.actor_speed), VEHICLE_DIMS)
        layout.planted.append("vehicle_ahead")
    if variant in ("rear", "lead_rear") and room_behind >= 1:
        d = rng.randint(1, min(3, room_behind))
        s = _segment_center(length, parts, ego_idx - d)
        layout.add_actor("rear", "vehicle", s, 0.0, 0.0, rng.uniform(*spec.actor_speed), VEHICLE_DIMS)
        layout.planted.append("vehicle_behind")
    if variant == "same_segment":
        # A vehicle sharing the root segment counts as both ahead and behind.
        layout.add_actor(
            "beside", "vehicle", ego_s + 0.1, 0.0, 0.0, rng.uniform(*spec.actor_speed), VEHICLE_DIMS
        )
        layout.planted.extend(["vehicle_ahead", "vehicle_behind"])

    # Neutral background: cones and pedestrians never affect the signature.
    for i in range(_poisson(rng, spec.background_actors)):
        if n_lanes > 1 and rng.random() < 0.6:
            lane_i = rng.randint(1, n_lanes - 1)
            s = _segment_center(length, parts, rng.randrange(parts))
            layout.add_actor(f"bg{i}", "traffic_cone", s, -3.5 * lane_i, 0.0, 0.0, CONE_DIMS)
        else:
            layout.add_actor(
                f"bg{i}", "pedestrian", rng.uniform(0, length), 8.0 + rng.uniform(0, 5), 0.0,
                rng.uniform(0, 2.0), PEDESTRIAN_DIMS,
            )
    return layout, variant


_ARM_ANGLES = {"E": 0.0, "N": math.pi / 2, "W": math.pi, "S": 3 * math.pi / 2}
_TURN_NAMES = {1: "left", 2: "straight", 3: "right"}


def _template_junction(
    rng: random.Random, spec: GeneratorSpec, arms: Sequence[str]
) -> tuple[_Layout, str]:
    layout = _Layout()
    junction = 8.0
    speed_limit = rng.choice(SPEED_LIMITS)
    lane_half = 1.75

    arm_length: dict[str, float] = {}
    arm_parts: dict[str, int] = {}
    variant = rng.choice(
        ("approach_near", "approach_near", "approach_far", "approach_short",
         "on_connector", "approach_lead", "on_behind")
    )
    ego_arm = rng.choice(list(arms))

    geometry_points: dict[str, dict[str, tuple[float, float]]] = {}
    for arm in arms:
        theta = _ARM_ANGLES[arm]
        u = (math.cos(theta), math.sin(theta))
        side = (-u[1], u[0])
        if arm == ego_arm and variant == "approach_short":
            length = rng.uniform(7.0, 10.0)
        elif variant == "approach_far" and arm == ego_arm:
            length = rng.uniform(31.0, 36.0)
        else:
            length = rng.uniform(20.0, 30.0)
        arm_length[arm] = length
        arm_parts[arm] = math.ceil(length / 10.0)
        far = junction + length
        in_start = (far * u[0] + lane_half * side[0], far * u[1] + lane_half * side[1])
        in_end = (junction * u[0] + lane_half * side[0], junction * u[1] + lane_half * side[1])
        out_start = (junction * u[0] - lane_half * side[0], junction * u[1] - lane_half * side[1])
        out_end = (far * u[0] - lane_half * side[0], far * u[1] - lane_half * side[1])
        layout.roads.append(
            RoadSpec(
                road_id=f"{arm}_in",
                lanes=(layout.straight_lane(f"{arm}_in", in_start, in_end, speed_limit),),
            )
        )
        layout.roads.append(
            RoadSpec(
                road_id=f"{arm}_out",
                lanes=(layout.straight_lane(f"{arm}_out", out_start, out_end, speed_limit),),
            )
        )
        geometry_points[arm] = {"in_end": in_end, "out_start": out_start}

    order = "ENWS"
    for src in arms:
        for dst in arms:
            if src == dst:
                continue
            relative = (order.index(dst) - order.index(src)) % 4
            turn = _TURN_NAMES.get(relative, "straight")
            layout.connectors.append(
                ConnectorSpec(
                    connector_id=f"J_{src}{dst}",
                    source=f"{src}_in",
                    target=f"{dst}_out",
                    turn_type=turn,
                    centerline=(geometry_points[src]["in_end"], geometry_points[dst]["out_start"]),
                )
            )

    def along_connector(src: str, dst: str, t: float) -> tuple[tuple[float, float], float]:
        a = geometry_points[src]["in_end"]
        b = geometry_points[dst]["out_start"]
        point = (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)
        return point, math.atan2(b[1] - a[1], b[0] - a[0])

    def lane_point(arm: str, index: int, incoming: bool) -> tuple[tuple[float, float], float]:
        road = f"{arm}_in" if incoming else f"{arm}_out"
        lane = next(
            lane for r in layout.roads if r.road_id == road for lane in r.lanes
        )
        s = _segment_center(arm_length[arm], arm_parts[arm], index)
        (x0, y0), (x1, y1) = lane.centerline
        t = s / arm_length[arm]
        point = (x0 + (x1 - x0) * t, y0 + (y1 - y0) * t)
        return point, math.atan2(y1 - y0, x1 - x0)

    parts = arm_parts[ego_arm]
    other_arms = [a for a in arms if a != ego_arm]
    exit_arm = rng.choice(other_arms)
    ego_speed = rng.uniform(*spec.ego_speed)

    if variant == "approach_short":
        # Single-segment approach lane: no Lane-Lane edge at the root.
        point, heading = lane_point(ego_arm, parts - 1, incoming=True)
        layout.ego = EgoState(point[0], point[1], heading, ego_speed, *VEHICLE_DIMS)
        layout.planted.append("approach_intersection")
    elif variant == "approach_far":
        index = rng.randint(0, parts - 4) if parts >= 4 else 0
        point, heading = lane_point(ego_arm, index, incoming=True)
        layout.ego = EgoState(point[0], point[1], heading, ego_speed, *VEHICLE_DIMS)
        layout.planted.append("straight_road")
        if parts - index <= 2:  # lane too short to stay out of range
            layout.planted.append("approach_intersection")
    elif variant in ("approach_near", "approach_lead"):
        hops = rng.choice((1, 2)) if parts >= 2 else 1
        index = parts - hops
        point, heading = lane_point(ego_arm, index, incoming=True)
        layout.ego = EgoState(point[0], point[1], heading, ego_speed, *VEHICLE_DIMS)
        layout.planted.append("approach_intersection")
        if parts >= 2:
            layout.planted.append("straight_road")
        if variant == "approach_lead":
            point, heading = along_connector(ego_arm, exit_arm, 0.3)
            layout.add_actor(
                "lead", "vehicle", point[0], point[1], heading,
                rng.uniform(*spec.actor_speed), VEHICLE_DIMS,
            )
            layout.planted.append("vehicle_ahead")
    else:  # on_connector / on_behind
        point, heading = along_connector(ego_arm, exit_arm, 0.3)
        layout.ego = EgoState(point[0], point[1], heading, ego_speed, *VEHICLE_DIMS)
        layout.planted.append("on_intersection")
        if variant == "on_behind":
            point, heading = lane_point(ego_arm, parts - 1, incoming=True)
            layout.add_actor(
                "tail", "vehicle", point[0], point[1], heading,
                rng.uniform(*spec.actor_speed), VEHICLE_DIMS,
            )
            layout.planted.append("vehicle_behind")

    for i in range(_poisson(rng, spec.background_actors)):
        arm = rng.choice(list(arms))
        if rng.random() < 0.5:
            point, heading = lane_point(arm, rng.randrange(arm_parts[arm]), incoming=False)
            layout.add_actor(f"bg{i}", "traffic_cone", point[0], point[1], heading, 0.0, CONE_DIMS)
        else:
            layout.add_actor(
                f"bg{i}", "pedestrian", rng.uniform(12, 20), rng.uniform(12, 20), 0.0,
                rng.uniform(0, 2.0), PEDESTRIAN_DIMS,
            )
    return layout, variant


def _template_roundabout(rng: random.Random, spec: GeneratorSpec) -> tuple[_Layout, str]:
    layout = _Layout()
    radius = 12.0
    gap = 6.0
    n_arms = rng.choice((3, 4))
    segments = 2 * n_arms  # ring arcs; arms dock at every other boundary
    speed_limit = rng.choice(SPEED_LIMITS)

    def ring_point(angle: float) -> tuple[float, float]:
        return (radius * math.cos(angle), radius * math.sin(angle))

    boundary = [2 * math.pi * i / segments for i in range(segments)]
    arcs: list[tuple[tuple[float, float], ...]] = []
    for i in range(segments):
        start, end = boundary[i], boundary[i] + 2 * math.pi / segments
        arcs.append(tuple(
            ring_point(start + (end - start) * t / 8) for t in range(9)
        ))
    for i in range(segments):
        layout.connectors.append(
            ConnectorSpec(
                connector_id=f"ring_{i}",
                source=f"ring_{(i - 1) % segments}",
                target=f"ring_{(i + 1) % segments}",
                turn_type="roundabout",
                centerline=arcs[i],
            )
        )

    entry_length = rng.uniform(12.0, 24.0)
    arm_info: dict[int, dict] = {}
    for a in range(n_arms):
        enter_b = 2 * a
        exit_b = 2 * a + 1
        enter_angle = boundary[enter_b]
        exit_angle = boundary[exit_b]
        ev = (math.cos(enter_angle), math.sin(enter_angle))
        xv = (math.cos(exit_angle), math.sin(exit_angle))
        entry_far = ((radius + gap + entry_length) * ev[0], (radius + gap + entry_length) * ev[1])
        entry_near = ((radius + gap) * ev[0], (radius + gap) * ev[1])
        exit_near = ((radius + gap) * xv[0], (radius + gap) * xv[1])
        exit_far = ((radius + gap + entry_length) * xv[0], (radius + gap + entry_length) * xv[1])
        layout.roads.append(
            RoadSpec(
                road_id=f"arm{a}_in",
                lanes=(layout.straight_lane(f"arm{a}_in", entry_far, entry_near, speed_limit),),
            )
        )
        layout.roads.append(
            RoadSpec(
                road_id=f"arm{a}_out",
                lanes=(layout.straight_lane(f"arm{a}_out", exit_near, exit_far, speed_limit),),
            )
        )
        layout.connectors.append(
            ConnectorSpec(
                connector_id=f"rb_in_{a}",
                source=f"arm{a}_in",
                target=f"ring_{enter_b}",
                turn_type="roundabout",
                centerline=(entry_near, ring_point(enter_angle)),
            )
        )
        # The arc ending at this boundary feeds the exit movement.
        layout.connectors.append(
            ConnectorSpec(
                connector_id=f"rb_out_{a}",
                source=f"ring_{(exit_b - 1) % segments}",
                target=f"arm{a}_out",
                turn_type="roundabout",
                centerline=(ring_point(exit_angle), exit_near),
            )
        )
        arm_info[a] = {
            "entry_near": entry_near,
            "entry_far": entry_far,
            "enter_b": enter_b,
            "exit_b": exit_b,
            "exit_near": exit_near,
        }

    parts = math.ceil(entry_length / 10.0)
    variant = rng.choice(("entering", "entering_lead", "on_ring", "leaving"))
    arm = rng.randrange(n_arms)
    info = arm_info[arm]
    ego_speed = rng.uniform(*spec.ego_speed)

    if variant in ("entering", "entering_lead"):
        s = _segment_center(entry_length, parts, parts - 1)
        t = s / entry_length
        fx, fy = info["entry_far"]
        nx, ny = info["entry_near"]
        point = (fx + (nx - fx) * t, fy + (ny - fy) * t)
        heading = math.atan2(ny - fy, nx - fx)
        layout.ego = EgoState(point[0], point[1], heading, ego_speed, *VEHICLE_DIMS)
        layout.planted.extend(["enter_roundabout", "approach_intersection"])
        if parts >= 2:
            layout.planted.append("straight_road")
        if variant == "entering_lead":
            arc = arcs[info["enter_b"]]
            mid = arc[len(arc) // 2]
            tangent = math.atan2(arc[5][1] - arc[3][1], arc[5][0] - arc[3][0])
            layout.add_actor(
                "lead", "vehicle", mid[0], mid[1], tangent,
                rng.uniform(*spec.actor_speed), VEHICLE_DIMS,
            )
            layout.planted.append("vehicle_ahead")  # ring arc is two hops out
    elif variant == "on_ring":
        ring_i = rng.randrange(segments)
        arc = arcs[ring_i]
        mid = arc[len(arc) // 2]
        tangent = math.atan2(arc[5][1] - arc[3][1], arc[5][0] - arc[3][0])
        layout.ego = EgoState(mid[0], mid[1], tangent, ego_speed, *VEHICLE_DIMS)
        layout.planted.extend(["on_intersection", "on_roundabout"])
    else:  # leaving
        start = ring_point(boundary[info["exit_b"]])
        end = info["exit_near"]
        point = (start[0] + (end[0] - start[0]) * 0.5, start[1] + (end[1] - start[1]) * 0.5)
        heading = math.atan2(end[1] - start[1], end[0] - start[0])
        layout.ego = EgoState(point[0], point[1], heading, ego_speed, *VEHICLE_DIMS)
        layout.planted.extend(["on_intersection", "leave_roundabout"])

    for i in range(_poisson(rng, spec.background_actors)):
        layout.add_actor(
            f"bg{i}", "pedestrian", rng.uniform(-4, 4), rng.uniform(-4, 4), 0.0,
            rng.uniform(0, 2.0), PEDESTRIAN_DIMS,
        )  # center island: zero overlap, dropped by placement
    return layout, variant


def _template_crosswalk(rng: random.Random, spec: GeneratorSpec) -> tuple[_Layout, str]:
    layout = _Layout()
    n_lanes = rng.choice((1, 2))
    length = rng.uniform(30.0, 50.0)
    parts = math.ceil(length / 10.0)
    speed_limit = rng.choice(SPEED_LIMITS)
    lanes = []
    for i in range(n_lanes):
        y = -3.5 * i
        lanes.append(layout.straight_lane(f"L{i}", (0.0, y), (length, y), speed_limit))
    adjacency = tuple(
        AdjacencySpec(left_lane=f"L{i}", right_lane=f"L{i + 1}", boundary_type="dashed")
        for i in range(n_lanes - 1)
    )
    layout.roads.append(RoadSpec(road_id="R0", lanes=tuple(lanes), adjacency=adjacency))

    hop = rng.choice((0, 1, 2, 3))
    cross_idx = rng.randint(hop, parts - 1)
    ego_idx = cross_idx - hop
    cross_s = _segment_center(length, parts, cross_idx)
    y_top = 1.75 + 1.0
    y_bottom = -3.5 * (n_lanes - 1) - 1.75 - 1.0
    layout.crosswalks.append(
        CrosswalkSpec(
            crosswalk_id="X0",
            polygon=(
                (cross_s - 1.5, y_top),
                (cross_s + 1.5, y_top),
                (cross_s + 1.5, y_bottom),
                (cross_s - 1.5, y_bottom),
            ),
        )
    )
    ego_s = _segment_center(length, parts, ego_idx)
    layout.ego = EgoState(ego_s, 0.0, 0.0, rng.uniform(*spec.ego_speed), *VEHICLE_DIMS)
    layout.planted.append("straight_road")
    if hop <= 2:
        layout.planted.append("approach_crossing")

    variant = f"hop{hop}"
    if rng.random() < 0.4 and hop >= 1:
        d = rng.randint(1, min(3, parts - 1 - ego_idx))
        s = _segment_center(length, parts, ego_idx + d)
        layout.add_actor("lead", "vehicle", s, 0.0, 0.0, rng.uniform(*spec.actor_speed), VEHICLE_DIMS)
        layout.planted.append("vehicle_ahead")
        variant += "_lead"

    if rng.random() < 0.7:
        lane_i = rng.randrange(n_lanes)
        layout.add_actor(
            "walker", "pedestrian", cross_s, -3.5 * lane_i + rng.uniform(-1, 1), math.pi / 2,
            rng.uniform(0, 2.0), PEDESTRIAN_DIMS,
        )
    return layout, variant


def _template_parking_lot(rng: random.Random, spec: GeneratorSpec) -> tuple[_Layout, str]:
    layout = _Layout()
    rows = rng.choice((1, 2, 3))
    length = rng.uniform(8.0, 10.0)
    for r in range(rows):
        y = -5.0 * r
        layout.roads.append(
            RoadSpec(
                road_id=f"row{r}",
                lanes=(layout.straight_lane(f"row{r}", (0.0, y), (length, y), 2.78),),
            )
        )
    layout.ego = EgoState(length / 2.0, 0.0, 0.0, rng.uniform(0.0, 3.0), *VEHICLE_DIMS)
    # No chain, no connectors, no crosswalks: nothing can be matched.

    for r in range(1, rows):
        if rng.random() < 0.7:
            layout.add_actor(
                f"parked{r}", "vehicle", length / 2.0, -5.0 * r, 0.0, 0.0, VEHICLE_DIMS
            )
    for i in range(_poisson(rng, spec.background_actors)):
        layout.add_actor(
            f"bg{i}", "generic_object", rng.uniform(0, length), 4.0 + rng.uniform(0, 2), 0.0,
            0.0, CONE_DIMS,
        )  # off the rows: dropped by placement
    return layout, f"rows{rows}"


def _build_layout(template: str, rng: random.Random, spec: GeneratorSpec) -> tuple[_Layout, str]:
    if template == "straight":
        return _template_straight(rng, spec)
    if template == "t_intersection":
        arms = sorted(rng.sample(("E", "N", "W", "S"), 3))
        return _template_junction(rng, spec, arms)
    if template == "four_way":
        return _template_junction(rng, spec, ("E", "N", "W", "S"))
    if template == "roundabout":
        return _template_roundabout(rng, spec)
    if template == "crosswalk":
        return _template_crosswalk(rng, spec)
    if template == "parking_lot":
        return _template_parking_lot(rng, spec)
    raise InvalidSpecError(f"unknown template {template!r}")


# --- corpus assembly ---------------------------------------------------------


def template_allocation(spec: GeneratorSpec) -> list[str]:
    """Template per scene index: largest-remainder apportionment, shuffled."""
    total_weight = sum(spec.weights.values())
    names = [name for name in TEMPLATES if spec.weights.get(name, 0.0) > 0]
    quotas = {name: spec.count * spec.weights[name] / total_weight for name in names}
    counts = {name: math.floor(quotas[name]) for name in names}
    remainder = spec.count - sum(counts.values())
    by_fraction = sorted(names, key=lambda n: (-(quotas[n] - counts[n]), n))
    for name in by_fraction[:remainder]:
        counts[name] += 1
    sequence: list[str] = []
    for name in names:
        sequence.extend([name] * counts[name])
    random.Random(f"{spec.seed}:allocation").shuffle(sequence)
    return sequence


def generate_scene(spec: GeneratorSpec, index: int, template: str) -> GeneratedScene:
    rng = random.Random(f"{spec.seed}:{index}")
    layout, variant = _build_layout(template, rng, spec)
    frame = _Frame(
        angle=rng.uniform(0.0, 2 * math.pi),
        dx=rng.uniform(-1000.0, 1000.0),
        dy=rng.uniform(-1000.0, 1000.0),
    )
    snapshot = layout.to_snapshot(f"scn-{index:06d}", index * 500_000, frame)
    graph, _ = build_scene_with_report(snapshot, BuildConfig())
    return GeneratedScene(
        index=index,
        template=template,
        variant=variant,
        snapshot=snapshot,
        graph=graph,
        planted=SubsceneSignature(tuple(layout.planted)),
    )


def generate(spec: GeneratorSpec) -> Iterator[GeneratedScene]:
    allocation = template_allocation(spec)
    for index, template in enumerate(allocation):
        yield generate_scene(spec, index, template)


def _scene_payload(args: tuple) -> tuple[int, str, dict]:
    spec_dict, index, template = args
    scene = generate_scene(GeneratorSpec.from_dict(spec_dict), index, template)
    entry = {
        "scene_id": scene.graph.scene_id,
        "template": scene.template,
        "variant": scene.variant,
        "signature": scene.planted.key,
    }
    return index, scene_to_json(scene.graph), entry


def write_corpus(
    spec: GeneratorSpec,
    corpus_path: Path,
    manifest_path: Path,
    jobs: int = 1,
) -> dict:
    """Generate, build, and persist a corpus plus its ground-truth manifest."""
    allocation = template_allocation(spec)
    tasks = [(spec.to_dict(), index, template) for index, template in enumerate(allocation)]
    entries: list[dict] = []
    with open(corpus_path, "w", encoding="utf-8") as handle:
        if jobs > 1 and len(tasks) > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for _, line, entry in pool.map(_scene_payload, tasks, chunksize=64):
                    handle.write(line + "\n")
                    entries.append(entry)
        else:
            for task in tasks:
                _, line, entry = _scene_payload(task)
                handle.write(line + "\n")
                entries.append(entry)

    signature_counts: dict[str, int] = {}
    template_counts: dict[str, int] = {}
    for entry in entries:
        signature_counts[entry["signature"]] = signature_counts.get(entry["signature"], 0) + 1
        template_counts[entry["template"]] = template_counts.get(entry["template"], 0) + 1
    manifest = {
        "spec": spec.to_dict(),
        "scenes": entries,
        "signature_counts": dict(sorted(signature_counts.items())),
        "template_counts": dict(sorted(template_counts.items())),
    }
    Path(manifest_path).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest
