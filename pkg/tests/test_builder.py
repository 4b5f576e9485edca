"""Snapshot-to-graph construction rules, checked against geometry oracles."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from subscenes import geometry
from subscenes.builder import (
    ActorState,
    BuildConfig,
    ConnectorSpec,
    CrosswalkSpec,
    DegenerateLaneError,
    EgoState,
    InvalidSnapshotError,
    LaneSpec,
    NoEgoPlacementError,
    NoInfrastructureError,
    RoadSpec,
    WorldSnapshot,
    build_scene,
    build_scene_with_report,
    filter_radius,
    place_actor,
    segment_id,
    segment_lanes,
)
from subscenes.graph import EdgeKind, NodeKind
from oracles import convex_overlap_area


def _lane(lane_id, start, end, speed=13.9):
    return LaneSpec(lane_id=lane_id, centerline=(start, end), speed_limit=speed)


def _ego(x, y, heading=0.0, speed=10.0):
    return EgoState(x=x, y=y, heading=heading, speed=speed, length=4.5, width=2.0)


def _snapshot(roads, ego, **kwargs):
    return WorldSnapshot(scene_id="t", timestamp_us=0, ego=ego, roads=tuple(roads), **kwargs)


def test_filter_radius_boundaries():
    roads = [
        RoadSpec("A", ( _lane("in", (47.4, 0.0), (52.4, 0.0)), )),   # midpoint 49.9
        RoadSpec("B", ( _lane("out", (47.6, 0.0), (52.6, 0.0)), )),  # midpoint 50.1
    ]
    snap = _snapshot(roads, _ego(0, 0))
    kept = filter_radius(snap, 50.0)
    assert [road.road_id for road in kept.roads] == ["A"]


def test_filter_radius_direct_distance_oracle():
    rng = random.Random(4)
    lanes = []
    distances = (10.0, 40.0, 80.0)
    for i, dist in enumerate(distances):
        angle = rng.uniform(0, 2 * math.pi)
        cx, cy = dist * math.cos(angle), dist * math.sin(angle)
        lanes.append(_lane(f"l{i}", (cx - 5, cy), (cx + 5, cy)))
    snap = _snapshot([RoadSpec(f"r{i}", (lane,)) for i, lane in enumerate(lanes)], _ego(0, 0))
    kept = filter_radius(snap, 50.0)
    kept_ids = {lane.lane_id for road in kept.roads for lane in road.lanes}
    expected = {
        f"l{i}"
        for i, dist in enumerate(distances)
        if dist <= 50.0  # midpoint equals the planted center here
    }
    assert kept_ids == expected == {"l0", "l1"}


def test_filter_radius_keeps_ego_and_actors():
    snap = _snapshot(
        [RoadSpec("r", (_lane("l", (0, 0), (10, 0)),))],
        _ego(0, 0),
        actors=(
            ActorState("near", "vehicle", 30, 0, 0, 1, 4.5, 2.0),
            ActorState("far", "vehicle", 60, 0, 0, 1, 4.5, 2.0),
        ),
    )
    kept = filter_radius(snap, 50.0)
    assert [a.actor_id for a in kept.actors] == ["near"]


def test_filter_radius_rejects_nonpositive():
    snap = _snapshot([], _ego(0, 0))
    with pytest.raises(InvalidSnapshotError):
        filter_radius(snap, 0.0)


def test_segment_single_lane_25m():
    road = RoadSpec("r", (_lane("l", (0, 0), (25, 0)),))
    chains = segment_lanes(road, 10.0, 3.5)
    chain = chains["l"]
    assert len(chain) == 3
    for seg in chain:
        assert seg.length == pytest.approx(25 / 3, abs=1e-9)
        assert geometry.arclength(seg.polyline) == pytest.approx(25 / 3, abs=1e-9)


def test_segment_group_count_from_longest():
    road = RoadSpec(
        "r",
        (_lane("a", (0, 0), (25, 0)), _lane("b", (0, -3.5), (18, -3.5))),
    )
    chains = segment_lanes(road, 10.0, 3.5)
    assert len(chains["a"]) == len(chains["b"]) == 3
    assert all(seg.length <= 10.0 for chain in chains.values() for seg in chain)


def test_segment_exact_10m_single():
    road = RoadSpec("r", (_lane("l", (0, 0), (10, 0)),))
    chains = segment_lanes(road, 10.0, 3.5)
    assert len(chains["l"]) == 1
    assert chains["l"][0].length == pytest.approx(10.0)


def test_segment_degenerate_lane():
    road = RoadSpec("r", (LaneSpec("l", ((0, 0), (0, 0)), 13.9),))
    with pytest.raises(DegenerateLaneError):
        segment_lanes(road, 10.0, 3.5)


def test_segment_arclength_conserved_on_curvy_lane():
    rng = random.Random(8)
    points = [(0.0, 0.0)]
    heading = 0.0
    for _ in range(12):
        heading += rng.uniform(-0.4, 0.4)
        step = rng.uniform(2.0, 6.0)
        x, y = points[-1]
        points.append((x + step * math.cos(heading), y + step * math.sin(heading)))
    lane = LaneSpec("curvy", tuple(points), 13.9)
    total = geometry.arclength(lane.polyline())
    chains = segment_lanes(RoadSpec("r", (lane,)), 10.0, 3.5)
    chain = chains["curvy"]
    assert sum(seg.length for seg in chain) == pytest.approx(total, abs=1e-6)
    assert sum(geometry.arclength(seg.polyline) for seg in chain) == pytest.approx(total, abs=1e-6)
    # Endpoints coincide with the original lane's endpoints.
    assert np.allclose(chain[0].polyline[0], lane.polyline()[0])
    assert np.allclose(chain[-1].polyline[-1], lane.polyline()[-1])


def test_place_actor_unique_containment():
    road = RoadSpec("r", (_lane("l", (0, 0), (30, 0)),))
    chains = segment_lanes(road, 10.0, 3.5)
    footprints = [
        (seg.segment_id, geometry.footprint(seg.polyline, seg.width)) for seg in chains["l"]
    ]
    box = geometry.oriented_box(25.0, 0.0, 0.0, 4.0, 2.0)
    assert place_actor(box, footprints) == segment_id("l", 2)


def test_place_actor_straddle_picks_larger_share():
    # Segment boundary at x=10; box center placed for a 60/40 split.
    road = RoadSpec("r", (_lane("l", (0, 0), (20, 0)),))
    chains = segment_lanes(road, 10.0, 3.5)
    footprints = [
        (seg.segment_id, geometry.footprint(seg.polyline, seg.width)) for seg in chains["l"]
    ]
    box = geometry.oriented_box(9.6, 0.0, 0.0, 4.0, 2.0)  # spans [7.6, 11.6]
    seg0 = [(0.0, -1.75), (10.0, -1.75), (10.0, 1.75), (0.0, 1.75)]
    seg1 = [(10.0, -1.75), (20.0, -1.75), (20.0, 1.75), (10.0, 1.75)]
    corners = [(7.6, -1.0), (11.6, -1.0), (11.6, 1.0), (7.6, 1.0)]
    share0 = convex_overlap_area(corners, seg0)
    share1 = convex_overlap_area(corners, seg1)
    assert share0 == pytest.approx(0.6 * 8.0, abs=1e-9)
    assert share1 == pytest.approx(0.4 * 8.0, abs=1e-9)
    assert place_actor(box, footprints) == segment_id("l", 0)


def test_place_actor_overlap_matches_convex_oracle():
    rng = random.Random(21)
    road = RoadSpec("r", (_lane("l", (0, 0), (30, 0)),))
    chains = segment_lanes(road, 10.0, 3.5)
    footprints = [
        (seg.segment_id, geometry.footprint(seg.polyline, seg.width)) for seg in chains["l"]
    ]
    rects = {
        segment_id("l", i): [(10.0 * i, -1.75), (10.0 * (i + 1), -1.75),
                             (10.0 * (i + 1), 1.75), (10.0 * i, 1.75)]
        for i in range(3)
    }
    for _ in range(60):
        cx, cy = rng.uniform(-3, 33), rng.uniform(-3, 3)
        heading = rng.uniform(0, math.pi)
        box = geometry.oriented_box(cx, cy, heading, 4.0, 2.0)
        corners = list(box.exterior.coords)[:-1]
        best_oracle, best_area = None, 0.0
        for seg_id in sorted(rects):
            area = convex_overlap_area(corners, rects[seg_id])
            if area > best_area + 1e-12:
                best_oracle, best_area = seg_id, area
        assert place_actor(box, footprints) == best_oracle


def test_place_actor_ties_break_to_smallest_id():
    road = RoadSpec("r", (_lane("l", (0, 0), (20, 0)),))
    chains = segment_lanes(road, 10.0, 3.5)
    footprints = [
        (seg.segment_id, geometry.footprint(seg.polyline, seg.width)) for seg in chains["l"]
    ]
    box = geometry.oriented_box(10.0, 0.0, 0.0, 4.0, 2.0)  # exact 50/50 straddle
    assert place_actor(box, footprints) == segment_id("l", 0)


def test_place_actor_no_segments():
    with pytest.raises(NoInfrastructureError):
        place_actor(geometry.oriented_box(0, 0, 0, 4, 2), [])


def _minimal_snapshot(**kwargs):
    return _snapshot(
        [RoadSpec("r", (_lane("l", (0, 0), (10, 0)),))], _ego(5.0, 0.0), **kwargs
    )


def test_build_minimal_scene():
    graph = build_scene(_minimal_snapshot())
    assert graph.nodes_of_kind(NodeKind.LANE) == [segment_id("l", 0)]
    assert graph.nodes_of_kind(NodeKind.EGO) == ["ego"]
    assert graph.root_id == segment_id("l", 0)
    assert len(graph.edges()) == 1  # just the ego's On edge


def test_build_off_road_actor_dropped_and_reported():
    snap = _minimal_snapshot(
        actors=(ActorState("ghost", "vehicle", 5.0, 30.0, 0.0, 1.0, 4.5, 2.0),)
    )
    graph, report = build_scene_with_report(snap)
    assert graph.nodes_of_kind(NodeKind.OBJECT) == []
    assert report.dropped_actors == [("ghost", "vehicle", "no segment overlap")]


def test_build_lead_vehicle_ahead_in_chain_order():
    snap = _snapshot(
        [RoadSpec("r", (_lane("l", (0, 0), (30, 0)),))],
        _ego(5.0, 0.0),
        actors=(ActorState("lead", "vehicle", 25.0, 0.0, 0.0, 8.0, 4.5, 2.0),),
    )
    graph = build_scene(snap)
    assert graph.root_id == segment_id("l", 0)
    on_edges = graph.out_edges("lead", EdgeKind.ON)
    assert [e.target for e in on_edges] == [segment_id("l", 2)]
    # The lead's segment is reachable from the root along Next edges.
    reachable, frontier = set(), {graph.root_id}
    while frontier:
        node = frontier.pop()
        reachable.add(node)
        for edge in graph.out_edges(node, EdgeKind.NEXT):
            if edge.target not in reachable:
                frontier.add(edge.target)
    assert segment_id("l", 2) in reachable


def test_build_ego_frame_distance_signs():
    # Ego heading +y: a world point ahead-left must get positive x and z.
    snap = _snapshot(
        [RoadSpec("r", (_lane("l", (0, -5), (0, 25)),))],
        _ego(0.0, 0.0, heading=math.pi / 2),
        actors=(ActorState("o", "vehicle", -2.0, 10.0, math.pi / 2, 1.0, 4.5, 2.0),),
    )
    graph = build_scene(snap)
    x, z = graph.node("o").attributes["distance"]
    assert x == pytest.approx(10.0)
    assert z == pytest.approx(2.0)


def test_build_no_ego_placement():
    snap = _snapshot([RoadSpec("r", (_lane("l", (0, 0), (10, 0)),))], _ego(0.0, 40.0))
    with pytest.raises(NoEgoPlacementError):
        build_scene(snap)


def test_build_no_infrastructure():
    snap = _snapshot([], _ego(0, 0))
    with pytest.raises(NoInfrastructureError):
        build_scene(snap)


def test_build_markers_connect_adjacent_lanes():
    from subscenes.builder import AdjacencySpec

    road = RoadSpec(
        "r",
        (_lane("a", (0, 0), (20, 0)), _lane("b", (0, -3.5), (20, -3.5))),
        adjacency=(AdjacencySpec("a", "b", "dashed"),),
    )
    graph = build_scene(_snapshot([road], _ego(5.0, 0.0)))
    markers = graph.nodes_of_kind(NodeKind.LANE_MARKER)
    assert len(markers) == 2  # one per segment row
    for i, marker in enumerate(markers):
        sides = {
            (edge.source, edge.attributes["side"])
            for edge in graph.in_edges(marker, EdgeKind.CONNECTED_TO)
        }
        assert sides == {(segment_id("a", i), "right"), (segment_id("b", i), "left")}


def test_build_crosswalk_attaches_to_intersected_segments():
    snap = _snapshot(
        [RoadSpec("r", (_lane("l", (0, 0), (30, 0)),))],
        _ego(5.0, 0.0),
        crosswalks=(CrosswalkSpec("X", ((14, -3), (17, -3), (17, 3), (14, 3))),),
    )
    graph = build_scene(snap)
    assert graph.nodes_of_kind(NodeKind.CROSSWALK) == ["X"]
    assert [e.target for e in graph.out_edges("X", EdgeKind.ON)] == [segment_id("l", 1)]


def test_build_isolated_crosswalk_dropped():
    snap = _minimal_snapshot(
        crosswalks=(CrosswalkSpec("X", ((20, 20), (23, 20), (23, 23), (20, 23))),)
    )
    graph, report = build_scene_with_report(snap)
    assert graph.nodes_of_kind(NodeKind.CROSSWALK) == []
    assert report.dropped_crosswalks == ["X"]


def test_build_connector_wires_chains():
    roads = [
        RoadSpec("rin", (_lane("in", (0, 0), (20, 0)),)),
        RoadSpec("rout", (_lane("out", (28, 0), (48, 0)),)),
    ]
    snap = _snapshot(
        roads,
        _ego(5.0, 0.0),
        connectors=(ConnectorSpec("c", "in", "out", "straight"),),
    )
    graph = build_scene(snap)
    connector = graph.node("c")
    assert connector.attributes["turn_type"] == "straight"
    assert connector.attributes["length"] == pytest.approx(8.0)
    assert [e.target for e in graph.out_edges(segment_id("in", 1), EdgeKind.NEXT)] == ["c"]
    assert [e.target for e in graph.out_edges("c", EdgeKind.NEXT)] == [segment_id("out", 0)]


def test_build_successor_lanes_linked():
    roads = [
        RoadSpec("r1", (_lane("a", (0, 0), (20, 0)),)),
        RoadSpec("r2", (_lane("b", (20, 0), (40, 0)),)),
    ]
    snap = _snapshot(roads, _ego(5.0, 0.0), successors=(("a", "b"),))
    graph = build_scene(snap)
    assert [e.target for e in graph.out_edges(segment_id("a", 1), EdgeKind.NEXT)] == [
        segment_id("b", 0)
    ]


def test_connector_between_connectors_needs_centerline():
    snap = _snapshot(
        [RoadSpec("r", (_lane("l", (0, 0), (10, 0)),))],
        _ego(5.0, 0.0),
        connectors=(ConnectorSpec("c", "other_conn", "l", "straight"),),
    )
    with pytest.raises(InvalidSnapshotError):
        build_scene(snap)


def test_build_config_bounds():
    with pytest.raises(InvalidSnapshotError):
        BuildConfig(max_segment=12.0)
    with pytest.raises(InvalidSnapshotError):
        BuildConfig(radius=-1.0)


def test_build_is_deterministic():
    snap = _snapshot(
        [RoadSpec("r", (_lane("l", (0, 0), (30, 0)),))],
        _ego(5.0, 0.0),
        actors=(ActorState("lead", "vehicle", 25.0, 0.0, 0.0, 8.0, 4.5, 2.0),),
    )
    from subscenes.corpus import scene_to_json

    assert scene_to_json(build_scene(snap)) == scene_to_json(build_scene(snap))
