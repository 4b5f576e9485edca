"""Shared fixtures: small hand-built graphs used across the suite."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from subscenes.graph import EdgeKind, NodeKind, SceneGraphBuilder


def lane_attrs(speed=13.9, length=10.0):
    return {"speed_limit": speed, "length": length}


def ego_attrs(velocity=10.0):
    return {"velocity": velocity, "dimensions": (4.5, 2.0)}


def object_attrs(object_type="vehicle", distance=(10.0, 0.0), velocity=5.0):
    return {
        "object_type": object_type,
        "distance": distance,
        "velocity": velocity,
        "dimensions": (4.5, 2.0),
    }


def chain_graph(n_segments: int = 3, ego_on: int = 1, scene_id: str = "chain"):
    """Lane chain L0 -> L1 -> ... with the ego on segment ``ego_on``."""
    builder = SceneGraphBuilder(scene_id, 0)
    for i in range(n_segments):
        builder.add_node(f"L{i}", NodeKind.LANE, lane_attrs())
    for i in range(n_segments - 1):
        builder.add_edge(f"L{i}", EdgeKind.NEXT, f"L{i + 1}")
    builder.add_node("ego", NodeKind.EGO, ego_attrs())
    builder.add_edge("ego", EdgeKind.ON, f"L{ego_on}")
    return builder


@pytest.fixture
def three_chain():
    return chain_graph(3, ego_on=1).build()
