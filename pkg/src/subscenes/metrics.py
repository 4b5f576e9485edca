"""Coverage, static scene complexity, and competence scoring.

Coverage asks how often a scene's sub-scene signature occurred in the
training corpus relative to a sufficiency threshold ``n``.  Complexity is
the mean of three min-max normalized components: unique element count,
road-obstacle count, and a dynamic-entity score driven by ego speed and
the proximity of other traffic participants.  Competence combines them as
``coverage * (1 - complexity)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .catalog import UNKNOWN_KEY
from .graph import NodeKind, SceneGraph

MODEL_FORMAT = "subscenes-model/1"

# Per-participant-type weighting constants for the dynamic-entity score.
# Configurable; these defaults are this package's choice, not dataset-derived.
DEFAULT_TYPE_CONSTANTS: dict[str, float] = {
    "vehicle": 0.5,
    "bicycle": 0.8,
    "pedestrian": 1.0,
}
DEFAULT_TYPE_CONSTANT = 0.5

DEFAULT_OBSTACLE_TYPES = frozenset({"generic_object", "traffic_cone", "barrier"})

COMPONENT_NAMES = ("c1", "c2", "c3")


class MetricsError(Exception):
    pass


class EmptyCorpusError(MetricsError):
    pass


class ModelFormatError(MetricsError):
    pass


# --- coverage ----------------------------------------------------------------


@dataclass
class CoverageIndex:
    """Occurrence counts per signature key plus the sufficiency threshold n."""

    counts: dict[str, int]
    n: int
    n_policy: str = "mean_of_composites"  # or "fixed"

    def __post_init__(self):
        if self.n < 1:
            raise MetricsError(f"n must be >= 1, got {self.n}")
        if self.n_policy not in ("mean_of_composites", "fixed"):
            raise MetricsError(f"unknown n policy {self.n_policy!r}")

    def count(self, key: str) -> int:
        return self.counts.get(key, 0)

    @staticmethod
    def from_signature_keys(
        keys: Iterable[str],
        n_policy: str = "mean_of_composites",
        fixed_n: Optional[int] = None,
    ) -> "CoverageIndex":
        counts: dict[str, int] = {}
        for key in keys:
            counts[key] = counts.get(key, 0) + 1
        if not counts:
            raise EmptyCorpusError("cannot build a coverage index from zero scenes")
        if fixed_n is not None:
            return CoverageIndex(counts=counts, n=fixed_n, n_policy="fixed")
        if n_policy == "mean_of_composites":
            return CoverageIndex(counts=counts, n=mean_of_composites(counts))
        raise MetricsError("fixed n policy requires fixed_n")

    def with_n(self, n: int) -> "CoverageIndex":
        return CoverageIndex(counts=dict(self.counts), n=n, n_policy="fixed")


def mean_of_composites(counts: Mapping[str, int]) -> int:
    """Round-half-up mean of the per-composite counts, Unknown excluded."""
    composite = [count for key, count in counts.items() if key != UNKNOWN_KEY]
    if not composite:
        return 1
    mean = sum(composite) / len(composite)
    return max(1, math.floor(mean + 0.5))


def coverage(index: CoverageIndex, signature_key: str) -> float:
    return min(index.n, index.count(signature_key)) / index.n


# --- complexity ----------------------------------------------------------------


@dataclass(frozen=True)
class ComplexityConfig:
    type_constants: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_TYPE_CONSTANTS)
    )
    default_type_constant: float = DEFAULT_TYPE_CONSTANT
    obstacle_types: frozenset[str] = DEFAULT_OBSTACLE_TYPES


def raw_c1(graph: SceneGraph) -> int:
    """Unique element count: node kind labels plus object type strings."""
    labels: set[str] = set()
    types: set[str] = set()
    for node in graph.nodes():
        labels.add(node.kind.value)
        if node.kind is NodeKind.OBJECT:
            types.add(str(node.attributes["object_type"]))
    return len(labels | types)


def raw_c2(graph: SceneGraph, obstacle_types: frozenset[str] = DEFAULT_OBSTACLE_TYPES) -> int:
    """Number of objects whose type marks a road obstacle."""
    return sum(
        1
        for node_id in graph.nodes_of_kind(NodeKind.OBJECT)
        if graph.node(node_id).attributes["object_type"] in obstacle_types
    )


def raw_c3(
    graph: SceneGraph,
    type_constants: Mapping[str, float] = DEFAULT_TYPE_CONSTANTS,
    default_constant: float = DEFAULT_TYPE_CONSTANT,
) -> float:
    """Dynamic-entity score.

    Ego speed scales a sum over all objects of an exponential proximity
    term (longitudinal and lateral) weighted by a per-type softplus factor.
    """
    ego = graph.node(graph.ego_id)
    v_ego = float(ego.attributes["velocity"])
    total = 0.0
    for node_id in graph.nodes_of_kind(NodeKind.OBJECT):
        attrs = graph.node(node_id).attributes
        x, z = attrs["distance"]
        constant = type_constants.get(str(attrs["object_type"]), default_constant)
        proximity = 0.5 * math.exp(-abs(x)) + 0.5 * math.exp(-abs(z))
        total += proximity * math.log1p(math.exp(constant))
    return v_ego * total


def raw_components(graph: SceneGraph, config: ComplexityConfig) -> tuple[float, float, float]:
    return (
        float(raw_c1(graph)),
        float(raw_c2(graph, config.obstacle_types)),
        raw_c3(graph, config.type_constants, config.default_type_constant),
    )


@dataclass
class ComplexityCalibration:
    """Corpus min/max per raw component, enabling min-max normalization."""

    mins: tuple[float, float, float]
    maxs: tuple[float, float, float]
    config: ComplexityConfig = field(default_factory=ComplexityConfig)

    def __post_init__(self):
        for lo, hi in zip(self.mins, self.maxs):
            if lo > hi:
                raise MetricsError(f"calibration min {lo} exceeds max {hi}")


def calibrate(
    raws: Iterable[tuple[float, float, float]],
    config: Optional[ComplexityConfig] = None,
) -> ComplexityCalibration:
    mins: Optional[list[float]] = None
    maxs: Optional[list[float]] = None
    for triple in raws:
        if mins is None:
            mins = list(triple)
            maxs = list(triple)
            continue
        for i, value in enumerate(triple):
            mins[i] = min(mins[i], value)
            maxs[i] = max(maxs[i], value)
    if mins is None or maxs is None:
        raise EmptyCorpusError("cannot calibrate complexity on zero scenes")
    return ComplexityCalibration(
        mins=tuple(mins), maxs=tuple(maxs), config=config or ComplexityConfig()
    )


def normalize(raw: float, component: int, calibration: ComplexityCalibration) -> float:
    """Min-max normalize one component, clamped to [0, 1].

    A degenerate calibration (min == max) maps everything to 0.
    """
    lo = calibration.mins[component]
    hi = calibration.maxs[component]
    if hi == lo:
        return 0.0
    value = (raw - lo) / (hi - lo)
    return min(1.0, max(0.0, value))


def complexity(c1: float, c2: float, c3: float) -> float:
    return (c1 + c2 + c3) / 3.0


def competence(coverage_value: float, complexity_value: float) -> float:
    return coverage_value * (1.0 - complexity_value)


# --- scoring and persistence ----------------------------------------------------


@dataclass(frozen=True)
class CompetenceReport:
    scene_id: str
    signature_key: str
    coverage: float
    c1: float
    c2: float
    c3: float
    complexity: float
    competence: float


@dataclass
class AnalysisModel:
    """Training-corpus statistics reused when scoring held-out scenes."""

    index: CoverageIndex
    calibration: ComplexityCalibration
    catalog_hash: str


def score_scene(graph: SceneGraph, signature_key: str, model: AnalysisModel) -> CompetenceReport:
    raws = raw_components(graph, model.calibration.config)
    c1, c2, c3 = (normalize(raws[i], i, model.calibration) for i in range(3))
    cplx = complexity(c1, c2, c3)
    cov = coverage(model.index, signature_key)
    return CompetenceReport(
        scene_id=graph.scene_id,
        signature_key=signature_key,
        coverage=cov,
        c1=c1,
        c2=c2,
        c3=c3,
        complexity=cplx,
        competence=competence(cov, cplx),
    )


def model_to_dict(model: AnalysisModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "catalog_hash": model.catalog_hash,
        "coverage": {
            "counts": dict(sorted(model.index.counts.items())),
            "n": model.index.n,
            "n_policy": model.index.n_policy,
        },
        "complexity": {
            "mins": list(model.calibration.mins),
            "maxs": list(model.calibration.maxs),
            "type_constants": dict(sorted(model.calibration.config.type_constants.items())),
            "default_type_constant": model.calibration.config.default_type_constant,
            "obstacle_types": sorted(model.calibration.config.obstacle_types),
        },
    }


def model_from_dict(data: dict) -> AnalysisModel:
    if data.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"unsupported model format {data.get('format')!r}")
    cov = data["coverage"]
    cplx = data["complexity"]
    config = ComplexityConfig(
        type_constants={str(k): float(v) for k, v in cplx["type_constants"].items()},
        default_type_constant=float(cplx["default_type_constant"]),
        obstacle_types=frozenset(cplx["obstacle_types"]),
    )
    return AnalysisModel(
        index=CoverageIndex(
            counts={str(k): int(v) for k, v in cov["counts"].items()},
            n=int(cov["n"]),
            n_policy=str(cov["n_policy"]),
        ),
        calibration=ComplexityCalibration(
            mins=tuple(float(v) for v in cplx["mins"]),
            maxs=tuple(float(v) for v in cplx["maxs"]),
            config=config,
        ),
        catalog_hash=str(data["catalog_hash"]),
    )


def save_model(model: AnalysisModel, path: Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_model(path: Path) -> AnalysisModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(data)
