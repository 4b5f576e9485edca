"""Scene knowledge graphs, sub-scene pattern matching, and competence analytics."""

__version__ = "0.1.0"

from .builder import BuildConfig, WorldSnapshot, build_scene, build_scene_with_report
from .catalog import CatalogConfig, SubsceneSignature, catalog, catalog_hash, signature
from .dsl import PatternQuery, parse, unparse
from .graph import EdgeKind, NodeKind, SceneGraph, SceneGraphBuilder
from .matcher import MatchResult, evaluate
from .metrics import (
    AnalysisModel,
    ComplexityCalibration,
    ComplexityConfig,
    CompetenceReport,
    CoverageIndex,
    calibrate,
    competence,
    complexity,
    coverage,
    normalize,
    raw_c1,
    raw_c2,
    raw_c3,
    score_scene,
)

__all__ = [
    "AnalysisModel",
    "BuildConfig",
    "CatalogConfig",
    "ComplexityCalibration",
    "ComplexityConfig",
    "CompetenceReport",
    "CoverageIndex",
    "EdgeKind",
    "MatchResult",
    "NodeKind",
    "PatternQuery",
    "SceneGraph",
    "SceneGraphBuilder",
    "SubsceneSignature",
    "WorldSnapshot",
    "build_scene",
    "build_scene_with_report",
    "calibrate",
    "catalog",
    "catalog_hash",
    "competence",
    "complexity",
    "coverage",
    "evaluate",
    "normalize",
    "parse",
    "raw_c1",
    "raw_c2",
    "raw_c3",
    "score_scene",
    "signature",
    "unparse",
]
