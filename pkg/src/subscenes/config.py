"""Analysis configuration: one TOML file covering every tunable knob.

Sections: top-level builder geometry (radius, max_segment, lane_width),
``[catalog]`` (pattern files or hop limits plus the vehicle type set),
``[metrics]`` (type constants and obstacle types), and ``[coverage]``
(n policy and the n grid for the coverage curve).  Every field is
optional; omitted values fall back to the shipped defaults.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version dependent
    import tomli as tomllib

from .builder import BuildConfig
from .catalog import (
    CatalogConfig,
    DEFAULT_HOPS,
    DEFAULT_VEHICLE_TYPES,
    catalog,
    load_catalog,
)
from .dsl import PatternQuery
from .metrics import (
    ComplexityConfig,
    DEFAULT_OBSTACLE_TYPES,
    DEFAULT_TYPE_CONSTANT,
    DEFAULT_TYPE_CONSTANTS,
)

DEFAULT_N_GRID = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)


class ConfigError(Exception):
    pass


@dataclass
class AnalysisConfig:
    build: BuildConfig = field(default_factory=BuildConfig)
    catalog_config: CatalogConfig = field(default_factory=CatalogConfig)
    pattern_files: Optional[tuple[Path, ...]] = None
    complexity: ComplexityConfig = field(default_factory=ComplexityConfig)
    n_policy: str = "mean_of_composites"
    fixed_n: Optional[int] = None
    n_grid: tuple[int, ...] = DEFAULT_N_GRID

    def patterns(self) -> list[PatternQuery]:
        if self.pattern_files is not None:
            return load_catalog(self.pattern_files)
        return catalog(self.catalog_config)

    def to_dict(self) -> dict:
        return {
            "radius": self.build.radius,
            "max_segment": self.build.max_segment,
            "lane_width": self.build.lane_width,
            "catalog": {
                "pattern_files": [str(p) for p in self.pattern_files]
                if self.pattern_files is not None
                else None,
                "vehicle_types": sorted(self.catalog_config.vehicle_types),
                "hops": dict(sorted(self.catalog_config.hops.items())),
            },
            "metrics": {
                "type_constants": dict(sorted(self.complexity.type_constants.items())),
                "default_type_constant": self.complexity.default_type_constant,
                "obstacle_types": sorted(self.complexity.obstacle_types),
            },
            "coverage": {
                "n_policy": self.n_policy,
                "n": self.fixed_n,
                "n_grid": list(self.n_grid),
            },
        }

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _require_type(value, types, where: str):
    if not isinstance(value, types):
        raise ConfigError(f"{where}: unexpected value {value!r}")
    return value


def load_config(path: Optional[Path] = None) -> AnalysisConfig:
    if path is None:
        return AnalysisConfig()
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    try:
        build = BuildConfig(
            radius=float(data.get("radius", 50.0)),
            max_segment=float(data.get("max_segment", 10.0)),
            lane_width=float(data.get("lane_width", 3.5)),
        )
    except Exception as exc:
        raise ConfigError(f"bad builder settings: {exc}") from exc

    cat = data.get("catalog", {})
    hops = dict(DEFAULT_HOPS)
    for name, value in cat.get("hops", {}).items():
        if name not in DEFAULT_HOPS:
            raise ConfigError(f"catalog.hops: unknown pattern {name!r}")
        hops[name] = int(value)
    vehicle_types = tuple(
        str(v) for v in cat.get("vehicle_types", list(DEFAULT_VEHICLE_TYPES))
    )
    if not vehicle_types:
        raise ConfigError("catalog.vehicle_types must not be empty")
    catalog_config = CatalogConfig(hops=hops, vehicle_types=vehicle_types)
    pattern_files: Optional[tuple[Path, ...]] = None
    if "pattern_files" in cat:
        files = _require_type(cat["pattern_files"], list, "catalog.pattern_files")
        pattern_files = tuple(
            (path.parent / str(f)).resolve() for f in files
        )

    met = data.get("metrics", {})
    type_constants = dict(DEFAULT_TYPE_CONSTANTS)
    type_constants.update(
        {str(k): float(v) for k, v in met.get("type_constants", {}).items()}
    )
    complexity = ComplexityConfig(
        type_constants=type_constants,
        default_type_constant=float(met.get("default_type_constant", DEFAULT_TYPE_CONSTANT)),
        obstacle_types=frozenset(
            str(v) for v in met.get("obstacle_types", sorted(DEFAULT_OBSTACLE_TYPES))
        ),
    )

    cov = data.get("coverage", {})
    n_policy = str(cov.get("n_policy", "mean_of_composites"))
    if n_policy not in ("mean_of_composites", "fixed"):
        raise ConfigError(f"coverage.n_policy must be mean_of_composites or fixed, got {n_policy!r}")
    fixed_n = int(cov["n"]) if "n" in cov else None
    if n_policy == "fixed" and fixed_n is None:
        raise ConfigError("coverage.n_policy = 'fixed' requires coverage.n")
    grid_raw: Sequence = cov.get("n_grid", list(DEFAULT_N_GRID))
    n_grid = tuple(int(v) for v in grid_raw)
    if any(v < 1 for v in n_grid):
        raise ConfigError("coverage.n_grid values must be >= 1")

    return AnalysisConfig(
        build=build,
        catalog_config=catalog_config,
        pattern_files=pattern_files,
        complexity=complexity,
        n_policy=n_policy,
        fixed_n=fixed_n,
        n_grid=tuple(sorted(set(n_grid))),
    )
