"""The nine built-in sub-scene patterns and per-scene signature extraction.

Each pattern is a DSL query whose marks include every segment the
sub-scene applies to; a pattern belongs to a scene's signature when the
scene's root segment (the one the ego occupies) ends up marked.  Patterns
that reason about "within k hops" are rendered from hop-limit config by
unrolling one mark level per hop, so the hop limits in the catalog config
directly shape the generated queries.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .dsl import DuplicatePatternNameError, PatternQuery, parse, unparse
from .graph import SceneGraph
from .matcher import evaluate

PATTERN_NAMES = (
    "straight_road",
    "on_roundabout",
    "enter_roundabout",
    "leave_roundabout",
    "on_intersection",
    "approach_intersection",
    "approach_crossing",
    "vehicle_ahead",
    "vehicle_behind",
)

UNKNOWN_KEY = "Unknown"

DEFAULT_HOPS = {
    "approach_intersection": 2,
    "approach_crossing": 2,
    "vehicle_ahead": 3,
    "vehicle_behind": 3,
}

DEFAULT_VEHICLE_TYPES = ("vehicle",)

ROUNDABOUT_TURN_TYPE = "roundabout"

PATTERNS_DIR = Path(__file__).parent / "patterns"


@dataclass(frozen=True)
class CatalogConfig:
    """Knobs for the parametric catalog patterns."""

    hops: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_HOPS))
    vehicle_types: tuple[str, ...] = DEFAULT_VEHICLE_TYPES

    def hop(self, pattern_name: str) -> int:
        limit = self.hops.get(pattern_name, DEFAULT_HOPS[pattern_name])
        if limit < 0:
            raise ValueError(f"hop limit for {pattern_name} must be >= 0, got {limit}")
        return limit


@dataclass(frozen=True)
class SubsceneSignature:
    """The sorted set of pattern names matched at the root of one scene."""

    matched: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "matched", tuple(sorted(set(self.matched))))

    @property
    def is_unknown(self) -> bool:
        return not self.matched

    @property
    def key(self) -> str:
        return "+".join(self.matched) if self.matched else UNKNOWN_KEY

    @staticmethod
    def from_key(key: str) -> "SubsceneSignature":
        if key == UNKNOWN_KEY:
            return SubsceneSignature(())
        return SubsceneSignature(tuple(key.split("+")))


def _type_filter(var: str, vehicle_types: Sequence[str]) -> str:
    types = sorted(set(vehicle_types))
    if not types:
        raise ValueError("vehicle_types must not be empty")
    if len(types) == 1:
        return f'{var}.object_type = "{types[0]}"'
    inner = ", ".join(f'"{t}"' for t in types)
    return f"{var}.object_type in {{{inner}}}"


def _render_straight_road() -> str:
    return (
        "pattern straight_road {\n"
        "  match (a:Lane)-[NEXT]->(b:Lane);\n"
        "  mark S(a, b);\n"
        "  count(root);\n"
        "}\n"
    )


def _render_on_roundabout() -> str:
    return (
        "pattern on_roundabout {\n"
        "  match (a:Connector)-[NEXT]->(b:Connector)"
        f' where a.turn_type = "{ROUNDABOUT_TURN_TYPE}" and b.turn_type = "{ROUNDABOUT_TURN_TYPE}";\n'
        "  mark R(a);\n"
        "  count(root);\n"
        "}\n"
    )


def _render_enter_roundabout() -> str:
    return (
        "pattern enter_roundabout {\n"
        "  match (a:Lane)-[NEXT]->(b:Connector)"
        f' where b.turn_type = "{ROUNDABOUT_TURN_TYPE}";\n'
        "  mark E(a);\n"
        "  count(root);\n"
        "}\n"
    )


def _render_leave_roundabout() -> str:
    return (
        "pattern leave_roundabout {\n"
        "  match (a:Connector)-[NEXT]->(b:Lane)"
        f' where a.turn_type = "{ROUNDABOUT_TURN_TYPE}";\n'
        "  mark L(a);\n"
        "  count(root);\n"
        "}\n"
    )


def _render_on_intersection() -> str:
    return (
        "pattern on_intersection {\n"
        "  match (a:Connector);\n"
        "  mark I(a);\n"
        "  count(root);\n"
        "}\n"
    )


def _render_approach_intersection(hop_limit: int) -> str:
    lines = ["pattern approach_intersection {"]
    for hops in range(1, max(hop_limit, 1) + 1):
        chain = "(a:Lane)"
        for step in range(1, hops):
            chain += f"-[NEXT]->(m{step}:Lane)"
        chain += "-[NEXT]->(c:Connector)"
        lines.append(f"  match {chain};")
        lines.append("  mark A(a);")
    lines.append("  count(root);")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _render_levelled(
    name: str, label: str, seed_lines: list[str], hop_limit: int, upstream: bool
) -> str:
    """Seed statements mark level 0; each hop level extends along Next.

    ``upstream`` marks predecessors of the previous level (things the ego
    is approaching); otherwise successors are marked (things behind).
    """
    lines = [f"pattern {name} {{"] + [f"  {line}" for line in seed_lines]
    for level in range(1, hop_limit + 1):
        prev = f"{label}{level - 1}"
        cur = f"{label}{level}"
        for kind in ("Lane", "Connector"):
            if upstream:
                lines.append(f"  match (a:{kind})-[NEXT]->(b:@{prev});")
                lines.append(f"  mark {cur}(a);")
            else:
                lines.append(f"  match (a:@{prev})-[NEXT]->(b:{kind});")
                lines.append(f"  mark {cur}(b);")
    lines.append("  count(root);")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _render_approach_crossing(hop_limit: int) -> str:
    seeds = []
    for kind in ("Lane", "Connector"):
        seeds.append(f"match (w:Crosswalk)-[ON]->(x:{kind});")
        seeds.append("mark C0(x);")
    return _render_levelled("approach_crossing", "C", seeds, hop_limit, upstream=True)


def _render_vehicle_ahead(hop_limit: int, vehicle_types: Sequence[str]) -> str:
    cond = _type_filter("o", vehicle_types)
    seeds = []
    for kind in ("Lane", "Connector"):
        seeds.append(f"match (o:Object)-[ON]->(x:{kind}) where {cond};")
        seeds.append("mark V0(x);")
    return _render_levelled("vehicle_ahead", "V", seeds, hop_limit, upstream=True)


def _render_vehicle_behind(hop_limit: int, vehicle_types: Sequence[str]) -> str:
    cond = _type_filter("o", vehicle_types)
    seeds = []
    for kind in ("Lane", "Connector"):
        seeds.append(f"match (o:Object)-[ON]->(x:{kind}) where {cond};")
        seeds.append("mark B0(x);")
    return _render_levelled("vehicle_behind", "B", seeds, hop_limit, upstream=False)


def render_pattern(name: str, config: Optional[CatalogConfig] = None) -> str:
    """DSL source for one built-in pattern under the given config."""
    config = config or CatalogConfig()
    if name == "straight_road":
        return _render_straight_road()
    if name == "on_roundabout":
        return _render_on_roundabout()
    if name == "enter_roundabout":
        return _render_enter_roundabout()
    if name == "leave_roundabout":
        return _render_leave_roundabout()
    if name == "on_intersection":
        return _render_on_intersection()
    if name == "approach_intersection":
        return _render_approach_intersection(config.hop(name))
    if name == "approach_crossing":
        return _render_approach_crossing(config.hop(name))
    if name == "vehicle_ahead":
        return _render_vehicle_ahead(config.hop(name), config.vehicle_types)
    if name == "vehicle_behind":
        return _render_vehicle_behind(config.hop(name), config.vehicle_types)
    raise KeyError(f"unknown pattern name {name!r}")


def catalog(config: Optional[CatalogConfig] = None) -> list[PatternQuery]:
    """The nine built-in sub-scene patterns, parsed and validated."""
    return [parse(render_pattern(name, config)) for name in PATTERN_NAMES]


def load_catalog(paths: Iterable[Path]) -> list[PatternQuery]:
    """Parse one pattern per .ssq file; names must be unique."""
    queries: list[PatternQuery] = []
    seen: set[str] = set()
    for path in paths:
        query = parse(Path(path).read_text(encoding="utf-8"))
        if query.name in seen:
            raise DuplicatePatternNameError(query.name, query.span.line, query.span.col)
        seen.add(query.name)
        queries.append(query)
    return queries


def shipped_pattern_paths() -> list[Path]:
    return [PATTERNS_DIR / f"{name}.ssq" for name in PATTERN_NAMES]


def catalog_hash(patterns: Sequence[PatternQuery]) -> str:
    """Stable digest of pattern semantics, used to pin models to a catalog."""
    canonical = "\n".join(unparse(p) for p in sorted(patterns, key=lambda p: p.name))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def signature(
    graph: SceneGraph, patterns: Optional[Sequence[PatternQuery]] = None
) -> SubsceneSignature:
    """Names of all catalog patterns whose match marks include the root."""
    if patterns is None:
        patterns = catalog()
    matched = [p.name for p in patterns if evaluate(p, graph).root_involved]
    return SubsceneSignature(tuple(matched))
