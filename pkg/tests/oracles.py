"""Independent reference implementations used to check the library.

Nothing here shares code with the package's matcher or geometry: matching
is done by enumerating every variable-to-node assignment and every edge
realization, and polygon overlap by Sutherland-Hodgman clipping plus the
shoelace formula.
"""

from __future__ import annotations

import itertools
import random
from typing import Sequence

from subscenes.dsl import (
    Comparison,
    CountStatement,
    MarkStatement,
    MatchStatement,
    Membership,
    PatternQuery,
)
from subscenes.graph import (
    EDGE_SCHEMA,
    EdgeKind,
    NodeKind,
    SceneGraph,
    SceneGraphBuilder,
)


# --- brute-force pattern evaluation -------------------------------------------


def _pred_ok(node, pred) -> bool:
    value = node.attributes.get(pred.attr)
    if value is None or isinstance(value, tuple):
        return False
    if isinstance(pred, Membership):
        return any(
            isinstance(value, str) == isinstance(lit, str) and value == lit
            for lit in pred.values
        )
    assert isinstance(pred, Comparison)
    lit = pred.value
    if isinstance(value, str) != isinstance(lit, str):
        return False
    ops = {
        "=": lambda a, b: a == b,
        "!=": lambda a, b: a != b,
        "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b,
        ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b,
    }
    return ops[pred.op](value, lit)


def _statement_matches(graph: SceneGraph, stmt: MatchStatement, marks) -> tuple[int, dict]:
    variables = stmt.variables()
    candidates: dict[str, list[str]] = {}
    for var in variables:
        found = []
        for node_id in graph.node_ids():
            node = graph.node(node_id)
            ok = True
            for pattern in stmt.nodes:
                if pattern.var != var:
                    continue
                if pattern.is_mark:
                    if node_id not in marks.get(pattern.label, set()):
                        ok = False
                        break
                elif node.kind is not pattern.kind:
                    ok = False
                    break
            if ok and not all(
                _pred_ok(node, p) for p in stmt.predicates if p.var == var
            ):
                ok = False
            if ok:
                found.append(node_id)
        candidates[var] = found

    edge_lookup: dict[tuple[str, str, EdgeKind], list] = {}
    for edge in graph.edges():
        edge_lookup.setdefault((edge.source, edge.target, edge.kind), []).append(edge)

    count = 0
    bindings: dict[str, set[str]] = {var: set() for var in variables}
    for assignment in itertools.product(*(candidates[var] for var in variables)):
        binding = dict(zip(variables, assignment))
        per_edge: list[list] = []
        feasible = True
        for i, edge_pattern in enumerate(stmt.edges):
            u = binding[stmt.nodes[i].var]
            v = binding[stmt.nodes[i + 1].var]
            options = list(edge_lookup.get((u, v, edge_pattern.kind), []))
            if not edge_pattern.directed and u != v:
                options += edge_lookup.get((v, u, edge_pattern.kind), [])
            if not options:
                feasible = False
                break
            per_edge.append(options)
        if not feasible:
            continue
        realizations = 0
        for combo in itertools.product(*per_edge):
            if len({edge.index for edge in combo}) == len(combo):
                realizations += 1
        if realizations:
            count += realizations
            for var in variables:
                bindings[var].add(binding[var])
    return count, bindings


def brute_force_evaluate(query: PatternQuery, graph: SceneGraph):
    """(match_count, marks, root_involved, counts) by exhaustive enumeration."""
    marks: dict[str, set[str]] = {}
    counts: list[int] = []
    total = 0
    last_bindings: dict[str, set[str]] = {}
    for stmt in query.statements:
        if isinstance(stmt, MatchStatement):
            stmt_count, last_bindings = _statement_matches(graph, stmt, marks)
            total += stmt_count
        elif isinstance(stmt, MarkStatement):
            target = marks.setdefault(stmt.label, set())
            for var in stmt.variables:
                target.update(last_bindings.get(var, set()))
        elif isinstance(stmt, CountStatement):
            union = set().union(*marks.values()) if marks else set()
            if stmt.is_root:
                counts.append(1 if graph.root_id in union else 0)
            else:
                counts.append(len(marks.get(stmt.target, set())))
    union = set().union(*marks.values()) if marks else set()
    return total, marks, graph.root_id in union, tuple(counts)


# --- random schema-valid scene graphs ------------------------------------------

_OBJECT_TYPES = ("vehicle", "pedestrian", "bicycle", "traffic_cone", "barrier", "generic_object")
_TURN_TYPES = ("left", "right", "straight", "roundabout")
_BOUNDARIES = ("dashed", "solid")


def _random_attrs(rng: random.Random, kind: NodeKind) -> dict:
    if kind is NodeKind.LANE:
        return {"speed_limit": rng.choice((8.33, 13.9, 16.7)), "length": rng.uniform(0.5, 10.0)}
    if kind is NodeKind.CONNECTOR:
        return {"turn_type": rng.choice(_TURN_TYPES), "length": rng.uniform(1.0, 30.0)}
    if kind is NodeKind.LANE_MARKER:
        return {"boundary_type": rng.choice(_BOUNDARIES)}
    if kind is NodeKind.CROSSWALK:
        return {}
    if kind is NodeKind.EGO:
        return {"velocity": rng.uniform(0.0, 20.0), "dimensions": (4.5, 2.0)}
    return {
        "object_type": rng.choice(_OBJECT_TYPES),
        "distance": (rng.uniform(-30.0, 30.0), rng.uniform(-10.0, 10.0)),
        "velocity": rng.uniform(0.0, 20.0),
        "dimensions": (rng.uniform(0.3, 5.0), rng.uniform(0.3, 2.5)),
    }


def random_scene_graph(rng: random.Random, max_nodes: int = 12) -> SceneGraph:
    """Schema-valid graph with one Ego, a root, and random legal edges."""
    builder = SceneGraphBuilder(f"rand-{rng.randrange(1 << 30)}", 0)
    n = rng.randint(2, max_nodes)
    kinds = [rng.choice((NodeKind.LANE, NodeKind.CONNECTOR))]  # root candidate
    pool = (
        [NodeKind.LANE] * 4
        + [NodeKind.CONNECTOR] * 2
        + [NodeKind.LANE_MARKER, NodeKind.CROSSWALK]
        + [NodeKind.OBJECT] * 2
    )
    kinds += [rng.choice(pool) for _ in range(n - 2)]
    node_ids = []
    for i, kind in enumerate(kinds):
        node_ids.append(builder.add_node(f"n{i:02d}", kind, _random_attrs(rng, kind)))
    ego_id = builder.add_node("ego", NodeKind.EGO, _random_attrs(rng, NodeKind.EGO))

    by_kind: dict[NodeKind, list[str]] = {}
    for node_id, kind in zip(node_ids, kinds):
        by_kind.setdefault(kind, []).append(node_id)

    segments = by_kind.get(NodeKind.LANE, []) + by_kind.get(NodeKind.CONNECTOR, [])
    builder.add_edge(ego_id, EdgeKind.ON, rng.choice(segments))

    candidates = list(zip(node_ids, kinds))
    for _ in range(rng.randint(0, 2 * n)):
        src, src_kind = rng.choice(candidates)
        dst, dst_kind = rng.choice(candidates)
        legal = [
            kind
            for kind, (sources, targets) in EDGE_SCHEMA.items()
            if src_kind in sources and dst_kind in targets
        ]
        if not legal:
            continue
        kind = rng.choice(legal)
        attrs = {"side": rng.choice(("left", "right"))} if kind is EdgeKind.CONNECTED_TO else {}
        builder.add_edge(src, kind, dst, attrs)
    return builder.build()


# --- random pattern ASTs ---------------------------------------------------------


_ATTRS = ("speed_limit", "length", "turn_type", "object_type", "velocity", "boundary_type")
_KIND_LABELS = tuple(kind.value for kind in NodeKind)


def _random_literal(rng: random.Random):
    if rng.random() < 0.5:
        return rng.choice(("roundabout", "vehicle", "dashed", "a b", 'quo"te', "back\\slash"))
    value = rng.choice((rng.uniform(-100, 100), float(rng.randint(-50, 50)), rng.uniform(0, 1e-5)))
    return value


def random_query(rng: random.Random) -> PatternQuery:
    """A random, statically valid pattern AST (spans left at defaults)."""
    from subscenes.dsl import EdgePattern, NodePattern

    name = f"q{rng.randrange(10_000)}"
    statements = []
    produced: list[str] = []
    n_groups = rng.randint(1, 4)
    for g in range(n_groups):
        var_pool = [f"v{g}_{i}" for i in range(rng.randint(1, 3))]
        chain_len = rng.randint(1, 4)
        nodes = []
        edges = []
        for position in range(chain_len):
            var = rng.choice(var_pool)
            if produced and rng.random() < 0.3:
                nodes.append(NodePattern(var=var, label=rng.choice(produced), is_mark=True))
            else:
                nodes.append(NodePattern(var=var, label=rng.choice(_KIND_LABELS)))
            if position < chain_len - 1:
                edges.append(
                    EdgePattern(
                        kind=rng.choice(tuple(EdgeKind)), directed=rng.random() < 0.7
                    )
                )
        bound = [p.var for p in nodes]
        predicates = []
        for _ in range(rng.randint(0, 2)):
            var = rng.choice(bound)
            attr = rng.choice(_ATTRS)
            if rng.random() < 0.3:
                values = tuple(_random_literal(rng) for _ in range(rng.randint(1, 3)))
                predicates.append(Membership(var=var, attr=attr, values=values))
            else:
                predicates.append(
                    Comparison(
                        var=var,
                        attr=attr,
                        op=rng.choice(("=", "!=", "<", "<=", ">", ">=")),
                        value=_random_literal(rng),
                    )
                )
        statements.append(
            MatchStatement(nodes=tuple(nodes), edges=tuple(edges), predicates=tuple(predicates))
        )
        label = f"M{g}"
        mark_vars = tuple(sorted(set(rng.choice(bound) for _ in range(rng.randint(1, 2)))))
        statements.append(MarkStatement(label=label, variables=mark_vars))
        produced.append(label)
        if rng.random() < 0.3:
            statements.append(
                CountStatement(target="root" if rng.random() < 0.5 else rng.choice(produced))
            )
    statements.append(CountStatement(target="root"))
    return PatternQuery(name=name, statements=tuple(statements))


# --- convex polygon clipping ------------------------------------------------------


def shoelace_area(polygon: Sequence[tuple[float, float]]) -> float:
    total = 0.0
    for (x1, y1), (x2, y2) in zip(polygon, polygon[1:] + list(polygon[:1])):
        total += x1 * y2 - x2 * y1
    return abs(total) / 2.0


def clip_convex(subject: Sequence[tuple[float, float]], clip: Sequence[tuple[float, float]]):
    """Sutherland-Hodgman clip of a polygon against a convex clip polygon."""

    def is_ccw(poly):
        total = 0.0
        for (x1, y1), (x2, y2) in zip(poly, list(poly[1:]) + list(poly[:1])):
            total += x1 * y2 - x2 * y1
        return total > 0

    clip = list(clip)
    if not is_ccw(clip):
        clip = clip[::-1]
    output = list(subject)
    for (cx1, cy1), (cx2, cy2) in zip(clip, clip[1:] + clip[:1]):
        if not output:
            break
        edge_dx, edge_dy = cx2 - cx1, cy2 - cy1

        def inside(point):
            return edge_dx * (point[1] - cy1) - edge_dy * (point[0] - cx1) >= 0

        def intersect(p1, p2):
            x1, y1 = p1
            x2, y2 = p2
            denom = edge_dx * (y2 - y1) - edge_dy * (x2 - x1)
            t = (edge_dy * (x1 - cx1) - edge_dx * (y1 - cy1)) / denom
            return (x1 + t * (x2 - x1), y1 + t * (y2 - y1))

        new_output = []
        for p1, p2 in zip(output, output[1:] + output[:1]):
            if inside(p2):
                if not inside(p1):
                    new_output.append(intersect(p1, p2))
                new_output.append(p2)
            elif inside(p1):
                new_output.append(intersect(p1, p2))
        output = new_output
    return output


def convex_overlap_area(a, b) -> float:
    clipped = clip_convex(a, b)
    if len(clipped) < 3:
        return 0.0
    return shoelace_area(clipped)
