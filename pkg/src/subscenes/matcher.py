"""Backtracking evaluator for sub-scene pattern queries.

Matching follows Cypher-style semantics: within one match statement every
edge pattern must be realized by a distinct graph edge (edge-injective),
while two variables may bind the same node.  A match is one concrete
(node assignment, edge realization) combination.  Marks accumulate in
per-evaluation scratch state; the graph itself is never touched, so one
graph can serve many concurrent evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .dsl import (
    Comparison,
    CountStatement,
    MarkStatement,
    MatchStatement,
    Membership,
    NodePattern,
    PatternQuery,
    Predicate,
    UnknownMarkLabelError,
)
from .graph import Node, SceneGraph


@dataclass(frozen=True)
class MatchResult:
    """Outcome of evaluating one pattern query against one scene."""

    match_count: int
    marked: Mapping[str, frozenset[str]]
    root_involved: bool
    counts: tuple[int, ...] = ()

    def marked_union(self) -> frozenset[str]:
        union: set[str] = set()
        for ids in self.marked.values():
            union.update(ids)
        return frozenset(union)


def _predicate_holds(node: Node, pred: Predicate) -> bool:
    value = node.attributes.get(pred.attr)
    if value is None:
        return False
    if isinstance(pred, Membership):
        return any(_values_equal(value, literal) for literal in pred.values)
    assert isinstance(pred, Comparison)
    literal = pred.value
    if isinstance(value, str) != isinstance(literal, str) or isinstance(value, tuple):
        return False  # mismatched types never satisfy a comparison
    if pred.op == "=":
        return value == literal
    if pred.op == "!=":
        return value != literal
    if pred.op == "<":
        return value < literal
    if pred.op == "<=":
        return value <= literal
    if pred.op == ">":
        return value > literal
    return value >= literal


def _values_equal(value, literal) -> bool:
    if isinstance(value, tuple):
        return False
    if isinstance(value, str) != isinstance(literal, str):
        return False
    return value == literal


class _StatementMatcher:
    """Enumerates matches of a single chain-shaped match statement."""

    def __init__(self, graph: SceneGraph, stmt: MatchStatement, marks: dict[str, set[str]]):
        self.graph = graph
        self.stmt = stmt
        self.marks = marks
        self.preds_by_var: dict[str, list[Predicate]] = {}
        for pred in stmt.predicates:
            self.preds_by_var.setdefault(pred.var, []).append(pred)
        # Per-position candidate sets (kind or mark label plus predicates).
        self.candidates: list[Optional[set[str]]] = []
        self.candidate_order: list[list[str]] = []
        for pattern in stmt.nodes:
            ids = self._base_candidates(pattern)
            filtered = [
                nid
                for nid in ids
                if all(
                    _predicate_holds(graph.node(nid), p)
                    for p in self.preds_by_var.get(pattern.var, ())
                )
            ]
            self.candidate_order.append(filtered)
            self.candidates.append(set(filtered))
        self.match_count = 0
        self.var_bindings: dict[str, set[str]] = {v: set() for v in stmt.variables()}

    def _base_candidates(self, pattern: NodePattern) -> list[str]:
        if pattern.is_mark:
            if pattern.label not in self.marks:
                raise UnknownMarkLabelError(
                    pattern.label, pattern.span.line, pattern.span.col
                )
            return sorted(self.marks[pattern.label])
        return self.graph.nodes_of_kind(pattern.kind)

    def run(self) -> None:
        nodes = self.stmt.nodes
        if any(not c for c in self.candidates):
            return
        # Most-constrained anchor, then walk the chain right and left.
        anchor = min(range(len(nodes)), key=lambda i: len(self.candidates[i]))
        plan: list[tuple[int, int, int, bool]] = []  # (pos, edge_idx, from_pos, forward)
        for pos in range(anchor + 1, len(nodes)):
            plan.append((pos, pos - 1, pos - 1, True))
        for pos in range(anchor - 1, -1, -1):
            plan.append((pos, pos, pos + 1, False))
        bindings: dict[str, str] = {}
        assigned: dict[int, str] = {}
        used_edges: set[int] = set()

        def extend(step: int) -> None:
            if step == len(plan):
                self.match_count += 1
                for var, node_id in bindings.items():
                    self.var_bindings[var].add(node_id)
                return
            pos, edge_idx, from_pos, forward = plan[step]
            pattern = self.stmt.nodes[pos]
            edge_pattern = self.stmt.edges[edge_idx]
            from_id = assigned[from_pos]
            for edge, neighbor in self._steps(from_id, edge_pattern.kind, edge_pattern.directed, forward):
                if edge.index in used_edges:
                    continue
                if neighbor not in self.candidates[pos]:
                    continue
                bound = bindings.get(pattern.var)
                if bound is not None and bound != neighbor:
                    continue
                newly_bound = bound is None
                if newly_bound:
                    bindings[pattern.var] = neighbor
                assigned[pos] = neighbor
                used_edges.add(edge.index)
                extend(step + 1)
                used_edges.discard(edge.index)
                del assigned[pos]
                if newly_bound:
                    del bindings[pattern.var]

        anchor_pattern = nodes[anchor]
        for node_id in self.candidate_order[anchor]:
            bindings[anchor_pattern.var] = node_id
            assigned[anchor] = node_id
            extend(0)
            del bindings[anchor_pattern.var]
            del assigned[anchor]

    def _steps(self, from_id: str, kind, directed: bool, forward: bool):
        """Concrete (edge, neighbor id) steps from a bound endpoint.

        ``forward`` means the chain moves source->target over this edge
        pattern; for undirected patterns both orientations apply, with
        self-loops yielded once.
        """
        graph = self.graph
        if directed:
            if forward:
                for edge in graph.out_edges(from_id, kind):
                    yield edge, edge.target
            else:
                for edge in graph.in_edges(from_id, kind):
                    yield edge, edge.source
        else:
            for edge in graph.out_edges(from_id, kind):
                yield edge, edge.target
            for edge in graph.in_edges(from_id, kind):
                if edge.source == edge.target:
                    continue  # self-loop already yielded from the out list
                yield edge, edge.source


def evaluate(query: PatternQuery, graph: SceneGraph) -> MatchResult:
    """Run every statement of ``query`` in order against ``graph``."""
    marks: dict[str, set[str]] = {}
    counts: list[int] = []
    total_matches = 0
    last_bindings: dict[str, set[str]] = {}
    for stmt in query.statements:
        if isinstance(stmt, MatchStatement):
            matcher = _StatementMatcher(graph, stmt, marks)
            matcher.run()
            total_matches += matcher.match_count
            last_bindings = matcher.var_bindings
        elif isinstance(stmt, MarkStatement):
            target = marks.setdefault(stmt.label, set())
            for var in stmt.variables:
                target.update(last_bindings.get(var, ()))
        elif isinstance(stmt, CountStatement):
            if stmt.is_root:
                marked_union = set().union(*marks.values()) if marks else set()
                counts.append(1 if graph.root_id in marked_union else 0)
            else:
                if stmt.target not in marks:
                    raise UnknownMarkLabelError(
                        stmt.target, stmt.span.line, stmt.span.col
                    )
                counts.append(len(marks[stmt.target]))
    marked_union = set().union(*marks.values()) if marks else set()
    return MatchResult(
        match_count=total_matches,
        marked={label: frozenset(ids) for label, ids in marks.items()},
        root_involved=graph.root_id in marked_union,
        counts=tuple(counts),
    )
