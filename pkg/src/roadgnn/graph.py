"""In-memory road-graph model shared by the whole pipeline.

Node, edge, supersegment and sample ids are dense 0-based integers into the
respective lists.  All structures are treated as immutable after construction
and are safe to share across threads.

Missing values use explicit markers that cannot collide with real data:
counter volumes and ETAs are float arrays with NaN for "unknown", edge
congestion labels are int arrays with -1 for "unlabeled".  The -1 *feature*
fill for unknown counts is applied only during feature assembly, never here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

NodeId = int
EdgeId = int
SegmentId = int

NUM_INTERVALS = 4


class ValidationError(ValueError):
    """Raised when a structure violates a data-model invariant."""


@dataclass(frozen=True)
class RoadNode:
    x: float
    y: float
    has_counter: bool = False


@dataclass(frozen=True)
class RoadEdge:
    src: NodeId
    dst: NodeId
    parsed_maxspeed: float  # km/h
    importance: float       # ordinal road class; float because merges average it
    length_meters: float


@dataclass(frozen=True)
class Supersegment:
    """Directed shortest path between two supernodes, endpoints included."""

    path: tuple[NodeId, ...]

    @property
    def head(self) -> NodeId:
        return self.path[0]

    @property
    def tail(self) -> NodeId:
        return self.path[-1]


class SupersegmentSet:
    def __init__(self, segments: Sequence[Supersegment]):
        self.segments = list(segments)
        self.supernodes = frozenset(s.head for s in self.segments) | frozenset(
            s.tail for s in self.segments
        )

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __getitem__(self, i: SegmentId) -> Supersegment:
        return self.segments[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, SupersegmentSet) and self.segments == other.segments


@dataclass
class Sample:
    """One timestamp's measurements.

    counts:       (N, 4) float64, vehicles per 15-min interval, NaN = unknown.
                  Only nodes with has_counter may carry non-NaN rows.
    edge_labels:  (E,) int64 congestion class, -1 = unlabeled.
    segment_etas: (S,) float64 seconds, NaN = unknown.
    """

    t: int
    counts: np.ndarray
    edge_labels: np.ndarray
    segment_etas: np.ndarray

    def copy(self) -> "Sample":
        return Sample(
            self.t,
            self.counts.copy(),
            self.edge_labels.copy(),
            self.segment_etas.copy(),
        )


class RoadGraph:
    """Simple directed graph (no multi-edges) with per-node adjacency.

    Adjacency is derived from the edge list at construction, so it is
    consistent by definition; ``validate`` checks the invariants the
    constructor does not enforce.
    """

    def __init__(self, nodes: Sequence[RoadNode], edges: Sequence[RoadEdge]):
        self.nodes = list(nodes)
        self.edges = list(edges)
        n = len(self.nodes)
        self.out_edges: list[list[EdgeId]] = [[] for _ in range(n)]
        self.in_edges: list[list[EdgeId]] = [[] for _ in range(n)]
        for eid, e in enumerate(self.edges):
            if 0 <= e.src < n:
                self.out_edges[e.src].append(eid)
            if 0 <= e.dst < n:
                self.in_edges[e.dst].append(eid)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_index(self) -> tuple[np.ndarray, np.ndarray]:
        """(src, dst) index arrays, shape (E,) each."""
        src = np.array([e.src for e in self.edges], dtype=np.int64)
        dst = np.array([e.dst for e in self.edges], dtype=np.int64)
        return src, dst

    def has_edge(self, src: NodeId, dst: NodeId) -> bool:
        return any(self.edges[eid].dst == dst for eid in self.out_edges[src])

    def find_edge(self, src: NodeId, dst: NodeId) -> EdgeId | None:
        for eid in self.out_edges[src]:
            if self.edges[eid].dst == dst:
                return eid
        return None

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RoadGraph)
            and self.nodes == other.nodes
            and self.edges == other.edges
        )


class CityDataset(NamedTuple):
    graph: RoadGraph
    segments: SupersegmentSet
    samples: list[Sample]


def _check_edges(graph: RoadGraph, report: list[str]) -> None:
    n = graph.num_nodes
    seen: set[tuple[int, int]] = set()
    for eid, e in enumerate(graph.edges):
        if not (0 <= e.src < n and 0 <= e.dst < n):
            report.append(f"edge {eid}: endpoint out of range")
            continue
        if e.src == e.dst:
            report.append(f"edge {eid}: self-loop at node {e.src}")
        if (e.src, e.dst) in seen:
            report.append(f"edge {eid}: duplicate edge ({e.src},{e.dst})")
        seen.add((e.src, e.dst))
        if not (e.length_meters > 0 and np.isfinite(e.length_meters)):
            report.append(f"edge {eid}: length_meters must be positive")
        if not (e.parsed_maxspeed > 0 and np.isfinite(e.parsed_maxspeed)):
            report.append(f"edge {eid}: parsed_maxspeed must be positive")
        if not np.isfinite(e.importance):
            report.append(f"edge {eid}: importance must be finite")


def _check_segments(graph: RoadGraph, segments: SupersegmentSet, report: list[str]) -> None:
    n = graph.num_nodes
    for sid, seg in enumerate(segments):
        if len(seg.path) < 2:
            report.append(f"segment {sid}: path shorter than 2 nodes")
            continue
        if any(not 0 <= v < n for v in seg.path):
            report.append(f"segment {sid}: path node out of range")
            continue
        for a, b in zip(seg.path, seg.path[1:]):
            if graph.find_edge(a, b) is None:
                report.append(f"segment {sid}: consecutive path nodes ({a},{b}) lack a base edge")
                break


def _check_sample(graph: RoadGraph, segments: SupersegmentSet, i: int, s: Sample, report: list[str]) -> None:
    n, m, k = graph.num_nodes, graph.num_edges, len(segments)
    if s.counts.shape != (n, NUM_INTERVALS):
        report.append(f"sample {i}: counts array has shape {s.counts.shape}, expected ({n},{NUM_INTERVALS})")
    else:
        known = ~np.isnan(s.counts)
        if np.any(s.counts[known] < 0) or not np.all(np.isfinite(s.counts[known])):
            report.append(f"sample {i}: present counts must be finite and >= 0")
        for v in range(n):
            if known[v].any() and not graph.nodes[v].has_counter:
                report.append(f"sample {i}: counts present at node {v} which has no counter")
                break
    if s.edge_labels.shape != (m,):
        report.append(f"sample {i}: edge_labels array has length {s.edge_labels.shape}, expected {m}")
    elif np.any(s.edge_labels < -1):
        report.append(f"sample {i}: edge label below -1")
    if s.segment_etas.shape != (k,):
        report.append(f"sample {i}: segment_etas array has length {s.segment_etas.shape}, expected {k}")
    else:
        known = ~np.isnan(s.segment_etas)
        if np.any(s.segment_etas[known] <= 0) or not np.all(np.isfinite(s.segment_etas[known])):
            report.append(f"sample {i}: present ETAs must be finite and > 0")


def validate(
    graph: RoadGraph,
    segments: SupersegmentSet | None = None,
    samples: Sequence[Sample] | None = None,
) -> list[str]:
    """Check every data-model invariant; returns a list of violations.

    Violations are data, not errors: an empty list means the structures are
    valid.  Callers that need hard failure wrap this in ``check_dataset``.
    """
    report: list[str] = []
    for nid, node in enumerate(graph.nodes):
        if not (np.isfinite(node.x) and np.isfinite(node.y)):
            report.append(f"node {nid}: non-finite coordinate")
    _check_edges(graph, report)
    if segments is not None:
        _check_segments(graph, segments, report)
    if samples is not None:
        for i, s in enumerate(samples):
            _check_sample(graph, segments if segments is not None else SupersegmentSet([]), i, s, report)
    return report


def check_dataset(
    graph: RoadGraph,
    segments: SupersegmentSet | None = None,
    samples: Sequence[Sample] | None = None,
) -> None:
    """Raise ``ValidationError`` naming the first violated invariant."""
    report = validate(graph, segments, samples)
    if report:
        raise ValidationError(report[0])


def empty_sample(graph: RoadGraph, n_segments: int, t: int = 0) -> Sample:
    """All-unknown sample with the right shapes for ``graph``."""
    return Sample(
        t=t,
        counts=np.full((graph.num_nodes, NUM_INTERVALS), np.nan),
        edge_labels=np.full(graph.num_edges, -1, dtype=np.int64),
        segment_etas=np.full(n_segments, np.nan),
    )
