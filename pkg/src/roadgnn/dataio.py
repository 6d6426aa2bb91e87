"""Dataset file I/O.

The on-disk dataset is a single JSON document with top-level keys ``nodes``,
``edges``, ``supersegments`` and ``samples``.  All ids are 0-based indices
into the respective arrays.  Per-sample counter rows are stored only for
nodes with ``counter: true``, in node-id order; unknown values are nulls.

Serialization is deterministic (fixed key order, shortest round-trip float
repr), so identical in-memory structures always produce byte-identical
files and ``save(load(f))`` is a fixpoint.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import (
    NUM_INTERVALS,
    CityDataset,
    RoadEdge,
    RoadGraph,
    RoadNode,
    Sample,
    Supersegment,
    SupersegmentSet,
    ValidationError,
    check_dataset,
)


class ParseError(ValueError):
    """Malformed dataset file (bad JSON or wrong document structure)."""


def _num(x) -> float | None:
    return None if x is None or (isinstance(x, float) and np.isnan(x)) else float(x)


def dataset_to_doc(graph: RoadGraph, segments: SupersegmentSet, samples: Sequence[Sample]) -> dict:
    counter_nodes = [v for v, node in enumerate(graph.nodes) if node.has_counter]
    doc = {
        "nodes": [{"x": n.x, "y": n.y, "counter": n.has_counter} for n in graph.nodes],
        "edges": [
            {
                "src": e.src,
                "dst": e.dst,
                "parsed_maxspeed": e.parsed_maxspeed,
                "importance": e.importance,
                "length_meters": e.length_meters,
            }
            for e in graph.edges
        ],
        "supersegments": [{"nodes": list(s.path)} for s in segments],
        "samples": [
            {
                "t": s.t,
                "counts": [[_num(c) for c in s.counts[v]] for v in counter_nodes],
                "edge_labels": [None if l < 0 else int(l) for l in s.edge_labels],
                "segment_etas": [_num(e) for e in s.segment_etas],
            }
            for s in samples
        ],
    }
    return doc


def doc_to_dataset(doc: dict) -> CityDataset:
    try:
        nodes = [RoadNode(float(n["x"]), float(n["y"]), bool(n["counter"])) for n in doc["nodes"]]
        edges = [
            RoadEdge(
                int(e["src"]),
                int(e["dst"]),
                float(e["parsed_maxspeed"]),
                float(e["importance"]),
                float(e["length_meters"]),
            )
            for e in doc["edges"]
        ]
        graph = RoadGraph(nodes, edges)
        segments = SupersegmentSet(
            [Supersegment(tuple(int(v) for v in s["nodes"])) for s in doc["supersegments"]]
        )
        counter_nodes = [v for v, n in enumerate(nodes) if n.has_counter]
        samples = []
        for raw in doc["samples"]:
            counts = np.full((len(nodes), NUM_INTERVALS), np.nan)
            rows = raw["counts"]
            if len(rows) != len(counter_nodes):
                raise ParseError(
                    f"sample t={raw.get('t')}: {len(rows)} counter rows, expected {len(counter_nodes)}"
                )
            for v, row in zip(counter_nodes, rows):
                counts[v] = [np.nan if c is None else float(c) for c in row]
            labels = np.array(
                [-1 if l is None else int(l) for l in raw["edge_labels"]], dtype=np.int64
            )
            etas = np.array(
                [np.nan if e is None else float(e) for e in raw["segment_etas"]], dtype=np.float64
            )
            samples.append(Sample(int(raw["t"]), counts, labels, etas))
    except (KeyError, TypeError) as err:
        raise ParseError(f"malformed dataset document: {err}") from err
    return CityDataset(graph, segments, samples)


def save_city(
    graph: RoadGraph,
    segments: SupersegmentSet,
    samples: Sequence[Sample],
    path: str | Path,
) -> None:
    """Validate and write the dataset; refuses to serialize invalid data."""
    check_dataset(graph, segments, samples)
    doc = dataset_to_doc(graph, segments, samples)
    text = json.dumps(doc, indent=1, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_city(path: str | Path) -> CityDataset:
    """Parse and fully validate a dataset file.

    Raises ``ParseError`` with line context for bad JSON/structure and
    ``ValidationError`` naming the first violated invariant.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}: parse error at line {err.lineno} col {err.colno}: {err.msg}") from err
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top-level value must be an object")
    data = doc_to_dataset(doc)
    check_dataset(*data)
    return data


def save_mapping(mapping: Sequence[Sequence[int]], path: str | Path) -> None:
    """Compact-edge -> original-edge lists, as a JSON array indexed by compact id."""
    text = json.dumps([list(map(int, originals)) for originals in mapping])
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_mapping(path: str | Path) -> list[list[int]]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [[int(i) for i in originals] for originals in doc]


# Binary matrix format: 8-byte header (u32 rows, u32 cols, little-endian)
# followed by row-major little-endian f32 values.  Fixed bit-exactly so
# emitted files can serve as golden test fixtures.

def write_matrix_f32(matrix: np.ndarray, path: str | Path) -> None:
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {matrix.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
        fh.write(m.tobytes(order="C"))


def read_matrix_f32(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ParseError(f"{path}: truncated matrix header")
    rows, cols = struct.unpack_from("<II", raw, 0)
    expect = 8 + 4 * rows * cols
    if len(raw) != expect:
        raise ParseError(f"{path}: expected {expect} bytes for {rows}x{cols}, got {len(raw)}")
    return np.frombuffer(raw, dtype="<f4", offset=8).reshape(rows, cols).astype(np.float64)
