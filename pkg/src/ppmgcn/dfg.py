"""Directly-follows graph mining and GCN propagation matrices."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptyLogError, SingularDegreeError
from .eventlog import EventLog


class PropagationKind(enum.Enum):
    WEIGHTED = "weighted"
    BINARY = "binary"
    LAPLACIAN_WEIGHTED = "laplacian-weighted"
    LAPLACIAN_BINARY = "laplacian-binary"

    @property
    def laplacian(self) -> bool:
        return self in (PropagationKind.LAPLACIAN_WEIGHTED, PropagationKind.LAPLACIAN_BINARY)

    @property
    def binary(self) -> bool:
        return self in (PropagationKind.BINARY, PropagationKind.LAPLACIAN_BINARY)


@dataclass(frozen=True, eq=False)
class Dfg:
    """Directly-follows graph.

    ``edge_counts[i, j]`` counts how often activity ``j`` immediately follows
    activity ``i`` within a case.
    """

    edge_counts: np.ndarray
    start_activities: frozenset[int]
    end_activities: frozenset[int]
    activity_counts: np.ndarray
    labels: tuple[str, ...]

    @property
    def num_nodes(self) -> int:
        return self.edge_counts.shape[0]

    def binary(self) -> np.ndarray:
        return (self.edge_counts > 0).astype(np.int64)


@dataclass(frozen=True, eq=False)
class PropagationMatrix:
    kind: PropagationKind
    matrix: np.ndarray


def mine_dfg(log: EventLog) -> Dfg:
    if not log.cases:
        raise EmptyLogError("cannot mine a DFG from an empty log")
    n = log.num_nodes
    counts = np.zeros((n, n), dtype=np.int64)
    occurrences = np.zeros(n, dtype=np.int64)
    starts, ends = set(), set()
    for case in log.cases:
        acts = np.fromiter((e.activity_id for e in case.events), dtype=np.int64, count=len(case))
        np.add.at(counts, (acts[:-1], acts[1:]), 1)
        np.add.at(occurrences, acts, 1)
        starts.add(int(acts[0]))
        ends.add(int(acts[-1]))
    counts.setflags(write=False)
    occurrences.setflags(write=False)
    return Dfg(counts, frozenset(starts), frozenset(ends), occurrences, log.alphabet)


def adjacency(dfg: Dfg, binary: bool) -> np.ndarray:
    """Adjacency as float, with a unit self-loop on every node of zero out-degree."""
    a = (dfg.binary() if binary else dfg.edge_counts).astype(np.float64)
    isolated = a.sum(axis=1) == 0
    a[isolated, isolated] = 1.0
    return a


def laplacian(a: np.ndarray) -> np.ndarray:
    """Unnormalized ``D - A`` with ``D`` the row sums of ``a``."""
    return np.diag(a.sum(axis=1)) - a


def symmetric_normalize(m: np.ndarray, degree: np.ndarray) -> np.ndarray:
    zero = np.flatnonzero(degree <= 0)
    if zero.size:
        raise SingularDegreeError(int(zero[0]))
    d = 1.0 / np.sqrt(degree)
    return d[:, None] * m * d[None, :]


def propagation_matrix(dfg: Dfg, kind: PropagationKind | str) -> PropagationMatrix:
    """``D^-1/2 A D^-1/2`` (plain kinds) or ``D^-1/2 (D - A) D^-1/2`` (Laplacian kinds).

    ``A`` is the raw edge-count matrix or its 0/1 binarization; ``D`` holds the
    row sums of ``A``.
    """
    kind = PropagationKind(kind)
    a = adjacency(dfg, kind.binary)
    degree = a.sum(axis=1)
    m = laplacian(a) if kind.laplacian else a
    out = symmetric_normalize(m, degree)
    out.setflags(write=False)
    return PropagationMatrix(kind, out)


def export_dot(dfg: Dfg, name: str = "dfg") -> str:
    """Graphviz ``digraph`` text with node and edge frequencies.

    Nodes are labeled ``"<label> (<count>)"``. Start activities are drawn in
    green and end activities with a double border.
    """
    if dfg.num_nodes == 0:
        raise EmptyLogError("empty DFG")
    lines = [f'digraph "{_escape(name)}" {{', "  rankdir=LR;", "  node [shape=box, style=rounded];"]
    for i, label in enumerate(dfg.labels):
        attrs = [f'label="{_escape(label)} ({int(dfg.activity_counts[i])})"']
        style = ["rounded"]
        if i in dfg.start_activities:
            style.append("filled")
            attrs.append('fillcolor="#CED6BD"')
        if i in dfg.end_activities:
            attrs.append("peripheries=2")
        attrs.append(f'style="{",".join(style)}"')
        lines.append(f'  "{_escape(label)}" [{", ".join(attrs)}];')
    src, dst = np.nonzero(dfg.edge_counts)
    for i, j in zip(src.tolist(), dst.tolist()):
        count = int(dfg.edge_counts[i, j])
        lines.append(f'  "{_escape(dfg.labels[i])}" -> "{_escape(dfg.labels[j])}" [label="{count}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def matrix_to_csv(matrix: np.ndarray, labels: tuple[str, ...] | None = None) -> str:
    """Square matrix as CSV, 12 significant digits, with a label header row and column."""
    n = matrix.shape[0]
    labels = labels if labels is not None else tuple(str(i) for i in range(n))
    lines = ["," + ",".join(labels)]
    for i in range(n):
        lines.append(labels[i] + "," + ",".join(f"{v:.12g}" for v in matrix[i]))
    return "\n".join(lines) + "\n"
