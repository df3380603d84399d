"""Diagrams over rows of vertices and the kernels they induce.

A diagram has rows of vertices ``(j, l)`` (row label ``j``, position ``l``,
both 1-based) and edges joining vertices of different rows, at most one edge
per vertex.  Vertices with no edge are *open*.  Every vertex carries an
integer label: the two endpoints of an edge share the edge's label.  Edge
labels are assigned ``1, 2, ...`` in lexicographic order of the smaller
endpoint; open vertices of a freshly built diagram are labelled afterwards in
vertex order.  Restrictions to a subset of rows keep their parent's labels,
so an edge leaving the subset leaves behind an open vertex labelled like the
edge.

Evaluating a diagram contracts the row kernels along its edges.  The
contraction proceeds row by row: start from the first row's kernel, then at
each new row contract the running partial kernel with that row's kernel over
the labels they share.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .tensor import CoefficientTensor, group_contract, outer, permute_axes

__all__ = [
    "MAX_VERTICES",
    "DiagramCapError",
    "Diagram",
    "PartialKernel",
    "ClosedDiagrams",
    "enumerate_closed_diagrams",
    "count_closed_diagrams",
    "is_connected",
    "connected_components",
    "evaluate",
    "contract_dense",
    "row_multigraphs",
    "multigraph_diagram",
    "multigraph_class_size",
]

MAX_VERTICES = 24

Vertex = tuple[int, int]


class DiagramCapError(ValueError):
    """Requested enumeration exceeds the vertex cap."""


@dataclass(frozen=True)
class Diagram:
    rows: tuple[int, ...]
    row_lengths: tuple[int, ...]
    edges: tuple[tuple[Vertex, Vertex], ...]
    label_items: tuple[tuple[Vertex, int], ...]

    @classmethod
    def from_edges(
        cls,
        row_lengths: Sequence[int],
        edges: Sequence[tuple[Vertex, Vertex]],
        rows: Sequence[int] | None = None,
    ) -> "Diagram":
        rows = tuple(rows) if rows is not None else tuple(range(1, len(row_lengths) + 1))
        row_lengths = tuple(int(k) for k in row_lengths)
        if len(rows) != len(row_lengths) or list(rows) != sorted(set(rows)):
            raise ValueError("row labels must be strictly increasing and match row_lengths")
        length = dict(zip(rows, row_lengths))
        seen = set()
        canon = []
        for e in edges:
            v, w = sorted((tuple(e[0]), tuple(e[1])))
            for x in (v, w):
                if x[0] not in length or not 1 <= x[1] <= length[x[0]]:
                    raise ValueError(f"vertex {x} not in diagram")
                if x in seen:
                    raise ValueError(f"more than one edge at vertex {x}")
                seen.add(x)
            if v[0] == w[0]:
                raise ValueError(f"edge {(v, w)} joins vertices of the same row")
            canon.append((v, w))
        canon.sort()
        labels = {}
        for lab, (v, w) in enumerate(canon, start=1):
            labels[v] = labels[w] = lab
        nxt = len(canon) + 1
        for j, k in zip(rows, row_lengths):
            for l in range(1, k + 1):
                if (j, l) not in labels:
                    labels[(j, l)] = nxt
                    nxt += 1
        return cls(rows, row_lengths, tuple(canon), tuple(sorted(labels.items())))

    # -- structure ---------------------------------------------------------
    @cached_property
    def labels(self) -> dict[Vertex, int]:
        return dict(self.label_items)

    @property
    def vertices(self) -> list[Vertex]:
        return [(j, l) for j, k in zip(self.rows, self.row_lengths) for l in range(1, k + 1)]

    @cached_property
    def partner(self) -> dict[Vertex, Vertex]:
        out = {}
        for v, w in self.edges:
            out[v] = w
            out[w] = v
        return out

    @property
    def open_vertices(self) -> list[Vertex]:
        return [v for v in self.vertices if v not in self.partner]

    @property
    def closed(self) -> bool:
        return not self.open_vertices

    @property
    def m(self) -> int:
        return len(self.rows)

    def row_labels(self, j: int) -> list[int]:
        k = self.row_lengths[self.rows.index(j)]
        return [self.labels[(j, l)] for l in range(1, k + 1)]

    def restrict(self, rows: Sequence[int]) -> "Diagram":
        """Sub-diagram on ``rows`` with edges inside them; labels are inherited."""
        keep = sorted(set(rows))
        if not set(keep) <= set(self.rows):
            raise ValueError(f"rows {keep} not in diagram")
        kl = [self.row_lengths[self.rows.index(j)] for j in keep]
        ks = set(keep)
        edges = tuple(e for e in self.edges if e[0][0] in ks and e[1][0] in ks)
        labels = tuple((v, lab) for v, lab in self.label_items if v[0] in ks)
        return Diagram(tuple(keep), tuple(kl), edges, labels)

    def prefix(self, r: int) -> "Diagram":
        """Restriction to the first ``r`` rows."""
        return self.restrict(self.rows[:r])

    def row_graph(self) -> dict[int, set[int]]:
        adj = {j: set() for j in self.rows}
        for v, w in self.edges:
            adj[v[0]].add(w[0])
            adj[w[0]].add(v[0])
        return adj

    def canonical_edge_string(self) -> str:
        return ";".join(f"{v[0]}.{v[1]}-{w[0]}.{w[1]}" for v, w in self.edges)


@dataclass(frozen=True)
class PartialKernel:
    """Contraction of a diagram's kernels; axis ``t`` of ``tensor`` carries ``open_labels[t]``."""

    open_labels: tuple[int, ...]
    tensor: CoefficientTensor

    @property
    def scalar(self) -> float:
        if self.open_labels:
            raise ValueError("partial kernel has open vertices")
        return self.tensor[()]

    def aligned(self, order: Sequence[int]) -> CoefficientTensor:
        """The tensor with axes permuted to follow the label sequence ``order``."""
        pos = {lab: t + 1 for t, lab in enumerate(self.open_labels)}
        if sorted(order) != sorted(self.open_labels):
            raise ValueError("label sets differ")
        return permute_axes(self.tensor, [pos[lab] for lab in order])


# -- enumeration -------------------------------------------------------------

def _check_rows(row_lengths: Sequence[int]) -> tuple[int, ...]:
    rl = tuple(int(k) for k in row_lengths)
    if any(k < 1 for k in rl):
        raise ValueError("row lengths must be positive")
    if sum(rl) > MAX_VERTICES:
        raise DiagramCapError(f"{sum(rl)} vertices exceed the enumeration cap {MAX_VERTICES}")
    return rl


def count_closed_diagrams(row_lengths: Sequence[int]) -> int:
    """Number of closed diagrams without listing them.

    Rows are processed in order while tracking only the number ``t`` of
    still-open vertices: a row of length ``k`` closes ``p`` of them in
    ``C(t, p) C(k, p) p!`` ways.
    """
    rl = tuple(int(k) for k in row_lengths)
    if sum(rl) % 2:
        return 0
    states = {0: 1}
    remaining = sum(rl)
    for k in rl:
        remaining -= k
        nxt: dict[int, int] = {}
        for t, cnt in states.items():
            for p in range(min(t, k) + 1):
                t2 = t - p + (k - p)
                if t2 > remaining:
                    continue
                ways = math.comb(t, p) * math.comb(k, p) * math.factorial(p)
                nxt[t2] = nxt.get(t2, 0) + cnt * ways
        states = nxt
    return states.get(0, 0)


class ClosedDiagrams:
    """Lazy stream of all closed diagrams on the given rows.

    Iteration yields each diagram once.  The first unmatched vertex (in
    lexicographic order) is matched in turn with every later unmatched
    vertex of another row.
    """

    def __init__(self, row_lengths: Sequence[int]):
        self.row_lengths = _check_rows(row_lengths)
        if sum(self.row_lengths) % 2:
            self.status = "odd vertex total: no closed diagram exists"
        else:
            self.status = "ok"

    def count(self) -> int:
        return count_closed_diagrams(self.row_lengths)

    def __iter__(self) -> Iterator[Diagram]:
        if self.status != "ok":
            return
        rl = self.row_lengths
        m = len(rl)
        verts = [(j + 1, l + 1) for j in range(m) for l in range(rl[j])]
        free = [True] * len(verts)
        left = list(rl)
        edges: list[tuple[Vertex, Vertex]] = []
        total = [len(verts)]

        def feasible() -> bool:
            return all(2 * c <= total[0] for c in left)

        def rec(start: int):
            i = start
            while i < len(verts) and not free[i]:
                i += 1
            if i == len(verts):
                yield Diagram.from_edges(rl, list(edges))
                return
            v = verts[i]
            free[i] = False
            left[v[0] - 1] -= 1
            total[0] -= 2
            for j in range(i + 1, len(verts)):
                w = verts[j]
                if not free[j] or w[0] == v[0]:
                    continue
                free[j] = False
                left[w[0] - 1] -= 1
                if feasible():
                    edges.append((v, w))
                    yield from rec(i + 1)
                    edges.pop()
                free[j] = True
                left[w[0] - 1] += 1
            free[i] = True
            left[v[0] - 1] += 1
            total[0] += 2

        yield from rec(0)


def enumerate_closed_diagrams(row_lengths: Sequence[int]) -> ClosedDiagrams:
    return ClosedDiagrams(row_lengths)


# -- connectivity --------------------------------------------------------------

def _row_components(d: Diagram) -> list[list[int]]:
    parent = {j: j for j in d.rows}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for v, w in d.edges:
        a, b = find(v[0]), find(w[0])
        if a != b:
            parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for j in d.rows:
        groups.setdefault(find(j), []).append(j)
    return sorted(groups.values(), key=lambda g: g[0])


def is_connected(d: Diagram) -> bool:
    """Whether the row graph is connected (a single row counts as connected)."""
    return len(_row_components(d)) <= 1


def connected_components(d: Diagram) -> list[Diagram]:
    return [d.restrict(g) for g in _row_components(d)]


# -- evaluation ----------------------------------------------------------------

def _check_kernels(d: Diagram, kernels: Sequence[CoefficientTensor]):
    if len(kernels) != d.m:
        raise ValueError(f"{len(kernels)} kernels for {d.m} rows")
    dims = {f.dim for f in kernels}
    if len(dims) > 1:
        raise ValueError(f"kernels disagree on dim: {sorted(dims)}")
    for j, (k, f) in enumerate(zip(d.row_lengths, kernels)):
        if f.order != k:
            raise ValueError(f"kernel {j + 1} has order {f.order}, row has length {k}")


def evaluate(d: Diagram, kernels: Sequence[CoefficientTensor]) -> PartialKernel:
    """Contract the kernels along the diagram's edges, one row at a time.

    ``kernels[t]`` belongs to the ``t``-th row of ``d``.  Returns the kernel
    over the open vertices of ``d``; for a closed diagram it is a scalar.
    """
    _check_kernels(d, kernels)
    labels = list(d.row_labels(d.rows[0]))
    acc = kernels[0]
    for j, f in zip(d.rows[1:], kernels[1:]):
        new = d.row_labels(j)
        pos_new = {lab: t + 1 for t, lab in enumerate(new)}
        pairs = [(t + 1, pos_new[lab]) for t, lab in enumerate(labels) if lab in pos_new]
        shared = {lab for lab in labels if lab in pos_new}
        acc = group_contract(acc, f, pairs)
        labels = [lab for lab in labels if lab not in shared] + [lab for lab in new if lab not in shared]
    return PartialKernel(tuple(labels), acc)


def product_of_components(d: Diagram, kernels: Sequence[CoefficientTensor]) -> PartialKernel:
    """Outer product of the evaluations of the connected components."""
    _check_kernels(d, kernels)
    by_row = dict(zip(d.rows, kernels))
    labels: list[int] = []
    acc = None
    for comp in connected_components(d):
        pk = evaluate(comp, [by_row[j] for j in comp.rows])
        acc = pk.tensor if acc is None else outer(acc, pk.tensor)
        labels.extend(pk.open_labels)
    return PartialKernel(tuple(labels), acc)


_LETTERS = string.ascii_letters


def contract_dense(d: Diagram, arrays: Sequence[np.ndarray], batch: bool = False) -> np.ndarray:
    """Evaluate a diagram by a single einsum over dense kernels.

    With ``batch=True`` every array carries a leading instance axis and the
    result has one value per instance.  Open vertices are returned in
    increasing label order.
    """
    if len(arrays) != d.m:
        raise ValueError(f"{len(arrays)} kernels for {d.m} rows")
    labs = sorted(set(d.labels.values()))
    sym = {lab: _LETTERS[i] for i, lab in enumerate(labs)}
    lead = "Z" if batch else ""
    ins = [lead + "".join(sym[lab] for lab in d.row_labels(j)) for j in d.rows]
    outs = lead + "".join(sym[lab] for lab in sorted(d.labels[v] for v in d.open_vertices))
    return np.einsum(",".join(ins) + "->" + outs, *arrays, optimize="greedy")


# -- row multigraphs -------------------------------------------------------------

def row_multigraphs(row_lengths: Sequence[int]) -> Iterator[np.ndarray]:
    """Symmetric loopless edge-multiplicity matrices with row sums ``row_lengths``.

    Each matrix is the class of closed diagrams obtained from one another by
    permuting vertices inside rows.
    """
    rl = _check_rows(row_lengths)
    m = len(rl)
    if sum(rl) % 2:
        return
    mat = np.zeros((m, m), dtype=int)
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    need = list(rl)

    def rec(t: int):
        if t == len(pairs):
            if not any(need):
                yield mat.copy()
            return
        i, j = pairs[t]
        # once pair (i, i+1..m-1) is done, row i must be saturated
        last_for_i = j == m - 1
        lo = need[i] if last_for_i else 0
        for c in range(lo, min(need[i], need[j]) + 1):
            mat[i, j] = mat[j, i] = c
            need[i] -= c
            need[j] -= c
            yield from rec(t + 1)
            need[i] += c
            need[j] += c
        mat[i, j] = mat[j, i] = 0

    if m == 1:
        if rl[0] == 0:
            yield mat.copy()
        return
    yield from rec(0)


def multigraph_diagram(mult: np.ndarray, row_lengths: Sequence[int]) -> Diagram:
    """A representative closed diagram for an edge-multiplicity matrix."""
    m = len(row_lengths)
    nxt = [1] * m
    edges = []
    for i in range(m):
        for j in range(i + 1, m):
            for _ in range(int(mult[i, j])):
                edges.append(((i + 1, nxt[i]), (j + 1, nxt[j])))
                nxt[i] += 1
                nxt[j] += 1
    return Diagram.from_edges(row_lengths, edges)


def multigraph_class_size(mult: np.ndarray, row_lengths: Sequence[int]) -> int:
    """Number of closed diagrams with the given edge multiplicities."""
    num = math.prod(math.factorial(k) for k in row_lengths)
    den = 1
    m = len(row_lengths)
    for i in range(m):
        for j in range(i + 1, m):
            den *= math.factorial(int(mult[i, j]))
    return num // den
