"""Set partitions of tensor axes and the partition norms they induce.

For a partition ``P = {A_1, ..., A_s}`` of the axes ``{1, ..., k}`` the
partition norm of a coefficient tensor ``a`` is the supremum of

    sum a(n_1, ..., n_k) * prod_r b_r(n_j, j in A_r)

over block vectors ``b_r`` of unit Euclidean norm.  ``s = 1`` gives the
Frobenius norm, ``s = 2`` the spectral norm of a matricization, ``s >= 3``
an injective multilinear norm which is only estimated (from below) here.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .tensor import CoefficientTensor, frobenius_norm

__all__ = [
    "MAX_PARTITION_ORDER",
    "SetPartition",
    "PartitionNorm",
    "NormProfile",
    "enumerate_partitions",
    "bell_number",
    "partition_norm",
    "norm_profile",
    "matricize",
    "top_singular_triplet",
]

MAX_PARTITION_ORDER = 8


@dataclass(frozen=True, order=True)
class SetPartition:
    """Partition of ``{1..k}`` into nonempty blocks, blocks sorted by smallest element."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(sorted(b)) for b in self.blocks)
        if any(len(b) == 0 for b in blocks):
            raise ValueError("empty block")
        blocks = tuple(sorted(blocks, key=lambda b: b[0]))
        flat = [i for b in blocks for i in b]
        if sorted(flat) != list(range(1, len(flat) + 1)):
            raise ValueError(f"blocks {self.blocks} do not partition 1..{len(flat)}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def size(self) -> int:
        return len(self.blocks)

    @property
    def ground(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __str__(self) -> str:
        return "".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)

    def relabel(self, perm: Sequence[int]) -> "SetPartition":
        """Image of the partition under ``i -> perm[i-1]``."""
        return SetPartition(tuple(tuple(perm[i - 1] for i in b) for b in self.blocks))

    @classmethod
    def parse(cls, text: str) -> "SetPartition":
        body = text.strip()
        if not (body.startswith("{") and body.endswith("}")):
            raise ValueError(f"cannot parse partition {text!r}")
        parts = body[1:-1].split("}{")
        return cls(tuple(tuple(int(x) for x in p.split(",")) for p in parts))


def enumerate_partitions(k: int) -> list[SetPartition]:
    """All set partitions of ``{1..k}``, in restricted-growth-string order."""
    if int(k) != k or not 1 <= k <= MAX_PARTITION_ORDER:
        raise ValueError(f"k must be in 1..{MAX_PARTITION_ORDER}, got {k}")
    return list(_partitions_cached(int(k)))


@lru_cache(maxsize=None)
def _partitions_cached(k: int) -> tuple[SetPartition, ...]:
    out = []

    def rec(i: int, rgs: list[int], nblocks: int):
        if i == k:
            blocks = [[] for _ in range(nblocks)]
            for pos, b in enumerate(rgs):
                blocks[b].append(pos + 1)
            out.append(SetPartition(tuple(tuple(b) for b in blocks)))
            return
        for b in range(nblocks + 1):
            rgs.append(b)
            rec(i + 1, rgs, max(nblocks, b + 1))
            rgs.pop()

    rec(0, [], 0)
    return tuple(out)


def bell_number(k: int) -> int:
    row = [1]
    for _ in range(k):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def matricize(arr: np.ndarray, partition: SetPartition) -> np.ndarray:
    """Reshape a dense tensor to one axis per block.

    Axes inside a block are flattened lexicographically in increasing axis
    order.
    """
    n = arr.shape[0] if arr.ndim else 1
    axes = [i - 1 for b in partition.blocks for i in b]
    return np.transpose(arr, axes).reshape([n ** len(b) for b in partition.blocks])


@dataclass
class PartitionNorm:
    value: float
    certificate: list[np.ndarray]
    converged: bool
    exact: bool
    objective_trace: list[np.ndarray] = field(default_factory=list, repr=False)

    def __iter__(self):
        # allows ``value, cert, conv = partition_norm(...)``
        return iter((self.value, self.certificate, self.converged))

    @property
    def monotone(self) -> bool:
        """Whether every restart's objective sequence was nondecreasing."""
        for tr in self.objective_trace:
            d = np.diff(tr, axis=0)
            tol = 1e-12 * np.maximum(1.0, np.abs(tr[1:]))
            if np.any(d < -tol):
                return False
        return True


def _rng(seed: int, rank: int, restart: int) -> np.random.Generator:
    return np.random.default_rng([seed, rank, restart])


def top_singular_triplet(mat: np.ndarray, tol: float = 1e-10, max_iter: int = 500, rng=None):
    """Largest singular value of ``mat`` by power iteration on repeated Gram squares.

    Returns ``(sigma, u, v, converged)`` with ``u @ mat @ v == sigma``.
    """
    mat = np.asarray(mat, dtype=float)
    rng = rng if rng is not None else np.random.default_rng(0)
    d1, d2 = mat.shape
    if d2 > d1:
        # iterate on the smaller Gram matrix
        sigma, v, u, converged = top_singular_triplet(mat.T, tol, max_iter, rng)
        return sigma, u, v, converged
    if not np.any(mat):
        u = np.zeros(d1); u[0] = 1.0
        v = np.zeros(d2); v[0] = 1.0
        return 0.0, u, v, True
    gram = mat.T @ mat
    h = gram / np.trace(gram)
    v = rng.standard_normal(d2)
    v /= np.linalg.norm(v)
    prev = -np.inf
    converged = False
    sigma = 0.0
    for _ in range(max_iter):
        w = h @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start orthogonal to the range; draw again
            v = rng.standard_normal(d2)
            v /= np.linalg.norm(v)
            continue
        v = w / nw
        sigma = float(np.linalg.norm(mat @ v))
        if abs(sigma - prev) <= tol * max(1.0, sigma):
            converged = True
            break
        prev = sigma
        h = h @ h
        h /= np.max(np.abs(h))
    u = mat @ v
    nu = np.linalg.norm(u)
    u = u / nu if nu > 0 else u
    return sigma, u, v, converged


def _einsum_all_but(s: int, r: int) -> str:
    letters = string.ascii_lowercase[:s]
    ins = [f"Z{letters[t]}" for t in range(s) if t != r]
    return f"{letters}," + ",".join(ins) + f"->Z{letters[r]}"


def _alternating_max(tensor: np.ndarray, inits: list[np.ndarray], tol: float, max_iter: int):
    """Block alternating maximization, vectorized over restarts (leading axis)."""
    s = tensor.ndim
    xs = [x.copy() for x in inits]
    nrun = xs[0].shape[0]
    specs = [_einsum_all_but(s, r) for r in range(s)]
    paths = [
        np.einsum_path(specs[r], tensor, *[xs[t] for t in range(s) if t != r], optimize="greedy")[0]
        for r in range(s)
    ]
    trace = []
    obj = np.full(nrun, -np.inf)
    converged = np.zeros(nrun, dtype=bool)
    for _ in range(max_iter):
        prev_sweep = obj.copy()
        for r in range(s):
            c = np.einsum(specs[r], tensor, *[xs[t] for t in range(s) if t != r], optimize=paths[r])
            nrm = np.linalg.norm(c, axis=1)
            # objective before the update, i.e. <c, x_r>
            before = np.einsum("Zi,Zi->Z", c, xs[r])
            trace.append(before)
            ok = nrm > 0
            xs[r][ok] = c[ok] / nrm[ok, None]
            obj = np.where(ok, nrm, before)
            trace.append(obj.copy())
        converged = np.abs(obj - prev_sweep) <= tol * np.maximum(1.0, np.abs(obj))
        if np.all(converged):
            break
    return obj, xs, converged, np.array(trace)


def partition_norm(
    a: CoefficientTensor,
    partition: SetPartition,
    restarts: int = 32,
    tol: float = 1e-10,
    max_iter: int = 500,
    seed: int = 0,
    rank: int = 0,
) -> PartitionNorm:
    """Partition norm of ``a`` with respect to ``partition``.

    ``s = 1`` and ``s = 2`` are exact.  For ``s >= 3`` the value is the best
    of ``restarts`` alternating-maximization runs started from seeded random
    unit vectors, so it is a lower bound on the true supremum.  The RNG of
    restart ``j`` is seeded by ``(seed, rank, j)``.
    """
    if partition.ground != a.order:
        raise ValueError(f"partition of {partition.ground} elements for tensor of order {a.order}")
    s = partition.size
    dims = [a.dim ** len(b) for b in partition.blocks]
    if a.nnz == 0:
        cert = []
        for d in dims:
            e = np.zeros(d); e[0] = 1.0
            cert.append(e)
        return PartitionNorm(0.0, cert, True, s <= 2)
    if s == 1:
        val = frobenius_norm(a)
        return PartitionNorm(val, [a.dense.reshape(-1) / val], True, True)
    mat = matricize(a.dense, partition)
    if s == 2:
        sigma, u, v, conv = top_singular_triplet(mat, tol=tol, max_iter=max_iter, rng=_rng(seed, rank, 0))
        return PartitionNorm(sigma, [u, v], conv, True)
    inits = []
    for r, d in enumerate(dims):
        block = np.empty((restarts, d))
        for j in range(restarts):
            g = _rng(seed, rank, j).standard_normal(sum(dims))
            off = sum(dims[:r])
            block[j] = g[off:off + d]
        block /= np.linalg.norm(block, axis=1, keepdims=True)
        inits.append(block)
    obj, xs, conv, trace = _alternating_max(mat, inits, tol, max_iter)
    best = int(np.argmax(obj))
    return PartitionNorm(
        float(obj[best]),
        [x[best].copy() for x in xs],
        bool(conv[best]),
        False,
        objective_trace=[trace[:, j] for j in range(restarts)],
    )


@dataclass
class NormProfile:
    """Partition norms of one tensor, for every partition of its axes."""

    order: int
    per_partition: dict[SetPartition, PartitionNorm]
    v_s: np.ndarray
    argmax: list[SetPartition]
    exact: list[bool]
    config: dict = field(default_factory=dict)

    def v(self, s: int) -> float:
        """``V_s`` with 1-based ``s``."""
        return float(self.v_s[s - 1])

    def to_json(self, certificates: bool = False) -> dict:
        parts = []
        for p, res in self.per_partition.items():
            row = {
                "partition": str(p),
                "blocks": [list(b) for b in p.blocks],
                "s": p.size,
                "value": res.value,
                "converged": res.converged,
                "exact": res.exact,
            }
            if certificates:
                row["certificate"] = [c.tolist() for c in res.certificate]
            parts.append(row)
        return {
            "order": self.order,
            "v_s": [float(x) for x in self.v_s],
            "argmax": [str(p) for p in self.argmax],
            "exact": list(self.exact),
            "partitions": parts,
            "config": self.config,
        }

    @classmethod
    def from_values(cls, v_s: Sequence[float]) -> "NormProfile":
        """Profile carrying only the ``v_s`` array (for bound evaluation)."""
        v = np.asarray(v_s, dtype=float)
        k = len(v)
        return cls(k, {}, v, [], [s <= 2 for s in range(1, k + 1)])

    @classmethod
    def from_json(cls, obj: dict) -> "NormProfile":
        prof = cls.from_values(obj["v_s"])
        if "exact" in obj:
            prof.exact = list(obj["exact"])
        return prof

    @classmethod
    def load(cls, path) -> "NormProfile":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def norm_profile(
    a: CoefficientTensor,
    restarts: int = 32,
    tol: float = 1e-10,
    max_iter: int = 500,
    seed: int = 0,
) -> NormProfile:
    """Compute every partition norm of ``a`` and the per-size maxima ``V_s``.

    No relation between different ``s`` is imposed on the reported values.
    Ties are broken towards the canonically first partition.
    """
    k = a.order
    if k > MAX_PARTITION_ORDER:
        raise ValueError(f"order {k} exceeds {MAX_PARTITION_ORDER}")
    per = {}
    v_s = np.zeros(k)
    argmax: list[SetPartition | None] = [None] * k
    for rank, p in enumerate(enumerate_partitions(k)):
        res = partition_norm(a, p, restarts=restarts, tol=tol, max_iter=max_iter, seed=seed, rank=rank)
        per[p] = res
        s = p.size
        if argmax[s - 1] is None or res.value > v_s[s - 1]:
            v_s[s - 1] = res.value
            argmax[s - 1] = p
    cfg = {"restarts": restarts, "tol": tol, "max_iter": max_iter, "seed": seed}
    return NormProfile(k, per, v_s, argmax, [s <= 2 for s in range(1, k + 1)], cfg)
