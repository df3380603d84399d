"""Sparse real coefficient tensors.

A :class:`CoefficientTensor` holds the coefficients ``a(n_1, ..., n_k)`` of a
chaos polynomial ``Z = sum a(n_1..n_k) :xi_{n_1} ... xi_{n_k}:``.  Indices and
axis numbers are 1-based throughout this module, matching the way the
coefficients are usually written down.  Dense numpy views (0-based) are
available through :attr:`CoefficientTensor.dense` for numerical work.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DROP_TOL",
    "CoefficientTensor",
    "TensorFormatError",
    "symmetrize",
    "frobenius_norm",
    "scale",
    "group_contract",
    "outer",
    "permute_axes",
    "random_sparse_tensor",
    "tensor_from_json",
    "tensor_to_json",
    "load_tensor",
    "save_tensor",
]

# entries smaller than this are dropped after arithmetic
DROP_TOL = 1e-15


class TensorFormatError(ValueError):
    """Malformed tensor input; ``where`` names the offending position."""

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class CoefficientTensor:
    """Immutable sparse tensor of fixed order over the index range ``1..dim``.

    Parameters
    ----------
    order : int
        Number of axes ``k`` (0 is allowed and denotes a scalar).
    dim : int
        Index range ``n`` shared by all axes.
    entries : mapping of index tuple -> float
        Stored coefficients.  Exact zeros are discarded.
    symmetric : bool
        Flag the tensor as symmetric under permutations of its axes.  The
        flag is verified on the stored support.
    """

    __slots__ = ("_order", "_dim", "_symmetric", "_entries", "_dense")

    def __init__(
        self,
        order: int,
        dim: int,
        entries: Mapping[Sequence[int], float] | None = None,
        symmetric: bool = False,
    ):
        if int(order) != order or order < 0:
            raise ValueError(f"order must be a nonnegative integer, got {order!r}")
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim!r}")
        self._order = int(order)
        self._dim = int(dim)
        clean = {}
        for idx, val in (entries or {}).items():
            key = tuple(int(i) for i in idx)
            if len(key) != self._order:
                raise ValueError(f"index {key} has length {len(key)}, expected {self._order}")
            if any(i < 1 or i > self._dim for i in key):
                raise ValueError(f"index {key} out of range 1..{self._dim}")
            val = float(val)
            if not math.isfinite(val):
                raise ValueError(f"non-finite value at index {key}")
            if val != 0.0:
                clean[key] = val
        self._entries = MappingProxyType(dict(sorted(clean.items())))
        self._dense = None
        self._symmetric = bool(symmetric)
        if self._symmetric and not self._check_symmetric():
            raise ValueError("tensor flagged symmetric but is not")

    def _check_symmetric(self, rtol: float = 1e-12) -> bool:
        for key, val in self._entries.items():
            for perm in set(itertools.permutations(key)):
                other = self._entries.get(perm, 0.0)
                if abs(other - val) > rtol * max(1.0, abs(val)):
                    return False
        return True

    # -- basic accessors ---------------------------------------------------
    @property
    def order(self) -> int:
        return self._order

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def symmetric(self) -> bool:
        return self._symmetric

    @property
    def entries(self) -> Mapping[tuple[int, ...], float]:
        return self._entries

    @property
    def nnz(self) -> int:
        return len(self._entries)

    def __getitem__(self, idx: Sequence[int]) -> float:
        return self._entries.get(tuple(idx), 0.0)

    def items(self):
        return self._entries.items()

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientTensor):
            return NotImplemented
        return (
            self._order == other._order
            and self._dim == other._dim
            and dict(self._entries) == dict(other._entries)
        )

    def __hash__(self):
        return hash((self._order, self._dim, tuple(self._entries.items())))

    def __repr__(self) -> str:
        sym = ", symmetric" if self._symmetric else ""
        return f"CoefficientTensor(order={self._order}, dim={self._dim}, nnz={self.nnz}{sym})"

    @property
    def dense(self) -> np.ndarray:
        """Read-only dense array of shape ``(dim,) * order`` (0-based)."""
        if self._dense is None:
            arr = np.zeros((self._dim,) * self._order)
            for key, val in self._entries.items():
                arr[tuple(i - 1 for i in key)] = val
            arr.flags.writeable = False
            self._dense = arr
        return self._dense

    @classmethod
    def from_dense(cls, arr, symmetric: bool = False, drop_tol: float = DROP_TOL):
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 0:
            val = float(arr)
            return cls(0, 1, {(): val} if abs(val) >= drop_tol else {}, symmetric=symmetric)
        dims = set(arr.shape)
        if len(dims) != 1:
            raise ValueError(f"rectangular shape {arr.shape} not supported; axes must share one dim")
        entries = {
            tuple(int(i) + 1 for i in idx): float(arr[idx])
            for idx in zip(*np.nonzero(np.abs(arr) >= drop_tol))
        }
        return cls(arr.ndim, arr.shape[0], entries, symmetric=symmetric)

    def with_dim(self, dim: int) -> "CoefficientTensor":
        """Embed into a larger index range (used to align tensors of different dims)."""
        if dim < self._dim:
            raise ValueError("cannot shrink dim")
        return CoefficientTensor(self._order, dim, self._entries, symmetric=self._symmetric)


def _clean(entries: Mapping, drop_tol: float = DROP_TOL) -> dict:
    return {k: v for k, v in entries.items() if abs(v) >= drop_tol}


def frobenius_norm(a: CoefficientTensor) -> float:
    """Square root of the sum of squared entries."""
    return math.sqrt(math.fsum(v * v for v in a.entries.values()))


def scale(a: CoefficientTensor, c: float) -> CoefficientTensor:
    if c == 0:
        return CoefficientTensor(a.order, a.dim, {}, symmetric=a.symmetric)
    if c == 1:
        return a
    out = _clean({k: v * c for k, v in a.items()})
    return CoefficientTensor(a.order, a.dim, out, symmetric=a.symmetric)


def symmetrize(a: CoefficientTensor) -> CoefficientTensor:
    """Average ``a`` over all permutations of its axes.

    Each orbit of index tuples is averaged over its distinct members, which
    is the same as averaging over all ``k!`` permutations.
    """
    if a.symmetric:
        return a
    orbits: dict[tuple, None] = {}
    for key in a.entries:
        orbits.setdefault(tuple(sorted(key)), None)
    out = {}
    for base in orbits:
        members = sorted(set(itertools.permutations(base)))
        vals = [a[m] for m in members]
        if all(v == vals[0] for v in vals):
            avg = vals[0]
        else:
            avg = math.fsum(vals) / len(members)
        if abs(avg) >= DROP_TOL:
            for m in members:
                out[m] = avg
    return CoefficientTensor(a.order, a.dim, out, symmetric=True)


def permute_axes(a: CoefficientTensor, perm: Sequence[int]) -> CoefficientTensor:
    """Return ``b`` with ``b(idx) = a(idx')`` where axis ``t`` of ``b`` is axis ``perm[t]`` of ``a``.

    ``perm`` lists 1-based axes of ``a``.
    """
    perm = [p - 1 for p in perm]
    if sorted(perm) != list(range(a.order)):
        raise ValueError(f"not a permutation of 1..{a.order}: {perm}")
    out = {tuple(key[p] for p in perm): v for key, v in a.items()}
    return CoefficientTensor(a.order, a.dim, out, symmetric=a.symmetric)


def group_contract(
    a: CoefficientTensor,
    b: CoefficientTensor,
    pairs: Iterable[tuple[int, int]],
) -> CoefficientTensor:
    """Contract ``a`` and ``b`` over the paired axes (1-based).

    The result keeps the unpaired axes of ``a`` in their original order,
    followed by the unpaired axes of ``b``.  Sums are accumulated with
    :func:`math.fsum`.
    """
    pairs = [(int(p), int(q)) for p, q in pairs]
    if a.dim != b.dim:
        raise ValueError(f"dim mismatch: {a.dim} vs {b.dim}")
    a_ax = [p - 1 for p, _ in pairs]
    b_ax = [q - 1 for _, q in pairs]
    for ax, order, name in ((a_ax, a.order, "a"), (b_ax, b.order, "b")):
        if len(set(ax)) != len(ax):
            raise ValueError(f"duplicate axis of {name} in pairs {pairs}")
        if any(x < 0 or x >= order for x in ax):
            raise ValueError(f"axis of {name} out of range 1..{order} in pairs {pairs}")
    a_rest = [i for i in range(a.order) if i not in a_ax]
    b_rest = [i for i in range(b.order) if i not in b_ax]

    b_index: dict[tuple, list] = defaultdict(list)
    for kb, vb in b.items():
        b_index[tuple(kb[i] for i in b_ax)].append((tuple(kb[i] for i in b_rest), vb))

    acc: dict[tuple, list] = defaultdict(list)
    for ka, va in a.items():
        matches = b_index.get(tuple(ka[i] for i in a_ax))
        if not matches:
            continue
        head = tuple(ka[i] for i in a_rest)
        for tail, vb in matches:
            acc[head + tail].append(va * vb)
    out = _clean({k: math.fsum(v) for k, v in acc.items()})
    return CoefficientTensor(len(a_rest) + len(b_rest), a.dim, out)


def outer(a: CoefficientTensor, b: CoefficientTensor) -> CoefficientTensor:
    return group_contract(a, b, [])


def random_sparse_tensor(
    order: int,
    dim: int,
    rng: np.random.Generator,
    density: float = 0.5,
    symmetric: bool = False,
    normalize: bool = False,
) -> CoefficientTensor:
    """Gaussian entries on a random support; never returns the zero tensor."""
    shape = (dim,) * order
    while True:
        mask = rng.random(shape) < density
        vals = rng.standard_normal(shape)
        arr = np.where(mask, vals, 0.0)
        if np.any(arr != 0) or order == 0:
            break
    t = CoefficientTensor.from_dense(arr)
    if symmetric:
        t = symmetrize(t)
    if normalize:
        nrm = frobenius_norm(t)
        if nrm > 0:
            t = scale(t, 1.0 / nrm)
    return t


# -- JSON -------------------------------------------------------------------

def tensor_to_json(a: CoefficientTensor) -> dict:
    return {
        "order": a.order,
        "dim": a.dim,
        "symmetric": a.symmetric,
        "entries": [{"idx": list(k), "val": v} for k, v in a.items()],
    }


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def tensor_from_json(obj) -> CoefficientTensor:
    """Parse the tensor JSON object; errors carry the offending position."""
    if not isinstance(obj, dict):
        raise TensorFormatError("expected a JSON object", "$")
    for field in ("order", "dim", "entries"):
        if field not in obj:
            raise TensorFormatError(f"missing field {field!r}", "$")
    order, dim = obj["order"], obj["dim"]
    if not _is_int(order) or order < 0:
        raise TensorFormatError("must be a nonnegative integer", "$.order")
    if not _is_int(dim) or dim < 1:
        raise TensorFormatError("must be a positive integer", "$.dim")
    sym = obj.get("symmetric", False)
    if not isinstance(sym, bool):
        raise TensorFormatError("must be a boolean", "$.symmetric")
    if not isinstance(obj["entries"], list):
        raise TensorFormatError("must be a list", "$.entries")
    entries = {}
    for pos, ent in enumerate(obj["entries"]):
        where = f"$.entries[{pos}]"
        if not isinstance(ent, dict) or "idx" not in ent or "val" not in ent:
            raise TensorFormatError("expected {'idx': [...], 'val': x}", where)
        idx, val = ent["idx"], ent["val"]
        if not isinstance(idx, list) or not all(_is_int(i) for i in idx):
            raise TensorFormatError("idx must be a list of integers", where + ".idx")
        if len(idx) != order:
            raise TensorFormatError(f"idx has length {len(idx)}, expected {order}", where + ".idx")
        if any(i < 1 or i > dim for i in idx):
            raise TensorFormatError(f"index out of range 1..{dim}", where + ".idx")
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise TensorFormatError("val must be a finite number", where + ".val")
        key = tuple(idx)
        if key in entries:
            raise TensorFormatError(f"duplicate idx {idx}", where + ".idx")
        entries[key] = float(val)
    try:
        return CoefficientTensor(order, dim, entries, symmetric=sym)
    except ValueError as exc:
        raise TensorFormatError(str(exc), "$") from exc


def load_tensor(path) -> CoefficientTensor:
    with open(path) as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TensorFormatError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from exc
    try:
        return tensor_from_json(obj)
    except TensorFormatError as exc:
        raise TensorFormatError(str(exc), str(path)) from exc


def save_tensor(a: CoefficientTensor, path) -> None:
    with open(path, "w") as fh:
        json.dump(tensor_to_json(a), fh, indent=1)
        fh.write("\n")
