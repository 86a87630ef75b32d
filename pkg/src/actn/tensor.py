"""Dense tensors with named legs.

Legs are identified by string names. Contracting two tensors sums over
every leg name they share; legs present in only one of them stay open.
Everything here is a pure function of immutable values.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Two legs with the same name have different dimensions."""


@dataclass(frozen=True)
class TruncationSpec:
    """Bond truncation parameters.

    ``max_chi`` caps the number of kept singular values; ``cutoff`` drops
    values below ``cutoff * s_max``. Whichever truncates more wins.
    """

    max_chi: int
    cutoff: float = 0.0

    def __post_init__(self):
        if int(self.max_chi) != self.max_chi or self.max_chi < 1:
            raise ValueError(f"max_chi must be a positive integer, got {self.max_chi}")
        if not 0.0 <= self.cutoff < 1.0:
            raise ValueError(f"cutoff must lie in [0, 1), got {self.cutoff}")


class Tensor:
    """A dense real array whose axes carry distinct names."""

    __slots__ = ("legs", "data")

    def __init__(self, legs: Sequence[str], data):
        legs = tuple(legs)
        data = np.asarray(data, dtype=np.float64).view()
        if data.ndim != len(legs):
            raise ValueError(f"{len(legs)} leg names given for a {data.ndim}-d array")
        if len(set(legs)) != len(legs):
            raise ValueError(f"duplicate leg names in {legs}")
        data.setflags(write=False)
        object.__setattr__(self, "legs", legs)
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    def __repr__(self):
        dims = ", ".join(f"{n}={d}" for n, d in zip(self.legs, self.data.shape))
        return f"Tensor({dims})"

    @property
    def dims(self) -> dict[str, int]:
        return dict(zip(self.legs, self.data.shape))

    @property
    def ndim(self) -> int:
        return len(self.legs)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def dim(self, leg: str) -> int:
        return self.data.shape[self._axis(leg)]

    def _axis(self, leg: str) -> int:
        try:
            return self.legs.index(leg)
        except ValueError:
            raise KeyError(f"tensor has no leg {leg!r}; legs are {self.legs}") from None

    def transpose(self, legs: Sequence[str]) -> Tensor:
        """Reorder the axes to follow ``legs`` (a permutation of the current legs)."""
        legs = tuple(legs)
        if sorted(legs) != sorted(self.legs):
            raise ValueError(f"{legs} is not a permutation of {self.legs}")
        return Tensor(legs, self.data.transpose([self._axis(n) for n in legs]))

    def rename(self, mapping: dict[str, str]) -> Tensor:
        return Tensor([mapping.get(n, n) for n in self.legs], self.data)

    def select(self, leg: str, index: int) -> Tensor:
        """Fix ``leg`` to ``index`` and drop it."""
        ax = self._axis(leg)
        legs = self.legs[:ax] + self.legs[ax + 1 :]
        return Tensor(legs, np.take(self.data, index, axis=ax))

    def scale(self, factor: float) -> Tensor:
        return Tensor(self.legs, self.data * factor)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def scalar(self) -> float:
        if self.legs:
            raise ValueError(f"tensor still has open legs {self.legs}")
        return float(self.data)


def contract(a: Tensor, b: Tensor) -> Tensor:
    """Sum over every leg shared by ``a`` and ``b``.

    The result carries ``a``'s free legs followed by ``b``'s free legs.
    With no shared legs this is the outer product.
    """
    shared = [n for n in a.legs if n in b.legs]
    for n in shared:
        if a.dim(n) != b.dim(n):
            raise DimensionError(f"leg {n!r}: {a.dim(n)} != {b.dim(n)}")
    axes_a = [a.legs.index(n) for n in shared]
    axes_b = [b.legs.index(n) for n in shared]
    data = np.tensordot(a.data, b.data, axes=(axes_a, axes_b))
    legs = [n for n in a.legs if n not in shared] + [n for n in b.legs if n not in shared]
    return Tensor(legs, data)


def fuse(t: Tensor, groups: Sequence[Sequence[str]], names: Sequence[str] | None = None) -> Tensor:
    """Merge each group of legs into a single leg (row-major within a group).

    ``groups`` must partition the legs of ``t``. A fused leg is named by
    joining its members with ``*`` unless ``names`` is given.
    """
    flat = [n for g in groups for n in g]
    unknown = [n for n in flat if n not in t.legs]
    if unknown:
        raise KeyError(f"unknown legs {unknown}")
    if sorted(flat) != sorted(t.legs):
        raise ValueError(f"groups {groups} do not partition legs {t.legs}")
    if names is None:
        names = ["*".join(g) for g in groups]
    moved = t.transpose(flat)
    shape, start = [], 0
    for g in groups:
        shape.append(int(np.prod(moved.data.shape[start : start + len(g)], dtype=np.int64)))
        start += len(g)
    return Tensor(names, moved.data.reshape(shape))


def unfuse(t: Tensor, leg: str, parts: Sequence[tuple[str, int]]) -> Tensor:
    """Split ``leg`` back into ``parts`` given as ``(name, dim)`` pairs."""
    ax = t._axis(leg)
    dims = [d for _, d in parts]
    if int(np.prod(dims, dtype=np.int64)) != t.data.shape[ax]:
        raise DimensionError(f"cannot split leg {leg!r} of dim {t.data.shape[ax]} into {dims}")
    shape = t.data.shape[:ax] + tuple(dims) + t.data.shape[ax + 1 :]
    legs = t.legs[:ax] + tuple(n for n, _ in parts) + t.legs[ax + 1 :]
    return Tensor(legs, t.data.reshape(shape))


def truncated_svd(matrix: np.ndarray, spec: TruncationSpec):
    """SVD of a matrix keeping at most ``spec.max_chi`` values.

    Returns ``(u, s, vh, discarded)`` where ``discarded`` is the Frobenius
    norm of the dropped singular values (absolute, not relative). An all
    zero input yields rank-one zero factors.
    """
    m, n = matrix.shape
    if m == 0 or n == 0 or not np.any(matrix):
        return np.zeros((m, 1)), np.zeros(1), np.zeros((1, n)), 0.0
    try:
        u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError:
        u, s, vh = _svd_fallback(matrix)
    # LAPACK returns descending values; a stable sort pins the order of ties
    order = np.argsort(-s, kind="stable")
    u, s, vh = u[:, order], s[order], vh[order]
    keep = int(np.count_nonzero(s > spec.cutoff * s[0]))
    keep = max(1, min(keep, spec.max_chi))
    discarded = float(np.sqrt(np.sum(s[keep:] ** 2)))
    return u[:, :keep], s[:keep], vh[:keep], discarded


def _svd_fallback(matrix):
    import scipy.linalg

    return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")


def svd_split(
    t: Tensor,
    left_legs: Iterable[str],
    spec: TruncationSpec,
    bond: str = "bond",
) -> tuple[Tensor, Tensor, float]:
    """Factor ``t`` into two tensors joined by a new leg ``bond``.

    Singular values are split symmetrically: both factors carry their
    square roots. Returns ``(left, right, discarded_weight)`` where the
    weight is the truncation error relative to ``t``'s Frobenius norm.
    """
    left_legs = list(left_legs)
    if not left_legs or len(left_legs) >= t.ndim:
        raise ValueError("left_legs must be a nonempty proper subset of the tensor legs")
    if bond in t.legs:
        raise ValueError(f"bond name {bond!r} already used by the tensor")
    right_legs = [n for n in t.legs if n not in left_legs]
    mat = fuse(t, [left_legs, right_legs], names=["L", "R"]).data
    u, s, vh, discarded = truncated_svd(mat, spec)
    root = np.sqrt(s)
    ldims = [t.dim(n) for n in left_legs]
    rdims = [t.dim(n) for n in right_legs]
    left = Tensor(left_legs + [bond], (u * root).reshape(ldims + [len(s)]))
    right = Tensor([bond] + right_legs, (root[:, None] * vh).reshape([len(s)] + rdims))
    total = np.linalg.norm(mat)
    weight = discarded / total if total > 0 else 0.0
    return left, right, weight
