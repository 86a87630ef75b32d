"""Approximate contraction by boundary MPS compression.

Two geometries are handled:

* :class:`RowStructure` -- a rectangular PEPS-like grid contracted row by
  row into a boundary MPS;
* :class:`BandedNetwork` -- the triangular/banded grid of pair couplings
  produced by the Gaussian builder, contracted column by column along the
  diagonal.

After every absorption the boundary MPS is brought to left-canonical form
by a QR sweep and then truncated right to left with SVDs, which gives the
quasi-optimal truncation of the whole boundary state. Magnitudes are moved
into a running log scale so values far beyond double range survive.

MPS site arrays use the axis order ``(left, physical, right)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from actn.network import ContractionReport, TensorNetwork
from actn.tensor import Tensor, TruncationSpec, truncated_svd


class _Accumulator:
    """Running ``sign * exp(log)`` with a zero flag."""

    def __init__(self):
        self.log = 0.0
        self.sign = 1
        self.discarded = 0.0
        self.max_bond = 1

    @property
    def zero(self):
        return self.sign == 0

    def absorb(self, factor: float):
        if factor == 0.0:
            self.sign = 0
            self.log = -math.inf
        else:
            self.log += math.log(abs(factor))
            if factor < 0:
                self.sign = -self.sign

    def report(self) -> ContractionReport:
        if self.sign == 0:
            return ContractionReport(-math.inf, 0, self.max_bond, self.discarded)
        return ContractionReport(self.log, self.sign, self.max_bond, self.discarded)


def _rescale(sites: list[np.ndarray], acc: _Accumulator) -> None:
    for n, a in enumerate(sites):
        peak = float(np.max(np.abs(a))) if a.size else 0.0
        if peak == 0.0:
            acc.absorb(0.0)
            return
        sites[n] = a / peak
        acc.absorb(peak)


def compress_mps(sites: list[np.ndarray], spec: TruncationSpec, acc: _Accumulator) -> None:
    """Canonicalise left to right, then truncate right to left, in place."""
    n = len(sites)
    for i in range(n - 1):
        l, p, r = sites[i].shape
        q, rr = np.linalg.qr(sites[i].reshape(l * p, r))
        norm = np.linalg.norm(rr)
        if norm == 0.0:
            acc.absorb(0.0)
            return
        acc.absorb(norm)
        sites[i] = q.reshape(l, p, -1)
        sites[i + 1] = np.tensordot(rr / norm, sites[i + 1], axes=(1, 0))
    for i in range(n - 1, 0, -1):
        l, p, r = sites[i].shape
        mat = sites[i].reshape(l, p * r)
        total = np.linalg.norm(mat)
        if total == 0.0:
            acc.absorb(0.0)
            return
        u, s, vh, dropped = truncated_svd(mat, spec)
        acc.discarded += float(dropped / total)
        sites[i] = vh.reshape(-1, p, r)
        scale = s[0]
        acc.absorb(scale)
        sites[i - 1] = np.tensordot(sites[i - 1], u * (s / scale), axes=(2, 0))
    for a in sites[:-1]:
        acc.max_bond = max(acc.max_bond, a.shape[2])


def _close_chain(mats: list[np.ndarray], acc: _Accumulator) -> None:
    """Multiply a chain of matrices with boundary dims 1 into ``acc``."""
    v = np.ones(1)
    for m in mats:
        v = v @ m
        peak = float(np.max(np.abs(v))) if v.size else 0.0
        if peak == 0.0:
            acc.absorb(0.0)
            return
        acc.absorb(peak)
        v = v / peak
    acc.absorb(float(v.reshape(-1)[0]))


# --------------------------------------------------------------------------
# row structures
# --------------------------------------------------------------------------


@dataclass
class RowStructure:
    """``k x N`` grid of tensors with axes ``(left, right, up, down)``.

    Missing outer legs have dimension 1: the first row has ``up == 1``, the
    last row ``down == 1``, the first column ``left == 1`` and the last
    column ``right == 1``.
    """

    rows: list[list[np.ndarray]]

    def __post_init__(self):
        if not self.rows or not self.rows[0]:
            raise ValueError("row structure needs at least one row and one column")
        n = len(self.rows[0])
        for i, row in enumerate(self.rows):
            if len(row) != n:
                raise ValueError("all rows must have the same number of columns")
            for j, t in enumerate(row):
                if t.ndim != 4:
                    raise ValueError(f"tensor ({i},{j}) must have 4 axes (l, r, u, d)")
                if j > 0 and row[j - 1].shape[1] != t.shape[0]:
                    raise ValueError(f"horizontal bond mismatch at ({i},{j})")
                if i > 0 and self.rows[i - 1][j].shape[3] != t.shape[2]:
                    raise ValueError(f"vertical bond mismatch at ({i},{j})")
        if any(t.shape[2] != 1 for t in self.rows[0]) or any(t.shape[3] != 1 for t in self.rows[-1]):
            raise ValueError("outer vertical legs must have dimension 1")
        if any(r[0].shape[0] != 1 or r[-1].shape[1] != 1 for r in self.rows):
            raise ValueError("outer horizontal legs must have dimension 1")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0])

    def to_network(self) -> TensorNetwork:
        """Named-leg network: ``h{i},{j}`` joins (i,j)-(i,j+1), ``v{i},{j}`` joins (i,j)-(i+1,j)."""
        k, n = self.n_rows, self.n_cols
        tensors, tags = [], []
        for i in range(k):
            for j in range(n):
                names = [f"h{i},{j - 1}", f"h{i},{j}", f"v{i - 1},{j}", f"v{i},{j}"]
                keep = [j > 0, j < n - 1, i > 0, i < k - 1]
                data = self.rows[i][j]
                squeeze = tuple(ax for ax in range(4) if not keep[ax])
                tensors.append(Tensor([nm for nm, kp in zip(names, keep) if kp], data.sum(axis=squeeze)))
                tags.append(f"site{i},{j}")
        return TensorNetwork(tensors, tags=tags)


def _absorb_row(boundary: list[np.ndarray], row: list[np.ndarray]) -> list[np.ndarray]:
    out = []
    for b, t in zip(boundary, row):
        l, _, r = b.shape
        m, n_, _, d = t.shape
        merged = np.einsum("lpr,mnpd->lmdrn", b, t, optimize=True)
        out.append(merged.reshape(l * m, d, r * n_))
    return out


def boundary_contract_rows(rs: RowStructure, spec: TruncationSpec) -> ContractionReport:
    """Contract a row structure top to bottom with bond dimension ``spec.max_chi``."""
    acc = _Accumulator()
    boundary = [t[:, :, 0, :].transpose(0, 2, 1) for t in rs.rows[0]]
    for row in rs.rows[1:]:
        _rescale(boundary, acc)
        if acc.zero:
            return acc.report()
        compress_mps(boundary, spec, acc)
        if acc.zero:
            return acc.report()
        _rescale(boundary, acc)
        boundary = _absorb_row(boundary, row)
    # the last row has no downward legs, leaving a chain of matrices
    for b in boundary[:-1]:
        acc.max_bond = max(acc.max_bond, b.shape[2])
    _close_chain([b[:, 0, :] for b in boundary], acc)
    return acc.report()


# --------------------------------------------------------------------------
# banded / triangular coupling networks
# --------------------------------------------------------------------------


@dataclass
class BandedNetwork:
    """Product of single-variable vectors and pair-coupling matrices.

    The value is ``sum_x prod_i diag[i][x_i] * prod_{(i,j)} couplings[i,j][x_i, x_j]``
    over a product grid, with ``i < j`` for every coupling key.
    """

    diag: list[np.ndarray]
    couplings: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.diag)
        for (i, j), m in self.couplings.items():
            if not 0 <= i < j < n:
                raise ValueError(f"coupling key {(i, j)} must satisfy 0 <= i < j < {n}")
            if m.shape != (len(self.diag[i]), len(self.diag[j])):
                raise ValueError(f"coupling {(i, j)} has shape {m.shape}")

    @property
    def n(self) -> int:
        return len(self.diag)

    def row_end(self, i: int) -> int:
        return max([j for (a, j) in self.couplings if a == i], default=i)

    @property
    def width(self) -> int:
        return max([j - i for (i, j) in self.couplings], default=0)

    def to_network(self) -> TensorNetwork:
        """The 2D grid of site tensors, each a coupling fused with its COPY tensors.

        Site ``(i, j)`` with ``i < j`` holds ``T_ij`` with ``x_i`` running
        horizontally along row ``i`` and ``x_j`` vertically down column ``j``
        to the diagonal site ``(j, j)``, which holds the vector for ``x_j``.
        """
        n = self.n
        row_cols = {i: sorted([i] + [j for (a, j) in self.couplings if a == i]) for i in range(n)}
        col_rows = {j: sorted([a for (a, b) in self.couplings if b == j] + [j]) for j in range(n)}

        def h(i, j):
            return f"h{i},{j}"

        def v(i, j):
            return f"v{i},{j}"

        tensors, tags = [], []
        for i in range(n):
            cols = row_cols[i]
            for pos, j in enumerate(cols):
                rows = col_rows[j]
                rpos = rows.index(i)
                has_left, has_right = pos > 0, pos < len(cols) - 1
                has_up = rpos > 0
                if i == j:
                    t = self.diag[i]
                    legs, data = [], t
                    if has_up and has_right:
                        legs, data = [v(rows[rpos - 1], j), h(i, j)], np.diag(t)
                    elif has_up:
                        legs = [v(rows[rpos - 1], j)]
                    elif has_right:
                        legs = [h(i, j)]
                    else:
                        data = np.sum(t)
                    tensors.append(Tensor(legs, data))
                    tags.append(f"diag{i}")
                    continue
                m = self.couplings[(i, j)]
                gi, gj = m.shape
                full = np.einsum("ab,ac,bd->acbd", m, np.eye(gi), np.eye(gj))
                # axes: left x_i, right x_i, up x_j, down x_j
                legs = [h(i, cols[pos - 1]), h(i, j), v(rows[rpos - 1], j) if has_up else None, v(i, j)]
                keep = [has_left, has_right, has_up, True]
                squeeze = tuple(ax for ax in range(4) if not keep[ax])
                # dropping a COPY leg of a delta is a sum over that axis
                data = full.sum(axis=squeeze)
                tensors.append(Tensor([nm for nm, kp in zip(legs, keep) if kp], data))
                tags.append(f"coupling{i},{j}")
        return TensorNetwork(tensors, tags=tags)


def _thread_first(b: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Attach ``m[x, y]`` to the topmost coupled site; ``y`` leaves through its right bond."""
    l, p, r = b.shape
    return np.einsum("axb,xy->axby", b, m).reshape(l, p, r * m.shape[1])


def _thread_through(b: np.ndarray, m: np.ndarray | None, g: int) -> np.ndarray:
    """Pass ``y`` through both bonds of a site, attaching ``m[x, y]`` if the row couples."""
    l, p, r = b.shape
    eye = np.eye(g)
    if m is None:
        out = np.einsum("axb,yz->ayxbz", b, eye)
    else:
        out = np.einsum("axb,xy,yz->ayxbz", b, m, eye, optimize=True)
    return out.reshape(l * g, p, r * g)


def boundary_contract_banded(bn: BandedNetwork, spec: TruncationSpec) -> ContractionReport:
    """Contract a coupling network column by column along the diagonal.

    The boundary MPS holds one site per row that is still open; its
    physical leg is that row's variable. Absorbing column ``j`` attaches
    ``T_ij`` to every open row ``i`` coupled to ``x_j``, threads ``x_j``
    down to a new site for row ``j``, sums out rows whose last coupling was
    column ``j`` and recompresses. A band of width ``W`` holds at most ``W``
    sites, so ``max_chi >= G**W`` is exact.
    """
    acc = _Accumulator()
    sites: list[np.ndarray] = []
    rows: list[int] = []
    ends = [bn.row_end(i) for i in range(bn.n)]
    for j in range(bn.n):
        t = bn.diag[j]
        g = len(t)
        coupled = [s for s, i in enumerate(rows) if (i, j) in bn.couplings]
        if coupled:
            first = coupled[0]
            for s in range(first, len(sites)):
                m = bn.couplings.get((rows[s], j))
                if s == first:
                    sites[s] = _thread_first(sites[s], m)
                else:
                    sites[s] = _thread_through(sites[s], m, g)
            last_bond = sites[-1].shape[2]
            new = np.zeros((last_bond, g, 1))
            # the last site's right bond is (1, y); the new site ties y to x_j
            new[np.arange(g), np.arange(g), 0] = t
            sites.append(new)
        else:
            sites.append(t.reshape(1, g, 1))
        rows.append(j)

        for s in range(len(sites) - 1, -1, -1):
            if ends[rows[s]] != j:
                continue
            closed = sites[s].sum(axis=1)
            del sites[s], rows[s]
            if s < len(sites):
                sites[s] = np.tensordot(closed, sites[s], axes=(1, 0))
            elif s > 0:
                sites[s - 1] = np.tensordot(sites[s - 1], closed, axes=(2, 0))
            else:
                acc.absorb(float(closed.reshape(-1)[0]))
        if acc.zero:
            return acc.report()
        if sites:
            _rescale(sites, acc)
            if acc.zero:
                return acc.report()
            compress_mps(sites, spec, acc)
            if acc.zero:
                return acc.report()
            _rescale(sites, acc)
    if sites:
        raise AssertionError("rows left open after the last column")
    return acc.report()
