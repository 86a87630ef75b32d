"""Products of sums of single-variable functions.

The integrand is ``f(x) = prod_i p_i(x)`` with ``p_i(x) = sum_j q_ji(x_j)``.
Each factor ``p_i`` is a rank-2 MPS built from function tensors chained by
control additions; the factors become the rows of a 2D network and COPY
tensors on each variable tie the rows together column by column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from actn.boundary import RowStructure
from actn.circuit import QuadratureRule, add_tensor, function_tensor, gauss_legendre, make_rng, uniform_rule
from actn.network import TensorNetwork, insert_projector_pair
from actn.tensor import Tensor, contract


@dataclass
class PolynomialSpec:
    """Sampled factors ``q[i, j, p] = q_ji(x_j[p])`` for ``k`` rows and ``N`` columns."""

    q: np.ndarray
    rule: QuadratureRule

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=np.float64)
        if self.q.ndim != 3:
            raise ValueError("q must have shape (k, N, G)")
        if self.q.shape[2] != self.rule.G:
            raise ValueError(f"samples have length {self.q.shape[2]} but the rule has {self.rule.G} nodes")

    @property
    def k(self) -> int:
        return self.q.shape[0]

    @property
    def N(self) -> int:
        return self.q.shape[1]

    @property
    def G(self) -> int:
        return self.q.shape[2]


def _row_site(samples) -> np.ndarray:
    """``A[l, x, r]``: running-sum control state ``l`` plus this term gives ``r``."""
    t = contract(function_tensor(samples, var="x", control="a"), add_tensor(("l", "a", "r")))
    return t.transpose(["l", "x", "r"]).data


def row_mps(q_row: np.ndarray) -> list[np.ndarray]:
    """Rank-2 MPS of ``sum_j q_j(x_j)`` with boundary states folded in.

    The left boundary starts the running sum in state 0 (nothing added) and
    the right boundary selects state 1 (exactly one term added).
    """
    sites = [_row_site(s) for s in q_row]
    sites[0] = sites[0][:1]
    sites[-1] = sites[-1][:, :, 1:]
    return sites


def build_polynomial_tn(spec: PolynomialSpec) -> RowStructure:
    """Row structure for the integral of ``prod_i sum_j q_ji(x_j)``.

    The quadrature weights sit on the first row; lower rows are diagonal in
    the vertical leg since the COPY tensor of each column has been fused in.
    """
    w = spec.rule.weights
    k, N = spec.k, spec.N
    rows = []
    for i in range(k):
        row = []
        for a in row_mps(spec.q[i]):
            if k == 1:
                t = np.einsum("lxr,x->lr", a, w)[:, :, None, None]
            elif i == 0:
                t = np.einsum("lxr,x->lrx", a, w)[:, :, None, :]
            elif i == k - 1:
                t = a.transpose(0, 2, 1)[:, :, :, None]
            else:
                t = np.einsum("lxr,xy->lrxy", a, np.eye(spec.G))
            row.append(t)
        rows.append(row)
    return RowStructure(rows)


def polynomial_network(spec: PolynomialSpec) -> TensorNetwork:
    """The same integral as a named-leg network (row ``i`` bond ``j`` is ``h{i},{j}``)."""
    return build_polynomial_tn(spec).to_network()


def _draw(rng, shape, lam):
    return rng.uniform(lam, 1.0, size=shape)


def default_rule(G: int, rule: str = "uniform", interval=(0.0, 1.0)) -> QuadratureRule:
    if rule == "uniform":
        return uniform_rule(G, interval)
    if rule == "gauss":
        return gauss_legendre(G, interval)
    raise ValueError(f"unknown rule {rule!r}")


def make_polynomial(N: int, k: int, G: int, seed: int, lam: float = -1.0, rule: QuadratureRule | None = None):
    """General case: every ``q_ji`` independent, uniform in ``[lam, 1]``."""
    rng = make_rng(seed)
    return PolynomialSpec(_draw(rng, (k, N, G), lam), rule or uniform_rule(G))


def make_power_polynomial(N: int, k: int, G: int, seed: int, lam: float = -1.0, rule: QuadratureRule | None = None):
    """``(q_1 + ... + q_N)^k``: all rows share one random row of samples."""
    rng = make_rng(seed)
    base = _draw(rng, (N, G), lam)
    return PolynomialSpec(np.broadcast_to(base, (k, N, G)).copy(), rule or uniform_rule(G))


def make_perturbed_polynomial(
    N: int, k: int, G: int, delta: float, seed: int, lam: float = -1.0, rule: QuadratureRule | None = None
):
    """Rows ``i > 0`` are the first row plus ``delta * r_ji`` with ``r_ji`` uniform in ``[-1, 1]``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    rng = make_rng(seed)
    base = _draw(rng, (N, G), lam)
    pert = rng.uniform(-1.0, 1.0, size=(k, N, G))
    pert[0] = 0.0
    q = base[None] + delta * pert
    return PolynomialSpec(q, rule or uniform_rule(G))


# --------------------------------------------------------------------------
# exact identities for the power case
# --------------------------------------------------------------------------


def binomial_table(k: int) -> np.ndarray:
    """Pascal's triangle in double precision, ``table[n, m] = C(n, m)``."""
    table = np.zeros((k + 1, k + 1))
    table[:, 0] = 1.0
    for n in range(1, k + 1):
        table[n, 1 : n + 1] = table[n - 1, : n] + table[n - 1, 1 : n + 1]
    return table


def recursion_integral(spec: PolynomialSpec) -> float:
    """Integral of ``(q_1 + ... + q_N)^k`` by binomial recursion over variables.

    ``I_j^m = sum_{m'} C(m, m') I_{j-1}^{m'} mu_j^{m - m'}`` where
    ``mu_j^m`` is the quadrature of ``q_j^m``. Costs ``O(N k^2)``.
    """
    q = spec.q[0]
    if not np.array_equal(spec.q, np.broadcast_to(q, spec.q.shape)):
        raise ValueError("recursion needs identical rows (a power polynomial)")
    k = spec.k
    w = spec.rule.weights
    powers = q[:, :, None] ** np.arange(k + 1)
    moments = np.einsum("p,jpm->jm", w, powers)
    binom = binomial_table(k)
    current = moments[0]
    for mu in moments[1:]:
        nxt = np.empty(k + 1)
        for m in range(k + 1):
            nxt[m] = np.sum(binom[m, : m + 1] * current[: m + 1] * mu[m::-1])
        current = nxt
    return float(current[k])


def exact_projectors(i: int, j: int, k: int, N: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Projector pair compressing ``i`` rows to ``i + 1`` power states.

    ``P_L[a, b, c]`` (shape ``i x 2 x (i+1)``) maps the compressed state of
    the first ``i - 1`` rows ``a`` and row ``i``'s control ``b`` to ``c``:
    ``c = a`` when ``b = 0`` and ``c = i`` when ``a = i - 1, b = 1``.
    ``P_R[c, b, a]`` (shape ``(i+1) x 2 x i``) is one where ``a + b = c``.
    Rows and columns are counted from 1.
    """
    if not 2 <= i <= k:
        raise ValueError(f"row index must satisfy 2 <= i <= k={k}, got {i}")
    if j < 1 or (N is not None and j > N):
        raise ValueError(f"column index {j} out of range")
    p_left = np.zeros((i, 2, i + 1))
    for a in range(i):
        p_left[a, 0, a] = 1.0
    p_left[i - 1, 1, i] = 1.0
    p_right = np.zeros((i + 1, 2, i))
    for a in range(i):
        for b in range(2):
            p_right[a + b, b, a] = 1.0
    return p_left, p_right


def insert_all_projectors(tn: TensorNetwork, k: int, N: int, keep: int | None = None) -> TensorNetwork:
    """Splice ``P_L[i,j]``/``P_R[i,j]`` into every horizontal bond of ``polynomial_network``.

    For each bond after column ``j`` the pairs for rows ``i = 2..k`` are
    inserted in order, each acting on the compressed leg left by the
    previous pair and on row ``i``'s bond. ``keep`` truncates every inner
    leg to its first ``keep`` states, used to show the rank is tight.
    """
    for j in range(N - 1):
        prev = f"h0,{j}"
        for i in range(2, k + 1):
            p_left, p_right = exact_projectors(i, j + 1, k, N)
            inner = f"P{i},{j}"
            if keep is not None and keep < i + 1:
                p_left, p_right = p_left[:, :, :keep], p_right[:keep]
            row_bond = f"h{i - 1},{j}"
            tl = Tensor([prev, row_bond, inner], p_left)
            tr = Tensor([inner, row_bond, prev], p_right)
            tn = insert_projector_pair(tn, [prev, row_bond], tl, tr)
            prev = inner
    return tn


def column_transfer_integral(spec: PolynomialSpec) -> float:
    """Exact integral by sweeping columns with a ``2^k`` control-state vector.

    Independent of the row-wise boundary contraction: the state holds one
    amplitude per joint configuration of all ``k`` running sums.
    """
    k, N, G = spec.q.shape
    w = spec.rule.weights
    state = np.zeros(2**k)
    state[0] = 1.0
    bits = (np.arange(2**k)[:, None] >> np.arange(k)) & 1
    for j in range(N):
        # an unset row may stay unset (factor 1) or take q_ji; a set row stays set
        q = spec.q[:, j, :]
        nxt = np.zeros(2**k)
        for src in range(2**k):
            if state[src] == 0.0:
                continue
            free = np.flatnonzero(bits[src] == 0)
            for sub in range(2 ** len(free)):
                add = free[(sub >> np.arange(len(free))) & 1 == 1]
                dst = src | int(np.sum(1 << add)) if len(add) else src
                vals = np.prod(q[add], axis=0) if len(add) else np.ones(G)
                nxt[dst] += state[src] * np.dot(w, vals)
        state = nxt
    return float(state[-1])


# --------------------------------------------------------------------------
# continuous sine factors
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SinPolynomial:
    """``q_ji(x) = sin(2 pi (x + a[i, j])) + c`` on ``[0, 1]``."""

    a: np.ndarray
    c: float

    @property
    def k(self) -> int:
        return self.a.shape[0]

    @property
    def N(self) -> int:
        return self.a.shape[1]

    def sample(self, rule: QuadratureRule) -> PolynomialSpec:
        x = rule.nodes
        q = np.sin(2.0 * np.pi * (x[None, None, :] + self.a[:, :, None])) + self.c
        return PolynomialSpec(q, rule)

    def gauss(self, G: int) -> PolynomialSpec:
        return self.sample(gauss_legendre(G, (0.0, 1.0)))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Vectorized ``f`` at points given as rows of an ``(n, N)`` array."""
        s = np.sin(2.0 * np.pi * (points[:, None, :] + self.a[None])) + self.c
        return np.prod(s.sum(axis=2), axis=1)

    def exact_integral(self) -> float:
        """Closed-form value, up to roundoff.

        Each variable enters as a trigonometric polynomial of frequency at
        most ``k``, and the equal-weight midpoint rule with ``k + 1`` nodes
        integrates every such polynomial over a full period exactly.
        """
        return column_transfer_integral(self.sample(uniform_rule(self.k + 1, (0.0, 1.0))))


def make_sin_polynomial(N: int, k: int, c: float, seed: int) -> SinPolynomial:
    rng = make_rng(seed)
    return SinPolynomial(rng.uniform(0.0, 1.0, size=(k, N)), float(c))
