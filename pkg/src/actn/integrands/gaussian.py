"""Gaussians restricted to the hypercube ``[-1, 1]^N``.

``Z = int exp(-x^T A x) dx`` factorizes into single-variable terms
``exp(-A_ii x_i^2)`` and pair terms ``exp(-(A_ij + A_ji) x_i x_j)``. Each
variable is shared by its own term and every pair it appears in, which is
what the COPY tensors of the network express. For a band of width ``W``
the pair terms form a quasi-1D strip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from actn.boundary import BandedNetwork
from actn.circuit import QuadratureRule, gauss_legendre, make_rng


@dataclass
class GaussianSpec:
    A: np.ndarray
    W: int
    rule: QuadratureRule

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=np.float64)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError("A must be square")
        if self.W < 0:
            raise ValueError("band width must be nonnegative")

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def G(self) -> int:
        return self.rule.G

    def is_banded(self) -> bool:
        i, j = np.nonzero(self.A)
        return bool(np.all(np.abs(i - j) <= self.W))


def make_banded_A(N: int, W: int, delta: float = 0.0, seed: int = 0) -> np.ndarray:
    """``A_W + delta * A~_W``: in-band entries uniform in ``[-1, 1]``, out-of-band scaled by ``delta``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    rng = make_rng(seed)
    band = rng.uniform(-1.0, 1.0, size=(N, N))
    rest = rng.uniform(-1.0, 1.0, size=(N, N))
    i, j = np.indices((N, N))
    inside = np.abs(i - j) <= W
    return np.where(inside, band, delta * rest)


def make_gaussian(N: int, W: int, G: int, seed: int, delta: float = 0.0) -> GaussianSpec:
    return GaussianSpec(make_banded_A(N, W, delta, seed), W, gauss_legendre(G, (-1.0, 1.0)))


def build_gaussian_tn(spec: GaussianSpec) -> BandedNetwork:
    """Coupling network of the Gaussian integral.

    ``diag[i] = w * exp(-A_ii x^2)`` carries the full quadrature weight of
    ``x_i``; ``couplings[i, j] = exp(-(A_ij + A_ji) x x^T)`` for every pair
    with a nonzero symmetric coupling. Call ``.to_network()`` for the named
    grid of site tensors.
    """
    x, w = spec.rule.nodes, spec.rule.weights
    A = spec.A
    diag = [w * np.exp(-A[i, i] * x**2) for i in range(spec.N)]
    couplings = {}
    for i in range(spec.N):
        for j in range(i + 1, spec.N):
            a = A[i, j] + A[j, i]
            if a != 0.0:
                couplings[(i, j)] = np.exp(-a * np.outer(x, x))
    return BandedNetwork(diag, couplings)


def gaussian_log_density(A: np.ndarray):
    """Vectorized ``x -> -x^T A x`` for QMC in log form; points are rows."""
    A = np.asarray(A, dtype=np.float64)

    def log_f(points: np.ndarray) -> np.ndarray:
        return -np.einsum("ni,ij,nj->n", points, A, points)

    return log_f
