"""Elementary tensors of arithmetic circuits and quadrature rules.

Function tensors carry a variable leg (grid index) and optionally a
control leg of dimension 2: index 0 holds the constant 1, index 1 the
function value. Control tensors (add, mul, CNOT) act on control legs;
COPY and the cyclic addition tensor act on variable legs.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from actn.network import TensorNetwork
from actn.tensor import DimensionError, Tensor, contract


def make_rng(seed: int) -> np.random.Generator:
    """Seeded counter-based generator used for every random draw."""
    return np.random.Generator(np.random.Philox(seed))


def random_samples(rng: np.random.Generator, shape, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    return rng.uniform(low, high, size=shape)


def function_tensor(samples, with_control: bool = True, var: str = "x", control: str = "a") -> Tensor:
    """Tensor of a sampled single-variable function.

    With a control leg the result is ``G x 2`` with column 0 all ones and
    column 1 the samples; without one it is just the sample vector.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size == 0:
        raise ValueError("samples must be a nonempty 1-d sequence")
    if not with_control:
        return Tensor([var], samples)
    return Tensor([var, control], np.stack([np.ones_like(samples), samples], axis=1))


def constant_tensor(value: float, with_control: bool = True, control: str = "a") -> Tensor:
    """A scalar has no variable leg; with a control leg it is ``[1, value]``."""
    if not with_control:
        return Tensor((), value)
    return Tensor([control], [1.0, value])


def add_tensor(legs: Sequence[str] = ("a", "b", "c")) -> Tensor:
    """Control addition: one where ``a + b == c`` (not modulo 2)."""
    data = np.zeros((2, 2, 2))
    data[0, 0, 0] = data[0, 1, 1] = data[1, 0, 1] = 1.0
    return Tensor(legs, data)


def mul_tensor(legs: Sequence[str] = ("a", "b", "c")) -> Tensor:
    """Control multiplication: one where ``a == b == c``."""
    data = np.zeros((2, 2, 2))
    data[0, 0, 0] = data[1, 1, 1] = 1.0
    return Tensor(legs, data)


def copy_tensor(G: int, arity: int = 3, legs: Sequence[str] | None = None) -> Tensor:
    """Generalised Kronecker delta on ``arity`` legs of dimension ``G``."""
    if G < 1 or arity < 1:
        raise ValueError("G and arity must be positive")
    if legs is None:
        legs = [f"x{n}" for n in range(arity)]
    if len(legs) != arity:
        raise ValueError(f"{len(legs)} legs given for arity {arity}")
    data = np.zeros((G,) * arity)
    idx = np.arange(G)
    data[(idx,) * arity] = 1.0
    return Tensor(legs, data)


def cnot_tensor(legs: Sequence[str] = ("a", "b", "c", "d")) -> Tensor:
    """CNOT permutation ``(a, b) -> (c, d)`` with ``b`` as control.

    ``d = b`` and ``c = a XOR b``. Wired as ``F_a G_b CNOT (+)_{cd}`` the
    network evaluates to ``f + f g``.
    """
    data = np.zeros((2, 2, 2, 2))
    for a in range(2):
        for b in range(2):
            data[a, b, a ^ b, b] = 1.0
    return Tensor(legs, data)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    @property
    def G(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def gauss_legendre(G: int, interval: Sequence[float] = (-1.0, 1.0)) -> QuadratureRule:
    """G-point Gauss-Legendre rule mapped affinely onto ``interval``."""
    if G < 1:
        raise ValueError(f"quadrature order must be >= 1, got {G}")
    lo, hi = map(float, interval)
    x, w = np.polynomial.legendre.leggauss(G)
    half = 0.5 * (hi - lo)
    return QuadratureRule(lo + half * (x + 1.0), half * w, (lo, hi))


def uniform_rule(G: int, interval: Sequence[float] = (0.0, 1.0)) -> QuadratureRule:
    """Equal weights ``(hi - lo) / G`` with nodes at cell midpoints."""
    if G < 1:
        raise ValueError(f"grid size must be >= 1, got {G}")
    lo, hi = map(float, interval)
    h = (hi - lo) / G
    return QuadratureRule(lo + h * (np.arange(G) + 0.5), np.full(G, h), (lo, hi))


def integrate_leg(t: Tensor, leg: str, rule: QuadratureRule) -> Tensor:
    """Contract the quadrature weights into ``leg``, removing it."""
    if t.dim(leg) != rule.G:
        raise DimensionError(f"leg {leg!r} has dim {t.dim(leg)} but the rule has {rule.G} nodes")
    return contract(t, Tensor([leg], rule.weights))


def variable_add_tensor(G: int, legs: Sequence[str] = ("x", "y", "z")) -> Tensor:
    """Cyclic-grid addition on variable legs: one where ``z == x + y (mod G)``."""
    data = np.zeros((G, G, G))
    x, y = np.meshgrid(np.arange(G), np.arange(G), indexing="ij")
    data[x, y, (x + y) % G] = 1.0
    return Tensor(legs, data)


def convolution_network(f, g) -> TensorNetwork:
    """Network for the cyclic convolution ``sum_x f(x) g(y - x)``.

    ``F_{x a} G_{z b} (x)_{a b c} Z_{x z y}`` with the output control fixed
    to 1; the open leg is ``y``.
    """
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape:
        raise ValueError("f and g must live on the same grid")
    G = f.size
    return TensorNetwork(
        [
            function_tensor(f, var="x", control="a"),
            function_tensor(g, var="z", control="b"),
            mul_tensor(("a", "b", "c")),
            Tensor(["c"], [0.0, 1.0]),
            # y = x + z  <=>  z = y - x
            variable_add_tensor(G, ("x", "z", "y")),
        ],
        tags=["function", "function", "mul", "select", "variable_add"],
    )


def dft_matrices(G: int) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of the DFT kernel, ``cos`` and ``sin`` of ``2 pi k x / G``."""
    k = np.arange(G)
    phase = 2.0 * np.pi * np.outer(k, k) / G
    return np.cos(phase), np.sin(phase)


def dft_convolution(f, g) -> np.ndarray:
    """Cyclic convolution through the frequency domain, using real arithmetic only.

    With ``f^ = C f - i S f`` the product ``f^ g^`` is split into real and
    imaginary parts and transformed back with the transposed kernels.
    """
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    G = f.size
    C, S = dft_matrices(G)
    cf, sf, cg, sg = C @ f, S @ f, C @ g, S @ g
    re = cf * cg - sf * sg
    im_neg = cf * sg + sf * cg
    return (C.T @ re + S.T @ im_neg) / G
