"""Squared MERA-structured functions.

A binary 1D MERA over ``N = 2^L`` qubits gives amplitudes ``C_i``; the
function is ``f(x) = sum_i C_i prod_n g(x_n)^{i_n}``. Integrating ``|f|^2``
turns every leaf into the Gram matrix ``M = [[int 1, int g], [int g, int g^2]]``.
With ``g`` normalised so that ``M = 2 I`` the unitaries and isometries cancel
in pairs and the integral is exactly ``2^N``.

This is a 1D binary MERA; the 2D version does not fit on a desk, while the
cancellation argument is the same in any dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from actn.circuit import QuadratureRule, gauss_legendre, make_rng
from actn.network import TensorNetwork, contract_exact
from actn.tensor import Tensor


@dataclass
class MeraLayer:
    """One coarse-graining level acting on ``2 * len(isometries)`` sites.

    ``disentanglers[s]`` (4x4, orthogonal) acts on sites ``(2s+1, 2s+2 mod L)``
    and is empty when the level has only two sites. ``isometries[s]`` (4x2)
    maps the pair ``(2s, 2s+1)`` to one coarse site.
    """

    disentanglers: list[np.ndarray]
    isometries: list[np.ndarray]

    @property
    def n_sites(self) -> int:
        return 2 * len(self.isometries)


@dataclass
class MeraSpec:
    N: int
    layers: list[MeraLayer]  # finest first
    top: np.ndarray
    g: np.ndarray
    rule: QuadratureRule

    @property
    def G(self) -> int:
        return self.rule.G


def _orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def normalized_g(rule: QuadratureRule, rng, degree: int = 3) -> np.ndarray:
    """Random Legendre combination with ``sum w g = 0`` and ``sum w g^2 = 2``.

    Legendre polynomials of degree >= 1 integrate to zero exactly under a
    Gauss-Legendre rule, so only the scale needs adjusting.
    """
    lo, hi = rule.interval
    t = (2.0 * rule.nodes - lo - hi) / (hi - lo)
    degree = max(1, min(degree, 2 * rule.G - 1))
    coef = np.concatenate([[0.0], rng.standard_normal(degree)])
    g = np.polynomial.legendre.legval(t, coef)
    return g * np.sqrt(2.0 / np.dot(rule.weights, g**2))


def make_mera(N: int, G: int, seed: int) -> MeraSpec:
    """Random binary MERA over ``N = 2^L`` leaves with a normalised ``g``."""
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of two >= 2, got {N}")
    if G < 2:
        raise ValueError("g cannot be normalised with fewer than two nodes")
    rng = make_rng(seed)
    layers = []
    L = N
    while L > 1:
        dis = [_orthogonal(rng, 4) for _ in range(L // 2)] if L > 2 else []
        iso = [_orthogonal(rng, 4)[:, :2] for _ in range(L // 2)]
        layers.append(MeraLayer(dis, iso))
        L //= 2
    top = rng.standard_normal(2)
    rule = gauss_legendre(G, (-1.0, 1.0))
    return MeraSpec(N, layers, top / np.linalg.norm(top), normalized_g(rule, rng), rule)


def gram_matrix(spec: MeraSpec) -> np.ndarray:
    w, g = spec.rule.weights, spec.g
    s0, s1, s2 = np.sum(w), np.dot(w, g), np.dot(w, g * g)
    return np.array([[s0, s1], [s1, s2]])


def check_mera_spec(spec: MeraSpec, tol: float = 1e-10) -> None:
    """Raise ``ValueError`` unless layers are orthogonal and ``g`` is normalised."""
    eye2, eye4 = np.eye(2), np.eye(4)
    if len(spec.g) != spec.G:
        raise ValueError("g must be sampled on the rule's nodes")
    L = spec.N
    for n, layer in enumerate(spec.layers):
        if layer.n_sites != L:
            raise ValueError(f"layer {n} acts on {layer.n_sites} sites, expected {L}")
        if len(layer.disentanglers) != (L // 2 if L > 2 else 0):
            raise ValueError(f"layer {n} has {len(layer.disentanglers)} disentanglers")
        for u in layer.disentanglers:
            if np.max(np.abs(u @ u.T - eye4)) > 1e-12:
                raise ValueError(f"layer {n}: disentangler is not orthogonal")
        for v in layer.isometries:
            if v.shape != (4, 2) or np.max(np.abs(v.T @ v - eye2)) > 1e-12:
                raise ValueError(f"layer {n}: isometry does not satisfy V^T V = I")
        L //= 2
    if L != 1:
        raise ValueError("layers do not coarse-grain to a single site")
    if abs(np.linalg.norm(spec.top) - 1.0) > 1e-12:
        raise ValueError("top vector is not normalised")
    w, g = spec.rule.weights, spec.g
    if abs(np.dot(w, g)) > tol:
        raise ValueError(f"sum w g = {np.dot(w, g):.3e}, expected 0")
    if abs(np.dot(w, g * g) - 2.0) > tol:
        raise ValueError(f"sum w g^2 = {np.dot(w, g * g):.6g}, expected 2")


def mera_state(spec: MeraSpec) -> np.ndarray:
    """Amplitudes ``C`` as an ``N``-axis array, by descending from the top."""
    psi = spec.top.copy()
    for layer in reversed(spec.layers):
        L = layer.n_sites
        # one coarse axis becomes two fine axes
        for s, v in enumerate(layer.isometries):
            psi = np.tensordot(psi, v.reshape(2, 2, 2), axes=(2 * s, 2))
            psi = np.moveaxis(psi, (-2, -1), (2 * s, 2 * s + 1))
        for s, u in enumerate(layer.disentanglers):
            a, b = 2 * s + 1, (2 * s + 2) % L
            psi = np.tensordot(psi, u.reshape(2, 2, 2, 2), axes=((a, b), (2, 3)))
            psi = np.moveaxis(psi, (-2, -1), (a, b))
    return psi


def mera_trace(spec: MeraSpec) -> float:
    """``sum_i |C_i|^2`` by explicit state construction."""
    psi = mera_state(spec)
    return float(np.sum(psi * psi))


def naive_integral(spec: MeraSpec) -> float:
    """``<C| M^{(x)N} |C>`` from the full amplitude array."""
    psi = mera_state(spec)
    m = gram_matrix(spec)
    out = psi
    for ax in range(psi.ndim):
        out = np.moveaxis(np.tensordot(m, out, axes=(1, ax)), 0, ax)
    return float(np.sum(psi * out))


def _factor_pair(op4: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Split a two-site operator into ``A (x) B``, failing if its Schmidt rank exceeds one."""
    reshuffled = op4.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(reshuffled)
    if s[0] == 0.0:
        return np.zeros((2, 2)), np.zeros((2, 2))
    if s[1] > tol * s[0]:
        raise ValueError("ascended operator lost its product form")
    return (u[:, 0] * s[0]).reshape(2, 2), vh[0].reshape(2, 2)


def structured_integral(spec: MeraSpec, tol: float = 1e-10) -> float:
    """Ascend the product operator ``M^{(x)N}`` layer by layer.

    Each disentangler meets its conjugate: ``U^T (A (x) B) U`` stays a product
    while the leaf operators are multiples of the identity. Isometries
    then fold pairs into single sites, ending at ``top^T O top``.
    """
    check_mera_spec(spec, tol)
    ops = [gram_matrix(spec)] * spec.N
    for layer in spec.layers:
        L = layer.n_sites
        ops = list(ops)
        for s, u in enumerate(layer.disentanglers):
            a, b = 2 * s + 1, (2 * s + 2) % L
            ops[a], ops[b] = _factor_pair(u.T @ np.kron(ops[a], ops[b]) @ u, tol)
        ops = [v.T @ np.kron(ops[2 * s], ops[2 * s + 1]) @ v for s, v in enumerate(layer.isometries)]
    return float(spec.top @ ops[0] @ spec.top)


def mera_network(spec: MeraSpec, leaf: np.ndarray | None = None) -> TensorNetwork:
    """Closed bra-ket network ``<C| leaf^{(x)N} |C>``; the Gram matrix by default."""
    leaf = gram_matrix(spec) if leaf is None else leaf
    tensors, tags = [Tensor(["top"], spec.top)], ["top"]
    names = ["top"]
    for n, layer in enumerate(reversed(spec.layers)):
        lvl = len(spec.layers) - 1 - n
        L = layer.n_sites
        fine = []
        for s, v in enumerate(layer.isometries):
            a, b = f"i{lvl},{2 * s}", f"i{lvl},{2 * s + 1}"
            tensors.append(Tensor([a, b, names[s]], v.reshape(2, 2, 2)))
            tags.append("isometry")
            fine += [a, b]
        for s, u in enumerate(layer.disentanglers):
            a, b = 2 * s + 1, (2 * s + 2) % L
            out_a, out_b = f"u{lvl},{a}", f"u{lvl},{b}"
            tensors.append(Tensor([out_a, out_b, fine[a], fine[b]], u.reshape(2, 2, 2, 2)))
            tags.append("disentangler")
            fine[a], fine[b] = out_a, out_b
        names = fine
    bra = [t.rename({n: n + "'" for n in t.legs}) for t in tensors]
    leaves = [Tensor([n, n + "'"], leaf) for n in names]
    return TensorNetwork(tensors + bra + leaves, tags=tags + tags + ["leaf"] * len(leaves))


def network_integral(spec: MeraSpec) -> float:
    return contract_exact(mera_network(spec)).value
