"""Brute-force full-grid weighted sums.

These loop over every one of the ``G^N`` grid points and evaluate the
integrand pointwise from its definition, sharing no code with the network
builders. Summation uses ``math.fsum`` so the result does not depend on
the visiting order.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

MAX_ORACLE_VARS = 6


class OracleUnavailable(ValueError):
    """Brute force was requested for a problem too large to enumerate."""


def _points(Ns: int, G: int):
    if Ns > MAX_ORACLE_VARS:
        raise OracleUnavailable(f"brute force is limited to N <= {MAX_ORACLE_VARS} variables, got {Ns}")
    return itertools.product(range(G), repeat=Ns)


def polynomial_bruteforce(spec) -> float:
    """``sum_p prod_j w[p_j] * prod_i sum_j q[i, j, p_j]``."""
    k, N, G = spec.q.shape
    w = spec.rule.weights
    terms = []
    for p in _points(N, G):
        weight = math.prod(w[pj] for pj in p)
        value = math.prod(sum(spec.q[i, j, p[j]] for j in range(N)) for i in range(k))
        terms.append(weight * value)
    return math.fsum(terms)


def gaussian_bruteforce(spec) -> float:
    """``sum_p prod_j w[p_j] * exp(-x_p^T A x_p)``."""
    x, w = spec.rule.nodes, spec.rule.weights
    A = spec.A
    N = spec.N
    terms = []
    for p in _points(N, spec.G):
        xp = x[list(p)]
        quad = sum(A[i, j] * xp[i] * xp[j] for i in range(N) for j in range(N))
        terms.append(math.prod(w[pj] for pj in p) * math.exp(-quad))
    return math.fsum(terms)


def mera_bruteforce(spec) -> float:
    """``sum_p prod_n w[p_n] * f(x_p)^2`` with ``f`` evaluated from the amplitudes."""
    from actn.integrands.mera import mera_state

    psi = mera_state(spec)
    w, g = spec.rule.weights, spec.g
    terms = []
    for p in _points(spec.N, spec.G):
        f = psi
        for pn in p:
            # the leading axis is always the next leaf
            f = np.tensordot(np.array([1.0, g[pn]]), f, axes=(0, 0))
        terms.append(math.prod(w[pn] for pn in p) * float(f) ** 2)
    return math.fsum(terms)


def expr_bruteforce(ast, env) -> float:
    """Weighted grid sum of a direct recursive interpretation of ``ast``."""
    from actn.expr import interpret_point, variables

    names = variables(ast)
    rules = [env.grids[v] for v in names]
    terms = []
    for p in _points(len(names), max(r.G for r in rules) if rules else 1):
        if any(pi >= r.G for pi, r in zip(p, rules)):
            continue
        point = dict(zip(names, p))
        weight = math.prod(r.weights[pi] for pi, r in zip(p, rules))
        terms.append(weight * interpret_point(ast, env, point))
    return math.fsum(terms)


MAX_ENUMERATED_POINTS = 2**22


def gaussian_log_gridsum(spec, chunk: int = 2**16) -> float:
    """Log of the Gaussian full-grid sum, enumerated in vectorized chunks.

    Reaches past ``MAX_ORACLE_VARS`` when ``G**N`` stays small (``G=2``
    with ``N=20`` is about a million points). Entries are summed in log
    space so large ``N`` cannot overflow.
    """
    from scipy.special import logsumexp

    x, logw = spec.rule.nodes, np.log(spec.rule.weights)
    N, G = spec.N, spec.G
    total = G**N
    if total > MAX_ENUMERATED_POINTS:
        raise OracleUnavailable(f"{G}^{N} grid points exceed the enumeration limit {MAX_ENUMERATED_POINTS}")
    radix = G ** np.arange(N - 1, -1, -1)
    parts = []
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        digits = (flat[:, None] // radix) % G
        xp = x[digits]
        quad = np.einsum("ni,ij,nj->n", xp, spec.A, xp)
        parts.append(logsumexp(logw[digits].sum(axis=1) - quad))
    return float(logsumexp(parts))
