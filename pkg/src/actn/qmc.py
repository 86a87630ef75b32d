"""Quasi-Monte-Carlo integration on Sobol points.

Points come from the unscrambled Sobol sequence starting at index 1 (the
all-zero corner is skipped). Values may be accumulated directly or, for
integrands given as ``log f``, in log space with
``log(e^a + e^b) = a + log1p(e^(b - a))`` for ``a >= b``.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import qmc

DEFAULT_BATCH = 10**6


def sobol_points(dim: int, start_index: int, count: int) -> np.ndarray:
    """Points ``start_index .. start_index + count - 1`` of the Sobol sequence, as rows."""
    if start_index < 1:
        raise ValueError("start_index must be >= 1 (index 0 is the skipped corner point)")
    if dim < 1 or dim > qmc.Sobol.MAXDIM:
        raise ValueError(f"dim must be in [1, {qmc.Sobol.MAXDIM}], got {dim}")
    if count < 0:
        raise ValueError("count must be nonnegative")
    engine = qmc.Sobol(dim, scramble=False)
    engine.fast_forward(start_index)
    with warnings.catch_warnings():
        # balance warnings concern sample sizes that are not powers of two
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(count)


def log_add(a: float, b: float) -> float:
    """``log(exp(a) + exp(b))`` without overflow."""
    if a < b:
        a, b = b, a
    if a == -math.inf:
        return a
    return a + math.log1p(math.exp(b - a))


@dataclass(frozen=True)
class QmcEstimate:
    """Running estimate of ``volume * mean(f)``.

    ``log_abs`` and ``sign`` describe the integral itself. For log-form
    integrands ``f > 0`` and ``sign`` is always 1.
    """

    n_samples: int
    log_abs: float
    sign: int
    domain_volume: float

    @property
    def value(self) -> float:
        return 0.0 if self.sign == 0 else self.sign * math.exp(self.log_abs)


def _affine(domain: Sequence[tuple[float, float]]):
    lo = np.array([d[0] for d in domain], dtype=np.float64)
    hi = np.array([d[1] for d in domain], dtype=np.float64)
    return lo, hi - lo, float(np.prod(hi - lo))


def qmc_sweep(
    evaluator: Callable[[np.ndarray], np.ndarray],
    domain: Sequence[tuple[float, float]],
    n: int,
    batch: int = DEFAULT_BATCH,
    log_form: bool = False,
    checkpoints: Sequence[int] | None = None,
) -> Iterator[QmcEstimate]:
    """Yield estimates at each checkpoint (every batch by default) up to ``n`` points.

    ``evaluator`` maps an ``(m, dim)`` array of points to ``m`` values (or
    ``m`` log-values when ``log_form``). Batch partial sums are combined
    in batch order so results do not depend on how batches are evaluated.
    """
    dim = len(domain)
    lo, width, volume = _affine(domain)
    log_vol = math.log(volume) if volume > 0 else -math.inf
    marks = sorted(set(checkpoints)) if checkpoints else None
    if marks and marks[-1] > n:
        raise ValueError("checkpoints beyond n")
    total, log_total = 0.0, -math.inf
    done = 0
    while done < n:
        m = min(batch, n - done)
        if marks:
            nxt = next(c for c in marks if c > done)
            m = min(m, nxt - done)
        pts = lo + width * sobol_points(dim, done + 1, m)
        vals = np.asarray(evaluator(pts), dtype=np.float64)
        if log_form:
            log_total = log_add(log_total, float(logsumexp(vals)))
        else:
            total += math.fsum(vals)
        done += m
        if marks is None or done in marks:
            if log_form:
                yield QmcEstimate(done, log_total - math.log(done) + log_vol, 1, volume)
            else:
                mean = total / done * volume
                sign = int(np.sign(mean))
                yield QmcEstimate(done, math.log(abs(mean)) if sign else -math.inf, sign, volume)


def qmc_integrate(
    evaluator: Callable[[np.ndarray], np.ndarray],
    dim: int,
    domain: Sequence[tuple[float, float]] | None,
    n: int,
    batch: int = DEFAULT_BATCH,
    log_form: bool = False,
) -> QmcEstimate:
    """Final estimate after ``n`` points; ``domain=None`` means the unit cube."""
    domain = [(0.0, 1.0)] * dim if domain is None else list(domain)
    if len(domain) != dim:
        raise ValueError(f"domain has {len(domain)} intervals for dim {dim}")
    if n < 1:
        raise ValueError("need at least one sample")
    *_, last = qmc_sweep(evaluator, domain, n, batch, log_form, checkpoints=[n])
    return last
