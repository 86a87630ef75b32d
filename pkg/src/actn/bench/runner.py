"""Execute a run configuration as a deterministic sweep."""

from __future__ import annotations

import json
import logging
import math
import time
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from actn import expr as ex
from actn.bench.config import ConfigError, RunConfig
from actn.bench.records import ConvergenceRecord
from actn.boundary import boundary_contract_banded, boundary_contract_rows
from actn.circuit import QuadratureRule, gauss_legendre, uniform_rule
from actn.integrands import gaussian, mera, oracle, polynomial
from actn.network import ContractionReport, report_from_value
from actn.qmc import qmc_sweep
from actn.tensor import TruncationSpec

log = logging.getLogger("actn.bench")

CONVERGED_FLAG = 1e-12


class NumericFailure(RuntimeError):
    """A contraction produced a non-finite value."""


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _check(report: ContractionReport, what: str) -> ContractionReport:
    if report.value_sign != 0 and not math.isfinite(report.value_log):
        raise NumericFailure(f"{what}: non-finite result")
    return report


def _poly_rule(cfg: RunConfig, G: int) -> QuadratureRule:
    if cfg.rule == "gauss":
        return gauss_legendre(G, (0.0, 1.0))
    return uniform_rule(G, (0.0, 1.0))


def _poly_spec(cfg: RunConfig, seed: int, G: int):
    rule = _poly_rule(cfg, G)
    if cfg.family == "polynomial-power":
        return polynomial.make_power_polynomial(cfg.N, cfg.k, G, seed, cfg.lam, rule)
    if cfg.family == "polynomial-perturbed":
        return polynomial.make_perturbed_polynomial(cfg.N, cfg.k, G, cfg.delta, seed, cfg.lam, rule)
    if cfg.family == "polynomial-general":
        return polynomial.make_polynomial(cfg.N, cfg.k, G, seed, cfg.lam, rule)
    sin = polynomial.make_sin_polynomial(cfg.N, cfg.k, cfg.c, seed)
    if cfg.rule == "uniform":
        return sin.sample(uniform_rule(G, (0.0, 1.0)))
    return sin.gauss(G)


def _rows(spec, chi):
    return boundary_contract_rows(polynomial.build_polynomial_tn(spec), TruncationSpec(chi))


def _gauss_spec(cfg, seed, G):
    return gaussian.make_gaussian(cfg.N, cfg.W, G, seed, cfg.delta)


def _banded(spec, chi):
    return boundary_contract_banded(gaussian.build_gaussian_tn(spec), TruncationSpec(chi))


def _expr_env(cfg: RunConfig, G: int):
    ast = ex.parse(cfg.expr)
    bindings = load_bindings(cfg.bindings) if cfg.bindings else {}
    lo, hi = parse_interval(cfg.interval)
    rule = uniform_rule(G, (lo, hi)) if cfg.rule == "uniform" else gauss_legendre(G, (lo, hi))
    env = ex.CompilationEnv(bindings, {v: rule for v in ex.variables(ast)})
    return ast, env


def load_bindings(path: str) -> dict[str, np.ndarray]:
    """JSON object mapping function names to sample lists."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read bindings {path!r}: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError("bindings file must hold a JSON object")
    return {str(k): np.asarray(v, dtype=np.float64) for k, v in raw.items()}


def parse_interval(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(s) for s in text.split(","))
    except ValueError:
        raise ConfigError(f"interval must be 'lo,hi', got {text!r}") from None
    if not hi > lo:
        raise ConfigError("interval must satisfy lo < hi")
    return lo, hi


def _bruteforce(cfg: RunConfig, seed: int, G: int) -> float:
    fam = cfg.family
    if fam.startswith("polynomial"):
        return oracle.polynomial_bruteforce(_poly_spec(cfg, seed, G))
    if fam == "gaussian":
        return oracle.gaussian_bruteforce(_gauss_spec(cfg, seed, G))
    if fam == "mera":
        return oracle.mera_bruteforce(mera.make_mera(cfg.N, G, seed))
    ast, env = _expr_env(cfg, G)
    return oracle.expr_bruteforce(ast, env)


def _tn(cfg: RunConfig, seed: int, G: int, chi: int) -> ContractionReport:
    fam = cfg.family
    if fam.startswith("polynomial"):
        return _rows(_poly_spec(cfg, seed, G), chi)
    if fam == "gaussian":
        return _banded(_gauss_spec(cfg, seed, G), chi)
    if fam == "mera":
        return report_from_value(mera.structured_integral(mera.make_mera(cfg.N, G, seed)))
    ast, env = _expr_env(cfg, G)
    return ex.integrate(ex.compile(ast, env), env.grids)


def _analytic(cfg: RunConfig, seed: int, G: int) -> ContractionReport:
    fam = cfg.family
    if fam == "polynomial-power":
        return report_from_value(polynomial.recursion_integral(_poly_spec(cfg, seed, G)))
    if fam == "polynomial-sin":
        return report_from_value(polynomial.make_sin_polynomial(cfg.N, cfg.k, cfg.c, seed).exact_integral())
    if fam == "gaussian":
        spec = _gauss_spec(cfg, seed, G)
        diag = np.diag(spec.A)
        if not np.any(spec.A - np.diag(diag)):
            # separable: a product of one-dimensional sums
            x = spec.rule.nodes
            return report_from_value(math.prod(spec.rule.integrate(np.exp(-a * x * x)) for a in diag))
    if fam == "mera":
        return ContractionReport(cfg.N * math.log(2.0), 1)
    raise ConfigError(f"no analytic reference for family {fam}")


def _grid_defines_instance(cfg: RunConfig) -> bool:
    return cfg.family in ("polynomial-power", "polynomial-perturbed", "polynomial-general")


def reference(cfg: RunConfig, seed: int, G: int) -> ContractionReport:
    """Reference value for one sweep cell, per ``cfg.reference``."""
    if cfg.reference == "brute-force":
        if cfg.N > oracle.MAX_ORACLE_VARS and cfg.family != "expr":
            raise oracle.OracleUnavailable(
                f"brute-force reference refused: N={cfg.N} exceeds {oracle.MAX_ORACLE_VARS} variables"
            )
        return report_from_value(_bruteforce(cfg, seed, G))
    if cfg.reference == "analytic":
        return _analytic(cfg, seed, G)
    g_ref = G if _grid_defines_instance(cfg) else max(cfg.G)
    ref = _check(_tn(cfg, seed, g_ref, max(cfg.chi)), "converged-tn reference")
    if ref.cumulative_discarded_weight > CONVERGED_FLAG:
        log.warning(
            "converged-tn reference for seed=%d G=%d discarded weight %.3e > %.0e",
            seed, g_ref, ref.cumulative_discarded_weight, CONVERGED_FLAG,
        )
    return ref


def _qmc_records(cfg: RunConfig, seed: int, ref: ContractionReport) -> list[ConvergenceRecord]:
    if cfg.family == "polynomial-sin":
        sin = polynomial.make_sin_polynomial(cfg.N, cfg.k, cfg.c, seed)
        evaluator, domain, log_form = sin.evaluate, [(0.0, 1.0)] * cfg.N, False
    elif cfg.family == "gaussian":
        spec = _gauss_spec(cfg, seed, cfg.G[0])
        evaluator, domain, log_form = gaussian.gaussian_log_density(spec.A), [(-1.0, 1.0)] * cfg.N, True
    else:
        raise ConfigError(f"quasi-MC is only defined for continuous families, not {cfg.family}")
    out = []
    t0 = time.perf_counter()
    for est in qmc_sweep(evaluator, domain, max(cfg.n_samples), cfg.batch, log_form, cfg.n_samples):
        report = ContractionReport(est.log_abs, est.sign)
        out.append(
            ConvergenceRecord.build(
                report, ref, family=cfg.family, seed=seed, method="qmc", chi=0, G=0,
                n_samples=est.n_samples, elapsed_seconds=time.perf_counter() - t0,
                max_bond_reached=0, discarded_weight=0.0,
            )
        )
    return out


def _cell(cfg: RunConfig, seed: int, G: int) -> list[ConvergenceRecord]:
    ref = reference(cfg, seed, G)
    records = []
    chis = [cfg.chi[0]] if cfg.family in ("mera", "expr") else cfg.chi
    for chi in chis:
        est, dt = _timed(lambda: _check(_tn(cfg, seed, G, chi), f"seed={seed} G={G} chi={chi}"))
        records.append(
            ConvergenceRecord.build(
                est, ref, family=cfg.family, seed=seed, method="tn", chi=chi, G=G, n_samples=0, elapsed_seconds=dt
            )
        )
    if cfg.family == "polynomial-power" and cfg.reference != "analytic":
        est, dt = _timed(lambda: report_from_value(polynomial.recursion_integral(_poly_spec(cfg, seed, G))))
        records.append(
            ConvergenceRecord.build(
                est, ref, family=cfg.family, seed=seed, method="recursion", chi=0, G=G, n_samples=0,
                elapsed_seconds=dt, max_bond_reached=0,
            )
        )
    if ref.value_sign == 0:
        log.warning("seed=%d G=%d: reference is exactly zero; relative_error holds the absolute error", seed, G)
    return records


def _cells(cfg: RunConfig):
    return [(seed, G) for seed in cfg.seed for G in cfg.G]


def run(cfg: RunConfig, sink: Callable[[ConvergenceRecord], None] | None = None, threads: int = 1) -> list[ConvergenceRecord]:
    """Run every ``(seed, G)`` cell, then quasi-MC per seed if ``n_samples`` is set.

    Cells may run on ``threads`` workers; records reach ``sink`` in sweep order.
    """
    out: list[ConvergenceRecord] = []

    def emit(recs):
        for r in recs:
            out.append(r)
            if sink is not None:
                sink(r)

    cells = _cells(cfg)
    for batch in _ordered(lambda c: _cell(cfg, *c), cells, threads):
        log.info("cell done: %d records", len(batch))
        emit(batch)
    if cfg.n_samples:
        for seed in cfg.seed:
            ref = reference(cfg, seed, max(cfg.G))
            emit(_qmc_records(cfg, seed, ref))
    return out


def run_oracle(cfg: RunConfig, sink=None, threads: int = 1) -> list[ConvergenceRecord]:
    """Brute-force values only, one record per cell."""
    if cfg.N > oracle.MAX_ORACLE_VARS and cfg.family != "expr":
        raise oracle.OracleUnavailable(f"brute force refused: N={cfg.N} exceeds {oracle.MAX_ORACLE_VARS} variables")
    out = []

    def cell(c):
        seed, G = c
        value, dt = _timed(lambda: _bruteforce(cfg, seed, G))
        rep = report_from_value(value)
        return ConvergenceRecord.build(
            rep, rep, family=cfg.family, seed=seed, method="brute", chi=0, G=G, n_samples=0,
            elapsed_seconds=dt, max_bond_reached=0,
        )

    for rec in _ordered(cell, _cells(cfg), threads):
        out.append(rec)
        if sink is not None:
            sink(rec)
    return out


def _ordered(fn, items, threads) -> Iterator:
    if threads <= 1:
        for it in items:
            yield fn(it)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(fn, items)
