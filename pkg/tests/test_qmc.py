import math

import mpmath
import numpy as np
import pytest

from actn.qmc import log_add, qmc_integrate, qmc_sweep, sobol_points


def test_sobol_first_points():
    np.testing.assert_array_equal(sobol_points(1, 1, 3)[:, 0], [0.5, 0.75, 0.25])
    np.testing.assert_array_equal(sobol_points(2, 1, 1)[0], [0.5, 0.5])


def test_sobol_is_deterministic_and_resumable():
    whole = sobol_points(5, 1, 64)
    np.testing.assert_array_equal(whole, sobol_points(5, 1, 64))
    np.testing.assert_array_equal(whole[20:], sobol_points(5, 21, 44))


def test_sobol_range():
    pts = sobol_points(10, 1, 4096)
    assert pts.min() >= 0.0 and pts.max() < 1.0


def test_sobol_argument_errors():
    with pytest.raises(ValueError):
        sobol_points(2, 0, 4)
    with pytest.raises(ValueError):
        sobol_points(0, 1, 4)


def test_constant_integrand_gives_volume():
    for n in (1, 7, 1000):
        est = qmc_integrate(lambda p: np.ones(len(p)), 3, None, n)
        assert est.value == 1.0 and est.n_samples == n
    est = qmc_integrate(lambda p: np.ones(len(p)), 2, [(0, 2), (-1, 2)], 50)
    assert est.value == pytest.approx(6.0, rel=1e-15)


def test_batching_does_not_change_the_estimate():
    f = lambda p: np.prod(np.cos(p), axis=1)  # noqa: E731
    a = qmc_integrate(f, 4, None, 5000, batch=5000)
    b = qmc_integrate(f, 4, None, 5000, batch=333)
    assert a.value == pytest.approx(b.value, rel=1e-14)


def test_sweep_checkpoints():
    marks = [10, 100, 1000]
    ests = list(qmc_sweep(lambda p: p[:, 0], [(0.0, 1.0)], 1000, batch=64, checkpoints=marks))
    assert [e.n_samples for e in ests] == marks
    assert abs(ests[-1].value - 0.5) < abs(ests[0].value - 0.5) + 1e-12


def test_separable_sine_converges():
    est = qmc_integrate(lambda p: np.prod(np.sin(2 * np.pi * p) + 0.5, axis=1), 10, None, 10**6)
    assert abs(est.value - 0.5**10) <= 1e-4


def test_log_add_matches_mpmath():
    for a, b in [(0.0, 0.0), (700.0, 699.0), (-1e3, 5.0), (1e4, 1e4 - 40)]:
        ref = float(mpmath.log(mpmath.exp(a) + mpmath.exp(b)))
        assert log_add(a, b) == pytest.approx(ref, rel=1e-15, abs=1e-15)
    assert log_add(-math.inf, 2.0) == 2.0
    assert log_add(-math.inf, -math.inf) == -math.inf


def test_log_form_does_not_overflow():
    # f = exp(800 + x) overflows directly; the log estimate must equal 800 + log of the exp(x) estimate
    est = qmc_integrate(lambda p: 800.0 + p[:, 0], 1, None, 4096, log_form=True, batch=1000)
    plain = qmc_integrate(lambda p: np.exp(p[:, 0]), 1, None, 4096)
    assert est.log_abs == pytest.approx(800.0 + math.log(plain.value), rel=1e-15)
    assert est.sign == 1
    ref = float(mpmath.log(mpmath.exp(800) * (mpmath.e - 1)))
    assert abs(est.log_abs - ref) <= 1e-3


def test_beats_pseudorandom_on_smooth_integrand():
    f = lambda p: np.prod(1 + 0.5 * (p - 0.5), axis=1)  # noqa: E731
    n = 2**14
    q_err = abs(qmc_integrate(f, 6, None, n).value - 1.0)
    rng = np.random.default_rng(0)
    mc_err = np.median([abs(np.mean(f(rng.random((n, 6)))) - 1.0) for _ in range(10)])
    assert q_err < mc_err / 10


def test_input_validation():
    with pytest.raises(ValueError):
        qmc_integrate(lambda p: p[:, 0], 2, [(0, 1)], 10)
    with pytest.raises(ValueError):
        qmc_integrate(lambda p: p[:, 0], 1, None, 0)
