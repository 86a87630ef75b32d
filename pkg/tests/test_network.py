import itertools
import math

import numpy as np
import pytest

from actn.circuit import add_tensor, function_tensor, gauss_legendre, make_rng, mul_tensor
from actn.network import (
    ContractionReport,
    TensorNetwork,
    contract_exact,
    greedy_contract,
    insert_projector_pair,
    relative_error,
    report_from_value,
)
from actn.tensor import DimensionError, Tensor


def nested_tree(samples, rule):
    """((f1 f2 + f3) f4 + f5) f6 with every variable integrated."""
    ts = [function_tensor(s, var=f"x{i}", control=f"a{i}") for i, s in enumerate(samples)]
    ts += [Tensor([f"x{i}"], rule.weights) for i in range(6)]
    ts += [
        mul_tensor(("a0", "a1", "m1")),
        add_tensor(("m1", "a2", "s1")),
        mul_tensor(("s1", "a3", "m2")),
        add_tensor(("m2", "a4", "s2")),
        mul_tensor(("s2", "a5", "out")),
        Tensor(["out"], [0.0, 1.0]),
    ]
    return TensorNetwork(ts)


def test_tree_matches_bruteforce():
    rng = make_rng(0)
    rule = gauss_legendre(4, (0, 1))
    f = [rng.uniform(-1, 1, 4) for _ in range(6)]
    tn = nested_tree(f, rule)
    w = rule.weights
    total = math.fsum(
        math.prod(w[i] for i in p) * ((f[0][p[0]] * f[1][p[1]] + f[2][p[2]]) * f[3][p[3]] + f[4][p[4]]) * f[5][p[5]]
        for p in itertools.product(range(4), repeat=6)
    )
    rep = contract_exact(tn)
    assert abs(rep.value - total) <= 1e-12 * abs(total)
    # a tree never needs an intermediate of higher order than its largest input
    assert rep.max_intermediate_order <= 3


def test_single_scalar():
    assert contract_exact(TensorNetwork([Tensor((), -2.5)])).value == -2.5


def test_two_variable_loop_network():
    # (f1(x)+g1(y)) (f2(x)+g2(y)): two COPY pairs form a loop
    from actn.expr import CompilationEnv, compile, integrate, parse

    rng = make_rng(4)
    rule = gauss_legendre(5, (0, 1))
    env = CompilationEnv({n: rng.uniform(-1, 1, 5) for n in ["f1", "g1", "f2", "g2"]}, {"x": rule, "y": rule})
    rep = integrate(compile(parse("(f1(x)+g1(y))*(f2(x)+g2(y))"), env), env.grids)
    b = env.bindings
    w = rule.weights
    ref = sum(
        w[i] * w[j] * (b["f1"][i] + b["g1"][j]) * (b["f2"][i] + b["g2"][j]) for i in range(5) for j in range(5)
    )
    assert abs(rep.value - ref) <= 1e-12 * abs(ref)


def test_open_legs_rejected():
    with pytest.raises(ValueError):
        contract_exact(TensorNetwork([Tensor("i", [1.0, 2.0])]))


def test_network_validation():
    with pytest.raises(ValueError):
        TensorNetwork([Tensor("i", [1.0]), Tensor("i", [1.0]), Tensor("i", [1.0])])
    with pytest.raises(DimensionError):
        TensorNetwork([Tensor("i", [1.0]), Tensor("i", [1.0, 2.0])])


def random_network(seed):
    rng = make_rng(seed)
    ts = [
        Tensor("abc", rng.uniform(-1, 1, (2, 3, 2))),
        Tensor("cde", rng.uniform(-1, 1, (2, 2, 3))),
        Tensor("ea", rng.uniform(-1, 1, (3, 2))),
        Tensor("bdf", rng.uniform(-1, 1, (3, 2, 2))),
        Tensor("f", rng.uniform(-1, 1, 2)),
    ]
    return TensorNetwork(ts)


@pytest.mark.parametrize("seed", range(3))
def test_path_independence(seed):
    tn = random_network(seed)
    base = contract_exact(tn)
    for shuffle in range(10):
        assert relative_error(contract_exact(tn, shuffle_seed=shuffle), base) <= 1e-12


def test_log_scale_on_tensor_scaling():
    tn = random_network(7)
    base = contract_exact(tn)
    scaled = tn.replace(2, tn.tensors[2].scale(1e6))
    rep = contract_exact(scaled)
    assert rep.value_log - base.value_log == pytest.approx(math.log(1e6), abs=1e-13)
    assert rep.value_sign == base.value_sign


def test_large_magnitudes_do_not_overflow():
    ts = [Tensor([f"b{i}", f"b{i + 1}"], np.full((2, 2), 1e100)) for i in range(20)]
    ts = [Tensor(["b0"], [1.0, 1.0])] + ts + [Tensor(["b20"], [1.0, 1.0])]
    rep = contract_exact(TensorNetwork(ts))
    assert rep.value_log == pytest.approx(20 * math.log(1e100) + 21 * math.log(2), rel=1e-14)


def test_zero_network_short_circuits():
    tn = TensorNetwork([Tensor("a", [0.0, 0.0]), Tensor("a", [1.0, 2.0])])
    rep = contract_exact(tn)
    assert rep.value_sign == 0 and rep.value_log == -math.inf and rep.value == 0.0


def test_disconnected_pieces_multiply():
    tn = TensorNetwork([Tensor("a", [1.0, 2.0]), Tensor("a", [3.0, 4.0]), Tensor((), -2.0)])
    assert contract_exact(tn).value == pytest.approx(-22.0)


def test_relative_error_zero_reference():
    assert relative_error(report_from_value(0.25), report_from_value(0.0)) == 0.25
    assert relative_error(report_from_value(1.1), report_from_value(1.0)) == pytest.approx(0.1)
    assert ContractionReport(0.0, 1).value == 1.0


def chain(seed):
    rng = make_rng(seed)
    return TensorNetwork(
        [Tensor("ab", rng.uniform(-1, 1, (3, 4))), Tensor("bc", rng.uniform(-1, 1, (4, 2))), Tensor("ca", rng.uniform(-1, 1, (2, 3)))]
    )


def test_identity_projector_insertion():
    tn = chain(1)
    rng = make_rng(2)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    p_left, p_right = Tensor(["b", "k"], q), Tensor(["k", "b"], q.T)
    out = insert_projector_pair(tn, ["b"], p_left, p_right)
    assert len(out) == 5
    assert relative_error(contract_exact(out), contract_exact(tn)) <= 1e-13


def test_projector_errors():
    tn = chain(1)
    with pytest.raises(DimensionError):
        insert_projector_pair(tn, ["b"], Tensor(["b", "k"], np.eye(3)), Tensor(["k", "b"], np.eye(3)))
    with pytest.raises(KeyError):
        insert_projector_pair(tn, ["zz"], Tensor(["zz", "k"], np.eye(4)), Tensor(["k", "zz"], np.eye(4)))
    with pytest.raises(ValueError):
        insert_projector_pair(tn, ["b"], Tensor(["b", "a"], np.ones((4, 3))), Tensor(["a", "b"], np.ones((3, 4))))


def test_greedy_prefers_small_intermediates():
    a = Tensor("ij", np.ones((2, 50)))
    b = Tensor("jk", np.ones((50, 2)))
    c = Tensor("ki", np.ones((2, 2)))
    _, _, max_bond, order = greedy_contract([a, b, c])
    assert order == 2 and max_bond == 50
