import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actn.circuit import add_tensor, cnot_tensor, function_tensor, gauss_legendre, make_rng, uniform_rule
from actn.expr import (
    Add,
    CompilationEnv,
    Constant,
    ExprSyntaxError,
    FunctionRef,
    Mul,
    Pow,
    compile,
    evaluate_at,
    integrate,
    interpret_point,
    parse,
    to_text,
    variables,
)
from actn.integrands.oracle import expr_bruteforce
from actn.network import TensorNetwork, contract_network

f_x, g_y, h_z = FunctionRef("f", "x"), FunctionRef("g", "y"), FunctionRef("h", "z")


def test_parse_examples():
    assert parse("f(x)*g(y)") == Mul(f_x, g_y)
    assert parse("(f(x)+g(y))^3") == Pow(Add(f_x, g_y), 3)
    assert parse("f(x)+g(y)*h(z)") == Add(f_x, Mul(g_y, h_z))


def test_parse_associativity_and_literals():
    assert parse("f(x)+g(y)+h(z)") == Add(Add(f_x, g_y), h_z)
    assert parse("f(x)^2^3") == Pow(Pow(f_x, 2), 3)
    assert parse(" 2.5 * -1e-1 ") == Mul(Constant(2.5), Constant(-0.1))
    assert parse("f(x)+1") == Add(f_x, Constant(1.0))


@pytest.mark.parametrize(
    "text,offset",
    [("f(x)+", 5), ("f(x", 3), ("f(x)^0", 5), ("f(x)^1.5", 5), ("f(x))", 4), ("f(x) $", 5), ("(f(x)", 5), ("3 f(x)", 2)],
)
def test_syntax_errors_carry_offsets(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset
    assert "expected" in str(info.value)


def names():
    return st.sampled_from(["f", "g", "h", "p"])


def asts(max_leaves=12):
    leaf = st.one_of(
        st.builds(FunctionRef, names(), st.sampled_from(["x", "y", "z"])),
        st.builds(Constant, st.floats(-3, 3, allow_nan=False).map(lambda v: round(v, 3))),
    )
    return st.recursive(
        leaf,
        lambda kids: st.one_of(
            st.builds(Add, kids, kids), st.builds(Mul, kids, kids), st.builds(Pow, kids, st.integers(1, 3))
        ),
        max_leaves=max_leaves,
    )


@settings(max_examples=200, deadline=None)
@given(asts())
def test_print_parse_roundtrip(ast):
    assert parse(to_text(ast)) == ast


def make_env(ast, seed):
    rng = make_rng(seed)
    grids = {"x": gauss_legendre(3, (0, 1)), "y": gauss_legendre(3, (0, 1)), "z": gauss_legendre(3, (0, 1))}
    bindings = {n: rng.uniform(-1, 1, 3) for n in "fghp"}
    return CompilationEnv(bindings, grids)


@settings(max_examples=100, deadline=None)
@given(asts(max_leaves=8), st.integers(0, 1000))
def test_compile_evaluate_soundness(ast, seed):
    env = make_env(ast, seed)
    tn = compile(ast, env)
    vs = variables(ast)
    for p in itertools.product(range(3), repeat=len(vs)):
        point = dict(zip(vs, p))
        ref = interpret_point(ast, env, point)
        got = evaluate_at(tn, point)
        assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


def test_open_legs_and_copy_counts():
    env = make_env(None, 1)
    tn = compile(parse("f(x)*g(y)"), env)
    assert sorted(tn.open_legs) == ["x", "y"] and len(tn) == 2
    tn = compile(parse("f(x)+g(x)"), env)
    assert sorted(tn.open_legs) == ["@out", "x"]
    assert tn.tags.count("copy") == 1
    tn = compile(parse("(f(x)+g(y))*(h(x)+p(y))*(f(x)+g(y))"), env)
    # arity-4 COPY per variable, as two chained arity-3 COPYs
    assert tn.tags.count("copy") == 4
    assert sorted(tn.open_legs) == ["x", "y"]


def test_pow_expands_to_copies():
    env = make_env(None, 2)
    tn = compile(parse("f(x)^3"), env)
    assert tn.tags.count("function") == 3 and tn.tags.count("copy") == 2
    assert evaluate_at(tn, {"x": 1}) == pytest.approx(env.bindings["f"][1] ** 3, rel=1e-14)


def test_evaluate_examples():
    env = make_env(None, 3)
    b = env.bindings
    assert evaluate_at(compile(parse("f(x)"), env), {"x": 2}) == b["f"][2]
    assert evaluate_at(compile(parse("f(x)+g(y)"), env), {"x": 0, "y": 1}) == pytest.approx(b["f"][0] + b["g"][1])
    with pytest.raises(KeyError):
        evaluate_at(compile(parse("f(x)+g(y)"), env), {"x": 0})


def test_random_depth4_expression_50_points():
    rng = make_rng(21)
    grids = {v: gauss_legendre(5, (0, 1)) for v in "xyz"}
    env = CompilationEnv({n: rng.uniform(-1, 1, 5) for n in "abcdefgh"}, grids)
    ast = parse("((a(x)+b(y))*(c(z)+d(x)) + e(y)*f(z)) * ((g(x)+h(y))^2 + 0.5)")
    tn = compile(ast, env)
    for _ in range(50):
        point = dict(zip("xyz", rng.integers(0, 5, 3).tolist()))
        ref = interpret_point(ast, env, point)
        assert abs(evaluate_at(tn, point) - ref) <= 1e-13 * max(1.0, abs(ref))


def test_loopy_three_factor_integral():
    rng = make_rng(6)
    rule = uniform_rule(6)
    names_ = ["f1", "g1", "f2", "g2", "f3", "g3"]
    env = CompilationEnv({n: rng.uniform(-1, 1, 6) for n in names_}, {"x": rule, "y": rule})
    ast = parse("(f1(x)+g1(y))*(f2(x)+g2(y))*(f3(x)+g3(y))")
    tn = compile(ast, env)
    rep = integrate(tn, env.grids)
    b, w = env.bindings, rule.weights
    ref = sum(
        w[i] * w[j] * np.prod([b[f"f{n}"][i] + b[f"g{n}"][j] for n in (1, 2, 3)]) for i in range(6) for j in range(6)
    )
    assert abs(rep.value - ref) <= 1e-12 * abs(ref)
    assert abs(expr_bruteforce(ast, env) - ref) <= 1e-13 * abs(ref)


def test_compile_errors():
    env = CompilationEnv({"f": np.ones(3)}, {"x": uniform_rule(3), "y": uniform_rule(4)})
    with pytest.raises(KeyError):
        compile(parse("q(x)"), env)
    with pytest.raises(KeyError):
        compile(parse("f(w)"), env)
    with pytest.raises(ValueError):
        compile(parse("f(y)"), env)


def test_constants_carry_no_variable_leg():
    env = make_env(None, 4)
    tn = compile(parse("2*f(x)"), env)
    assert tn.open_legs == ["x"]
    assert evaluate_at(tn, {"x": 1}) == pytest.approx(2 * env.bindings["f"][1])
    assert evaluate_at(compile(parse("3+f(x)"), env), {"x": 0}) == pytest.approx(3 + env.bindings["f"][0])


def test_cnot_free_compilation_equals_cnot_network():
    rng = make_rng(8)
    rule = uniform_rule(3)
    f, g = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
    env = CompilationEnv({"f": f, "g": g}, {"x": rule, "y": rule})
    tn = compile(parse("f(x)+f(x)*g(y)"), env)
    cnot = TensorNetwork(
        [function_tensor(f, var="x", control="a"), function_tensor(g, var="y", control="b"), cnot_tensor("abcd"),
         add_tensor(("c", "d", "o"))]
    )
    grid = contract_network(cnot).transpose(["x", "y", "o"]).data[..., 1]
    for i, j in itertools.product(range(3), repeat=2):
        assert evaluate_at(tn, {"x": i, "y": j}) == pytest.approx(grid[i, j], rel=1e-14, abs=1e-15)
