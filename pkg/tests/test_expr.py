import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from herglotz.expr import (
    BinOp, Call, Const, Coord, DomainError, IntPow, Param, ParseError,
    StatePoint, UnboundParameterError, compile_components, coords, det_expr,
    differentiate, depends_on, eval_jet2, evaluate, evaluate_many,
    merge_params, parse, solve_cramer, substitute, unparse,
)
from herglotz import expr as ex


def pt(q, v, z):
    return StatePoint(np.atleast_1d(q), np.atleast_1d(v), z)


# ---------------------------------------------------------------------------
# Parsing


def test_parse_shapes_forced_by_grammar():
    e = parse("0.5*v1^2 - gam*z", n=1)
    expected = BinOp(
        "-",
        BinOp("*", Const(0.5), IntPow(Coord("v", 1), 2)),
        BinOp("*", Param("gam"), Coord("z")),
    )
    assert e == expected

    e2 = parse("exp(2*gam*q1)", n=1)
    expected2 = Call("exp", BinOp("*", BinOp("*", Const(2.0), Param("gam")),
                                  Coord("q", 1)))
    assert e2 == expected2


def test_parse_index_out_of_range():
    with pytest.raises(ParseError, match="out of range"):
        parse("v2 + q1", n=1)
    with pytest.raises(ParseError, match="out of range"):
        parse("q0", n=2)


def test_parse_errors_carry_offsets():
    with pytest.raises(ParseError) as err:
        parse("1 + * 2", n=1)
    assert err.value.offset == 4
    with pytest.raises(ParseError, match="unknown function"):
        parse("foo(q1)", n=1)
    with pytest.raises(ParseError, match="empty"):
        parse("   ", n=1)
    with pytest.raises(ParseError, match="integer"):
        parse("q1^2.5", n=1)
    with pytest.raises(ParseError):
        parse("(q1 + 2", n=1)


def test_parse_whitespace_and_exponent_numbers():
    assert parse(" 1e-2 * q1 ", n=1) == BinOp("*", Const(0.01), Coord("q", 1))
    assert parse("2.5e3", n=1) == Const(2500.0)


def test_unary_minus_binds_inside_power():
    # grammar: factor := unary ("^" integer)?, so -q1^2 is (-q1)^2
    assert parse("-q1^2", n=1) == IntPow(Call("neg", Coord("q", 1)), 2)


# ---------------------------------------------------------------------------
# Differentiation


def test_differentiate_linear_term():
    e = parse("0.5*v1^2 - gam*z", n=1)
    assert differentiate(e, "z") == parse("-gam", n=1)


def test_differentiate_chain_rule():
    e = parse("exp(2*gam*q1)", n=1)
    d = differentiate(e, "q1")
    expected = parse("2*gam*exp(2*gam*q1)", n=1)
    for qv in (0.0, 0.3, -1.2):
        p = pt(qv, 0.0, 0.0)
        assert evaluate(d, p, {"gam": 0.7}) == pytest.approx(
            evaluate(expected, p, {"gam": 0.7}), rel=1e-15)


def test_differentiate_independence():
    assert differentiate(parse("q1", n=1), "v1") == Const(0.0)


def test_second_derivatives_are_exact():
    e = parse("q1^3*v1 + tanh(z)", n=1)
    d2 = differentiate(differentiate(e, "q1"), "q1")
    p = pt(2.0, 5.0, 0.3)
    assert evaluate(d2, p) == pytest.approx(6 * 2.0 * 5.0, rel=1e-15)


# ---------------------------------------------------------------------------
# Evaluation


def test_evaluate_closed_form():
    e = parse("0.5*v1^2 - gam*z", n=1)
    assert evaluate(e, pt(0.0, 2.0, 1.0), {"gam": 0.1}) == pytest.approx(1.9, abs=1e-15)


def test_evaluate_identity_and_domain_error():
    assert evaluate(parse("z", n=1), pt(3.0, -4.0, 7.0)) == 7.0
    with pytest.raises(DomainError, match="log"):
        evaluate(parse("log(q1)", n=1), pt(-1.0, 0.0, 0.0))
    with pytest.raises(DomainError, match="division"):
        evaluate(parse("1/q1", n=1), pt(0.0, 0.0, 0.0))
    with pytest.raises(DomainError, match="sqrt"):
        evaluate(parse("sqrt(q1)", n=1), pt(-4.0, 0.0, 0.0))


def test_unbound_parameter():
    with pytest.raises(UnboundParameterError, match="gam"):
        evaluate(parse("gam*z", n=1), pt(0.0, 0.0, 1.0))


def test_evaluate_many_matches_scalar():
    e = parse("sin(q1)*v1 + exp(z)*gam - q1/(v1 + 3)", n=1)
    rng = np.random.default_rng(7)
    Q = rng.uniform(-1, 1, size=(64, 1))
    V = rng.uniform(-1, 1, size=(64, 1))
    Z = rng.uniform(-1, 1, size=64)
    batch = evaluate_many(e, Q, V, Z, {"gam": 1.3})
    for k in range(64):
        single = evaluate(e, pt(Q[k], V[k], Z[k]), {"gam": 1.3})
        assert batch[k] == pytest.approx(single, rel=1e-15)


def test_compile_components_matches_evaluate():
    exprs = [parse("0.5*v1^2 - gam*z", n=1), parse("tanh(q1*v1)", n=1)]
    fn = compile_components(exprs, n=1, params={"gam": 0.1})
    p = pt(0.4, 2.0, 1.0)
    out = fn(p.coords())
    assert out[0] == pytest.approx(evaluate(exprs[0], p, {"gam": 0.1}), rel=1e-15)
    assert out[1] == pytest.approx(evaluate(exprs[1], p, {"gam": 0.1}), rel=1e-15)
    with pytest.raises(DomainError):
        compile_components([parse("log(q1)", n=1)], n=1)((-1.0, 0.0, 0.0))


# ---------------------------------------------------------------------------
# Jets


def test_jet_of_z_is_unit_vector():
    value, grad, hess = eval_jet2(parse("z", n=1), pt(0.5, -2.0, 7.0))
    assert value == 7.0
    np.testing.assert_array_equal(grad, [0.0, 0.0, 1.0])
    np.testing.assert_array_equal(hess, np.zeros((3, 3)))


def test_jet_frozen_example():
    # expected values from the closed form: dv1 = v1, dz = -gam, d2v1v1 = 1
    e = parse("0.5*v1^2 - gam*z", n=1)
    value, grad, hess = eval_jet2(e, pt(0.0, 2.0, 1.0), {"gam": 0.1})
    assert value == pytest.approx(1.9)
    np.testing.assert_allclose(grad, [0.0, 2.0, -0.1], atol=1e-15)
    expected_h = np.zeros((3, 3))
    expected_h[1, 1] = 1.0
    np.testing.assert_allclose(hess, expected_h, atol=1e-15)


def test_jet_exp_at_zero():
    value, grad, hess = eval_jet2(parse("exp(q1)", n=1), pt(0.0, 0.0, 0.0))
    assert value == 1.0
    assert grad[0] == 1.0
    assert hess[0, 0] == 1.0


def test_hessian_is_symmetric_by_construction():
    e = parse("q1*v1^2*z + sin(q1*z)", n=1)
    _, _, hess = eval_jet2(e, pt(0.7, -1.2, 0.4))
    np.testing.assert_array_equal(hess, hess.T)


# ---------------------------------------------------------------------------
# Finite-difference oracle for the derivative jets


def central_fd_gradient(e, point, params, h=1e-5):
    flat = point.coords()
    n = point.n
    out = np.zeros(len(flat))
    for k in range(len(flat)):
        up, dn = flat.copy(), flat.copy()
        up[k] += h
        dn[k] -= h
        out[k] = (evaluate(e, StatePoint.from_coords(up, n), params)
                  - evaluate(e, StatePoint.from_coords(dn, n), params)) / (2 * h)
    return out


def central_fd_hessian(e, point, params, h=1e-5):
    flat = point.coords()
    n = point.n
    d = len(flat)
    out = np.zeros((d, d))
    f0 = evaluate(e, point, params)
    for k in range(d):
        up, dn = flat.copy(), flat.copy()
        up[k] += h
        dn[k] -= h
        out[k, k] = (evaluate(e, StatePoint.from_coords(up, n), params) - 2 * f0
                     + evaluate(e, StatePoint.from_coords(dn, n), params)) / h**2
    for a in range(d):
        for b in range(a + 1, d):
            pp, pm, mp, mm = (flat.copy() for _ in range(4))
            pp[[a, b]] += h
            pm[a] += h
            pm[b] -= h
            mp[a] -= h
            mp[b] += h
            mm[[a, b]] -= h
            val = (evaluate(e, StatePoint.from_coords(pp, n), params)
                   - evaluate(e, StatePoint.from_coords(pm, n), params)
                   - evaluate(e, StatePoint.from_coords(mp, n), params)
                   + evaluate(e, StatePoint.from_coords(mm, n), params)) / (4 * h**2)
            out[a, b] = out[b, a] = val
    return out


FD_EXPRS = [
    "0.5*v1^2 - gam*z",
    "q1^3*v1 - z^2 + gam*q1*v1*z",
    "exp(2*gam*q1) - v1^4",
    "sin(q1)*cos(v1) + tanh(z)",
    "exp(q1*v1) + q1^2*z",
]


@pytest.mark.parametrize("text", FD_EXPRS)
def test_symbolic_derivatives_match_finite_differences(text):
    e = parse(text, n=1)
    params = {"gam": 0.4}
    rng = np.random.default_rng(42)
    for _ in range(25):
        point = pt(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))
        _, grad, hess = eval_jet2(e, point, params)
        fd_g = central_fd_gradient(e, point, params)
        fd_h = central_fd_hessian(e, point, params)
        assert np.max(np.abs(grad - fd_g) / (1 + np.abs(grad))) <= 1e-6
        assert np.max(np.abs(hess - fd_h) / (1 + np.abs(hess))) <= 1e-4


@given(a=st.floats(-3, 3), b=st.floats(-3, 3),
       x=st.floats(-1, 1), y=st.floats(-1, 1), w=st.floats(-1, 1))
def test_differentiate_is_linear(a, b, x, y, w):
    f = parse("q1^2*v1 + sin(z)", n=1)
    g = parse("exp(q1) - v1^3*z", n=1)
    combo = Const(a) * f + Const(b) * g
    point = pt(x, y, w)
    for var in ("q1", "v1", "z"):
        lhs = evaluate(differentiate(combo, var), point)
        rhs = (a * evaluate(differentiate(f, var), point)
               + b * evaluate(differentiate(g, var), point))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# Printing round trip


def expr_strategy(n=2, max_depth=4):
    leaves = st.one_of(
        st.floats(min_value=0, max_value=9).map(lambda x: Const(round(x, 3))),
        st.sampled_from([Coord("q", 1), Coord("v", 1), Coord("q", 2),
                         Coord("v", 2), Coord("z"), Param("gam"), Param("m_0")]),
    )

    def extend(children):
        unary = children.flatmap(lambda e: st.sampled_from([
            ex.neg(e), ex.sin(e), ex.exp(e), ex.tanh(e),
            ex.intpow(e, 2), ex.intpow(e, 3), ex.intpow(e, -1),
        ]))
        binary = st.tuples(children, children).flatmap(lambda ab: st.sampled_from([
            ex.add(ab[0], ab[1]), ex.sub(ab[0], ab[1]),
            ex.mul(ab[0], ab[1]), ex.div(ab[0], ab[1]),
        ]))
        return st.one_of(unary, binary)

    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(expr_strategy())
def test_parse_unparse_round_trip(e):
    text = unparse(e)
    again = parse(text, n=2)
    assert again == e
    assert unparse(again) == text


def test_unparse_examples():
    e = parse("0.5*v1^2 - gam*z", n=1)
    assert parse(unparse(e), n=1) == e
    assert unparse(parse("-(q1 + z)", n=1)) == "-(q1 + z)"


# ---------------------------------------------------------------------------
# Substitution, structure queries, parameter plumbing


def test_substitute_coordinate():
    e = parse("0.5*v1^2 - gam*z", n=1)
    zeta = parse("z + v1", n=1)
    composed = substitute(e, Coord("z"), zeta)
    p = pt(0.0, 2.0, 1.0)
    assert evaluate(composed, p, {"gam": 0.1}) == pytest.approx(
        0.5 * 4 - 0.1 * (1.0 + 2.0))


def test_depends_on():
    e = parse("q1^2 + sin(z)*gam", n=2)
    assert depends_on(e, Coord("q", 1))
    assert not depends_on(e, Coord("v", 1))
    assert depends_on(e, Param("gam"))


def test_merge_params_conflicts():
    assert merge_params({"a": 1.0}, {"b": 2.0}) == {"a": 1.0, "b": 2.0}
    assert merge_params({"a": 1.0}, {"a": 1.0}) == {"a": 1.0}
    with pytest.raises(Exception, match="conflicting"):
        merge_params({"a": 1.0}, {"a": 2.0})
    with pytest.raises(Exception, match="finite"):
        merge_params({"a": math.inf})


def test_statepoint_validation():
    with pytest.raises(ValueError):
        StatePoint(np.array([1.0, 2.0]), np.array([1.0]), 0.0)
    with pytest.raises(ValueError):
        StatePoint(np.array([np.nan]), np.array([0.0]), 0.0)
    p = StatePoint.from_coords([1.0, 2.0, 3.0], 1)
    np.testing.assert_array_equal(p.coords(), [1.0, 2.0, 3.0])


# ---------------------------------------------------------------------------
# Symbolic linear algebra helpers


def test_det_expr_against_numpy():
    rng = np.random.default_rng(3)
    for m in (1, 2, 3, 4):
        mat = rng.uniform(-2, 2, size=(m, m))
        sym = [[Const(float(x)) for x in row] for row in mat]
        d = evaluate(det_expr(sym), pt(0.0, 0.0, 0.0))
        assert d == pytest.approx(np.linalg.det(mat), rel=1e-10)


def test_solve_cramer_against_numpy():
    rng = np.random.default_rng(4)
    mat = rng.uniform(-2, 2, size=(3, 3)) + 3 * np.eye(3)
    rhs = rng.uniform(-2, 2, size=3)
    sym = [[Const(float(x)) for x in row] for row in mat]
    srhs = [Const(float(x)) for x in rhs]
    sol, det = solve_cramer(sym, srhs)
    expected = np.linalg.solve(mat, rhs)
    point = pt(0.0, 0.0, 0.0)
    for k in range(3):
        assert evaluate(sol[k], point) == pytest.approx(expected[k], rel=1e-10)
    assert evaluate(det, point) == pytest.approx(np.linalg.det(mat), rel=1e-10)


def test_coords_order():
    cs = coords(2)
    assert [unparse(c) for c in cs] == ["q1", "q2", "v1", "v2", "z"]
