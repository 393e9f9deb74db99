"""Reverse-mode engine checks: adjoints against central differences,
plus the kink and dispatch conventions the fitting code relies on."""

import numpy as np
import pytest

from fvcbfit import engine
from fvcbfit.engine import (
    Var, value, grad, exp, log, sqrt, sigmoid, relu,
    minimum, maximum, where, gather, segment_sum, vsum, detach,
)


def fd_grad(f, x, h=1e-6):
    """Central-difference gradient of scalar f at array x."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        step = h * max(1.0, abs(x[idx]))
        xp = x.copy(); xp[idx] += step
        xm = x.copy(); xm[idx] -= step
        g[idx] = (f(xp) - f(xm)) / (2.0 * step)
    return g


def check_against_fd(build, x0, rtol=1e-6, atol=1e-9):
    """build(x) must work for both a Var and a plain array."""
    leaf = Var(x0)
    out = build(leaf)
    (ga,) = grad(out, [leaf])
    gn = fd_grad(lambda x: float(value(build(x))), x0)
    np.testing.assert_allclose(ga, gn, rtol=rtol, atol=atol)


RNG = np.random.default_rng(7)


def test_arithmetic_adjoints_match_finite_differences():
    x0 = RNG.uniform(0.5, 2.0, size=6)
    c = RNG.uniform(0.5, 2.0, size=6)
    check_against_fd(lambda x: vsum(x * c + x / c - 3.0 * x + c / (x + 1.0)), x0)
    check_against_fd(lambda x: vsum((x - c) * (x - c)), x0)
    check_against_fd(lambda x: vsum(-x + 2.0 - (1.0 - x)), x0)


def test_power_adjoint():
    x0 = RNG.uniform(0.5, 2.0, size=5)
    check_against_fd(lambda x: vsum(x ** 2), x0)
    check_against_fd(lambda x: vsum(x ** 0.5), x0, rtol=1e-5)


def test_unary_adjoints_match_finite_differences():
    x0 = RNG.uniform(0.2, 1.5, size=8)
    check_against_fd(lambda x: vsum(exp(x)), x0)
    check_against_fd(lambda x: vsum(log(x)), x0)
    check_against_fd(lambda x: vsum(sqrt(x)), x0, rtol=1e-5)
    check_against_fd(lambda x: vsum(sigmoid(x)), x0)
    check_against_fd(lambda x: vsum(relu(x - 1.0)), x0)


def test_minimum_maximum_adjoints():
    a0 = RNG.uniform(0.0, 2.0, size=10)
    b0 = RNG.uniform(0.0, 2.0, size=10)
    a, b = Var(a0), Var(b0)
    out = vsum(minimum(a, b) + 0.5 * maximum(a, b))
    ga, gb = grad(out, [a, b])
    gna = fd_grad(lambda x: float(value(vsum(minimum(x, b0) + 0.5 * maximum(x, b0)))), a0)
    gnb = fd_grad(lambda x: float(value(vsum(minimum(a0, x) + 0.5 * maximum(a0, x)))), b0)
    np.testing.assert_allclose(ga, gna, rtol=1e-6, atol=1e-9)
    np.testing.assert_allclose(gb, gnb, rtol=1e-6, atol=1e-9)


def test_minimum_tie_routes_gradient_to_first_argument():
    a, b = Var(np.array([1.0, 2.0])), Var(np.array([1.0, 3.0]))
    ga, gb = grad(vsum(minimum(a, b)), [a, b])
    np.testing.assert_array_equal(ga, [1.0, 1.0])
    np.testing.assert_array_equal(gb, [0.0, 0.0])


def test_maximum_tie_routes_gradient_to_first_argument():
    a, b = Var(np.array([1.0, 2.0])), Var(np.array([1.0, 3.0]))
    ga, gb = grad(vsum(maximum(a, b)), [a, b])
    np.testing.assert_array_equal(ga, [1.0, 0.0])
    np.testing.assert_array_equal(gb, [0.0, 1.0])


def test_relu_subgradient_at_zero_is_zero():
    x = Var(np.array([-1.0, 0.0, 2.0]))
    (g,) = grad(vsum(relu(x)), [x])
    np.testing.assert_array_equal(g, [0.0, 0.0, 1.0])


def test_sqrt_subgradient_at_zero_is_zero():
    x = Var(np.array([0.0, 4.0]))
    (g,) = grad(vsum(sqrt(x)), [x])
    np.testing.assert_array_equal(g, [0.0, 0.25])


def test_sigmoid_is_stable_for_huge_arguments():
    v = np.array([-2000.0, -12.0, 0.0, 12.0, 2000.0])
    with np.errstate(over="raise"):
        out = sigmoid(v)
    assert out[0] == 0.0 and out[-1] == 1.0
    assert out[2] == 0.5
    np.testing.assert_allclose(out[1], 6.144174602214718e-06, rtol=1e-12)


def test_where_routes_gradient_to_taken_branch():
    a, b = Var(np.array([1.0, 2.0])), Var(np.array([3.0, 4.0]))
    cond = np.array([True, False])
    ga, gb = grad(vsum(where(cond, a, b)), [a, b])
    np.testing.assert_array_equal(ga, [1.0, 0.0])
    np.testing.assert_array_equal(gb, [0.0, 1.0])


def test_gather_accumulates_duplicate_indices():
    x = Var(np.array([1.0, 2.0, 3.0]))
    idx = np.array([0, 2, 2, 0, 0])
    out = vsum(gather(x, idx) * np.array([1.0, 10.0, 100.0, 1000.0, 10000.0]))
    (g,) = grad(out, [x])
    np.testing.assert_array_equal(g, [11001.0, 0.0, 110.0])


def test_segment_sum_forward_and_adjoint():
    x0 = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    starts = np.array([0, 2, 5])
    lengths = np.array([2, 3, 1])
    x = Var(x0)
    seg = segment_sum(x, starts, lengths)
    np.testing.assert_array_equal(value(seg), [3.0, 12.0, 6.0])
    w = np.array([1.0, 10.0, 100.0])
    (g,) = grad(vsum(seg * w), [x])
    np.testing.assert_array_equal(g, [1.0, 1.0, 10.0, 10.0, 10.0, 100.0])


def test_broadcast_gradients_unbroadcast_back():
    # scalar leaf spread over an array must receive the summed cotangent
    s = Var(np.array(2.0))
    arr = np.array([1.0, 2.0, 3.0])
    (g,) = grad(vsum(s * arr), [s])
    assert g.shape == ()
    assert g == 6.0


def test_ndarray_left_operand_defers_to_var():
    # numpy must not absorb the Var into an object array
    x = Var(np.array([1.0, 2.0]))
    c = np.array([5.0, 7.0])
    for expr in (c - x, c + x, c * x, c / x):
        assert isinstance(expr, Var)
    (g,) = grad(vsum(c - x), [x])
    np.testing.assert_array_equal(g, [-1.0, -1.0])


def test_detach_blocks_gradient_and_passes_values():
    x = Var(np.array([1.0, 2.0]))
    out = vsum(x * detach(x))  # d/dx of x * const(x) = const(x)
    (g,) = grad(out, [x])
    np.testing.assert_array_equal(g, [1.0, 2.0])
    plain = detach(np.array([3, 4]))
    assert isinstance(plain, np.ndarray) and plain.dtype == np.float64


def test_grad_returns_zeros_for_unreachable_leaf():
    x, y = Var(np.array([1.0])), Var(np.array([2.0]))
    gx, gy = grad(vsum(x * 2.0), [x, y])
    np.testing.assert_array_equal(gx, [2.0])
    np.testing.assert_array_equal(gy, [0.0])


def test_numpy_mode_dispatch_returns_plain_arrays():
    x = np.array([0.5, 1.5])
    for fn in (exp, log, sqrt, sigmoid, relu):
        assert isinstance(fn(x), np.ndarray)
    assert isinstance(minimum(x, 1.0), np.ndarray)
    assert isinstance(where(x > 1.0, x, 0.0), np.ndarray)
    assert isinstance(gather(x, np.array([1, 0])), np.ndarray)
    assert isinstance(vsum(x), float) or np.isscalar(vsum(x)) or isinstance(vsum(x), np.ndarray)


def test_shared_subexpression_accumulates_once_per_path():
    # y = x*x + 3x uses x twice; gradient 2x + 3
    x = Var(np.array([2.0]))
    (g,) = grad(vsum(x * x + 3.0 * x), [x])
    np.testing.assert_allclose(g, [7.0])


def test_deep_chain_does_not_recurse():
    # iterative traversal must survive graphs deeper than the recursion limit
    x = Var(np.array([1.0]))
    acc = x
    for _ in range(5000):
        acc = acc + x
    (g,) = grad(vsum(acc), [x])
    np.testing.assert_array_equal(g, [5001.0])


def test_composite_expression_matches_finite_differences():
    # shape of the real objective: min of rates, relu penalty, mse
    c = np.linspace(50.0, 1800.0, 40)
    meas = 30.0 * c / (c + 300.0)

    def build(vmax, jmax, rd):
        wc = vmax * c / (c + 600.0)
        wj = jmax * c / (4.0 * c + 300.0)
        w = minimum(wc, wj)
        pred = w * (1.0 - 42.75 / c) - rd
        resid = pred - meas
        pen = relu(gather(pred, np.array([39])) - 28.0)
        return vsum(resid * resid) / c.size + vsum(pen)

    x0 = np.array([100.0, 200.0, 1.5])
    leaves = [Var(np.array(v)) for v in x0]
    (gv, gj, gr) = grad(build(*leaves), leaves)
    for k, ga in enumerate((gv, gj, gr)):
        def f(xk, k=k):
            args = list(x0)
            args[k] = xk
            return float(value(build(*args)))
        gn = fd_grad(lambda x, k=k: f(float(x)), np.array(x0[k]))
        np.testing.assert_allclose(ga, gn, rtol=1e-5, atol=1e-8)
