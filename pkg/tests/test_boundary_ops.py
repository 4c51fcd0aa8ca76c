import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import circle_assembly, kite_assembly, theta
from imperfect_bem import ClearanceError, LayerOperators, eval_double_layer, eval_single_layer
from imperfect_bem.boundary_ops import log_weights, plemelj_residual, tangential_derivative
from imperfect_bem.verify import band_limited_density, jump_residual


@pytest.fixture(scope="module")
def circ():
    return LayerOperators.build(circle_assembly(0.5, 64))


@pytest.fixture(scope="module")
def kite64():
    return LayerOperators.build(kite_assembly(64))


@pytest.fixture(scope="module")
def kite128():
    return LayerOperators.build(kite_assembly(128))


def test_log_weights_integrate_log_sine_exactly():
    # int_0^{2pi} log(4 sin^2(s/2)) cos(m s) ds = -2 pi / |m|, and 0 for m = 0
    n = 32
    r = log_weights(n)
    s = 2 * np.pi * np.arange(n) / n
    assert np.sum(r) == pytest.approx(0.0, abs=1e-13)
    for m in (1, 2, 5, 15):
        assert np.sum(r * np.cos(m * s)) == pytest.approx(-2 * np.pi / m, rel=1e-12)


def test_single_layer_of_one_on_circle(circ):
    R = 0.5
    np.testing.assert_allclose(circ.S @ np.ones(64), R * np.log(R), rtol=1e-10)


def test_single_layer_of_one_on_unit_circle_vanishes():
    ops = LayerOperators.build(circle_assembly(1.0, 32))
    assert np.max(np.abs(ops.S @ np.ones(32))) < 1e-13


@settings(max_examples=20, deadline=None)
@given(R=st.floats(0.1, 0.9), m=st.integers(1, 20))
def test_single_layer_fourier_symbol(R, m):
    a = circle_assembly(R, 64)
    ops = LayerOperators.build(a)
    f = np.cos(m * theta(a))
    np.testing.assert_allclose(ops.S @ f, -(R / (2 * m)) * f, atol=1e-12)


def test_np_operator_on_circle(circ):
    a = circ.assembly
    np.testing.assert_allclose(circ.K @ np.ones(64), 0.5, rtol=1e-12)
    assert np.max(np.abs(circ.K @ np.cos(theta(a)))) < 1e-13


def test_np_of_one_on_kite(kite128):
    np.testing.assert_allclose(kite128.K @ np.ones(128), 0.5, rtol=1e-8)


def test_kstar_is_weighted_transpose(kite64):
    w = kite64.assembly.weights
    assert np.array_equal(kite64.Kstar, kite64.K.T * (w[None, :] / w[:, None]))


def test_operators_are_read_only(circ):
    with pytest.raises(ValueError):
        circ.S[0, 0] = 1.0


def test_plemelj_circle_and_kite_refinement(circ, kite64, kite128):
    assert plemelj_residual(circ) < 1e-10
    r64, r128 = plemelj_residual(kite64), plemelj_residual(kite128)
    assert r128 < 1e-5
    assert r64 / r128 >= 1e2


def test_single_layer_far_and_mean_value():
    a = circle_assembly(0.5, 64)
    one = np.ones(64)
    # total charge pi at distance 2
    assert eval_single_layer(a, one, [[2.0, 0.0]])[0] == pytest.approx(0.5 * np.log(2.0), rel=1e-13)
    # inside the circle the potential of a uniform density is constant
    np.testing.assert_allclose(eval_single_layer(a, one, [[0.0, 0.0], [0.1, 0.2]]), 0.5 * np.log(0.5), rtol=1e-12)


def test_single_layer_of_zero_mean_density_decays():
    a = circle_assembly(0.5, 64)
    phi = np.cos(theta(a))
    r = np.array([1e1, 1e2, 1e3])
    v = eval_single_layer(a, phi, np.stack([r, 0 * r], axis=-1))
    np.testing.assert_allclose(v * r, -0.5 * np.pi * 0.25 / np.pi, rtol=1e-10)


def test_double_layer_of_one_is_indicator():
    a = kite_assembly(128)
    v = eval_double_layer(a, np.ones(128), [[-0.1, 0.0], [0.05, 0.1], [2.0, 0.0], [0.0, -1.5]])
    np.testing.assert_allclose(v, [1.0, 1.0, 0.0, 0.0], atol=1e-12)


def test_double_layer_gradient_matches_finite_differences():
    a = kite_assembly(64)
    psi = np.sin(2 * a.components[0].t)
    p = np.array([[0.6, 0.3]])
    _, g = eval_double_layer(a, psi, p, True)
    h = 1e-5
    fd = [(eval_double_layer(a, psi, p + e) - eval_double_layer(a, psi, p - e))[0] / (2 * h)
          for e in (np.array([h, 0]), np.array([0, h]))]
    np.testing.assert_allclose(g[0], fd, rtol=1e-6)


def test_single_layer_gradient_matches_finite_differences():
    a = kite_assembly(64)
    phi = np.cos(3 * a.components[0].t)
    p = np.array([[-0.5, 0.6]])
    _, g = eval_single_layer(a, phi, p, True)
    h = 1e-5
    fd = [(eval_single_layer(a, phi, p + e) - eval_single_layer(a, phi, p - e))[0] / (2 * h)
          for e in (np.array([h, 0]), np.array([0, h]))]
    np.testing.assert_allclose(g[0], fd, rtol=1e-6)


def test_clearance_rule():
    a = circle_assembly(0.5, 64)
    with pytest.raises(ClearanceError, match="from the boundary") as exc:
        eval_single_layer(a, np.ones(64), [[0.505, 0.0]])
    assert exc.value.distance == pytest.approx(0.005, rel=1e-9)
    # upsampling shrinks the spacing so the same point becomes admissible
    v = eval_single_layer(a, np.cos(theta(a)), [[0.505, 0.0]], upsample=64)
    assert v[0] == pytest.approx(-0.25 * 0.5 / 0.505, rel=1e-10)


def test_tangential_derivative():
    R = 0.4
    a = circle_assembly(R, 64)
    th = theta(a)
    np.testing.assert_allclose(tangential_derivative(a, np.cos(th)), -np.sin(th) / R, atol=1e-12)
    assert np.max(np.abs(tangential_derivative(a, np.ones(64)))) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_tangential_derivative_is_skew(seed):
    a = kite_assembly(64)
    rng = np.random.default_rng(seed)
    f, g = band_limited_density(a, rng, 10), band_limited_density(a, rng, 10)
    w = a.weights
    lhs = np.sum(w * tangential_derivative(a, f) * g)
    rhs = -np.sum(w * f * tangential_derivative(a, g))
    assert lhs == pytest.approx(rhs, abs=1e-12 * np.sqrt(np.sum(w * f * f) * np.sum(w * g * g)))


@pytest.mark.parametrize("which", ["circle", "kite"])
def test_jump_relations(which, circ, kite128):
    ops = circ if which == "circle" else kite128
    psi = band_limited_density(ops.assembly, np.random.default_rng(7))
    assert jump_residual(ops, psi, nodes_per_curve=6) < 1e-6
