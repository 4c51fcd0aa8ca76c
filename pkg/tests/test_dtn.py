import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import circle_assembly, kite_assembly, theta
from imperfect_bem import CapacityGuardError, LayerOperators, build_dtn, equilibrium, indicator_density, two_disks
from imperfect_bem.dtn import (
    dtn_min_eigenvalue,
    dtn_symmetry_residual,
    resolvent_apply,
    resolvent_expansion_residual,
    weighted_norm,
    weighted_resolvent_norm,
)
from imperfect_bem.fitting import loglog_slope

R = 0.5
LAM0 = -1 / (R * np.log(R))


def test_dtn_fourier_symbol(disk):
    a = disk.assembly
    th = theta(a)
    for m in (1, 2, 3, 7):
        f = np.cos(m * th)
        np.testing.assert_allclose(disk.matrix @ f, (m / R) * f, atol=1e-8 * m / R)
    np.testing.assert_allclose(disk.matrix @ np.ones(a.n_nodes), LAM0, rtol=1e-10)


def test_dtn_kernel_structure_two_disks():
    dtn = build_dtn(LayerOperators.build(two_disks(0.2, 0.15, 64)))
    a = dtn.assembly
    for j in range(2):
        e = dtn.indicator_densities[:, j]
        assert np.max(np.abs(dtn.matrix @ a.indicator(j) - e)) <= 1e-8 * np.max(np.abs(e))


def test_dtn_weighted_symmetry_and_positivity(kite):
    assert dtn_symmetry_residual(kite) < 1e-6
    assert dtn_min_eigenvalue(kite) >= -1e-8


def test_equilibrium_circle(disk):
    eq = equilibrium(disk)
    np.testing.assert_allclose(eq.phi0, 1 / (2 * np.pi * R), rtol=1e-12)
    # unit mass: S[phi0] = log(R) / (2 pi)
    assert eq.c0 == pytest.approx(np.log(R) / (2 * np.pi), rel=1e-12)


def test_equilibrium_two_components():
    ops = LayerOperators.build(two_disks(0.15, 0.2, 64))
    eq = equilibrium(ops)
    assert np.sum(ops.assembly.weights * eq.phi0) == pytest.approx(1.0, abs=1e-12)
    assert np.std(ops.S @ eq.phi0) <= 1e-8 * abs(eq.c0)
    np.testing.assert_allclose(ops.Kstar @ eq.phi0, 0.5 * eq.phi0, atol=1e-8 * np.max(eq.phi0))


def test_indicator_density_circle(disk):
    e = indicator_density(disk, 0)
    a = disk.assembly
    np.testing.assert_allclose(disk.ops.S @ e, -1.0, rtol=1e-12)
    assert a.integrals(e)[0] == pytest.approx(-2 * np.pi / np.log(R), rel=1e-12)
    assert a.integrals(e)[0] == pytest.approx(9.064720283654387, rel=1e-12)
    with pytest.raises(IndexError):
        indicator_density(disk, 1)


def test_indicator_density_eigenfunction_on_kite(kite):
    e = indicator_density(kite, 0)
    assert np.max(np.abs(kite.ops.Kstar @ e - 0.5 * e)) <= 1e-8 * np.max(np.abs(e))


def test_single_layer_of_e_inside_components():
    dtn = build_dtn(LayerOperators.build(two_disks(0.2, 0.1, 64)))
    from imperfect_bem import eval_single_layer

    e0 = dtn.indicator_densities[:, 0]
    v = eval_single_layer(dtn.assembly, e0, [[-0.25, 0.0], [-0.3, 0.05], [0.25, 0.0], [0.3, -0.05]])
    np.testing.assert_allclose(v[:2], -1.0, rtol=1e-10)
    assert v[2] == pytest.approx(v[3], rel=1e-10) and abs(v[2] + 1) > 1e-2


def test_resolvent_identity_and_symbol(disk):
    f = np.random.default_rng(0).standard_normal(disk.assembly.n_nodes)
    assert np.array_equal(resolvent_apply(disk, 0.0, f), f)
    psi = resolvent_apply(disk, 0.1, np.ones(disk.assembly.n_nodes))
    np.testing.assert_allclose(psi, 1 / (1 + 0.1 * LAM0), rtol=1e-10)
    assert psi[0] == pytest.approx(0.776073, abs=5e-7)
    with pytest.raises(ValueError):
        resolvent_apply(disk, -1.0, f)


def test_resolvent_factor_cached(disk):
    assert disk.resolvent_factor(0.3) is disk.resolvent_factor(0.3)


@settings(max_examples=15, deadline=None)
@given(gamma=st.floats(1e-4, 10.0), m=st.integers(1, 30))
def test_resolvent_symbol_on_modes(disk, gamma, m):
    f = np.sin(m * theta(disk.assembly))
    np.testing.assert_allclose(resolvent_apply(disk, gamma, f), f / (1 + gamma * m / R), atol=1e-9)


@pytest.mark.parametrize("n", [64, 128])
@pytest.mark.parametrize("geom", ["circle", "kite"])
def test_contraction(geom, n):
    a = circle_assembly(0.5, n) if geom == "circle" else kite_assembly(n)
    dtn = build_dtn(LayerOperators.build(a))
    for g in (1e-3, 1e-2, 1e-1, 1.0, 10.0):
        assert weighted_resolvent_norm(dtn, g) <= 1 + 1e-6


def test_quadratic_form_monotone(kite):
    rng = np.random.default_rng(3)
    w = kite.assembly.weights
    for _ in range(5):
        f = rng.standard_normal(kite.assembly.n_nodes)
        for g in (1e-2, 1.0):
            assert np.sum(w * f * resolvent_apply(kite, g, f)) <= np.sum(w * f * f) * (1 + 1e-12)


def test_resolvent_expansion_rates(disk):
    a = disk.assembly
    f = np.cos(theta(a))
    gs = np.geomspace(1e-1, 1e-3, 5)
    r0 = np.array([resolvent_expansion_residual(disk, g, f, 0) for g in gs])
    r1 = np.array([resolvent_expansion_residual(disk, g, f, 1) for g in gs])
    assert r0[-1] / gs[-1] == pytest.approx(2 * weighted_norm(a, f), rel=1e-2)
    assert loglog_slope(gs, r1).slope == pytest.approx(2.0, abs=0.1)
    assert resolvent_expansion_residual(disk, 0.0, f, 1) == 0.0


def test_resolvent_strong_convergence(kite):
    f = np.cos(2 * kite.assembly.components[0].t)
    gs = np.geomspace(1e-2, 1e-4, 5)
    err = [weighted_norm(kite.assembly, resolvent_apply(kite, g, f) - f) for g in gs]
    assert loglog_slope(gs, err).slope == pytest.approx(1.0, abs=0.1)


def test_capacity_guard_unit_circle():
    with pytest.raises(CapacityGuardError, match="rescale"):
        build_dtn(LayerOperators.build(circle_assembly(1.0, 64)))


def test_robin_floor():
    ops = LayerOperators.build(circle_assembly(0.9995, 64))
    with pytest.raises(CapacityGuardError, match="Robin constant"):
        build_dtn(ops)
    assert build_dtn(ops, robin_floor=1e-5).matrix.shape == (64, 64)
