import numpy as np
import pytest

from conftest import circle_assembly
from imperfect_bem import (
    CurveParametrization,
    LayerOperators,
    analytic_ball_capacitance,
    analytic_disk_capacitance,
    assemble,
    build_component,
    build_dtn,
    capacitance_expansion,
    capacitance_matrix,
    excision_invariance_check,
    two_disks,
)
from imperfect_bem.capacitance import capacitance_moments, sphere_area
from imperfect_bem.fitting import loglog_slope

# 2 pi R / (-R log R + gamma) at R = 0.5, evaluated independently
DISK = {0.0: 9.064720283654388, 0.01: 8.810502906631681, 0.1: 7.034882317201557, 1.0: 2.3330270816737237}


@pytest.mark.parametrize("gamma", sorted(DISK))
def test_disk_formula_values(gamma):
    assert analytic_disk_capacitance(0.5, gamma) == pytest.approx(DISK[gamma], rel=1e-14)


def test_disk_formula_special_points():
    assert analytic_disk_capacitance(np.exp(-1), 0.0) == pytest.approx(2 * np.pi, rel=1e-14)
    assert analytic_disk_capacitance(1 - 1e-9, 0.0) > 1e9
    for R in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            analytic_disk_capacitance(R, 0.1)


def test_ball_formula():
    assert sphere_area(3) == pytest.approx(4 * np.pi)
    assert analytic_ball_capacitance(3, 1.0, 0.0) == pytest.approx(4 * np.pi, rel=1e-14)
    assert analytic_ball_capacitance(3, 1.0, 1.0) == pytest.approx(2 * np.pi, rel=1e-14)
    vals = [analytic_ball_capacitance(4, 0.7, g) for g in (0, 1, 10, 100)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        analytic_ball_capacitance(2, 1.0, 0.0)


@pytest.mark.parametrize("gamma", sorted(DISK))
def test_numeric_disk_matches_formula(disk, gamma):
    C = capacitance_matrix(disk, gamma)
    assert C.C.shape == (1, 1)
    assert C.C[0, 0] == pytest.approx(DISK[gamma], rel=1e-8)


def test_numeric_disk_monotone_in_gamma(disk):
    vals = [capacitance_matrix(disk, g).C[0, 0] for g in (0, 1e-3, 1e-1, 1, 10)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_two_disks_structure():
    dtn = build_dtn(LayerOperators.build(two_disks(0.15, 0.2, 64)))
    for g in (0.0, 1e-3, 0.1, 1.0, 10.0):
        C = capacitance_matrix(dtn, g)
        assert C.symmetry_residual < 1e-8
        assert C.is_positive_definite
        assert C.C[0, 1] < 0
        assert C.C[0, 0] == pytest.approx(C.C[1, 1], rel=1e-10)


def test_off_diagonals_weaken_with_separation():
    off = []
    for gap in (0.05, 0.2, 0.6):
        dtn = build_dtn(LayerOperators.build(two_disks(0.1, gap, 64)))
        C = capacitance_matrix(dtn, 0.0).C
        off.append(-C[0, 1] / C[0, 0])
    assert off[0] > off[1] > off[2] > 0


def test_negative_gamma_rejected(disk):
    with pytest.raises(ValueError):
        capacitance_matrix(disk, -0.1)


@pytest.mark.parametrize("gamma", [0.0, 0.1])
def test_excision_invariance(gamma):
    ex = excision_invariance_check(CurveParametrization.circle((0, 0), 0.5),
                                   CurveParametrization.circle((0, 0), 0.25), gamma, 128)
    assert ex.relative_gap < 1e-7
    assert ex.C_D == pytest.approx(DISK[gamma], rel=1e-8)


def test_excision_with_off_centre_kite_hole():
    ex = excision_invariance_check(CurveParametrization.ellipse((0, 0), 0.5, 0.35),
                                   CurveParametrization.kite((0.05, 0.0), 0.12), 0.05, 128)
    assert ex.relative_gap < 1e-7


def test_expansion_moments_and_slopes(disk):
    m0, m1 = capacitance_moments(disk, 1)
    assert m0[0, 0] == pytest.approx(9.064720283654388, rel=1e-10)
    # derivative of the closed form at gamma = 0: 2 pi R / (R log R)^2
    assert m1[0, 0] == pytest.approx(2 * np.pi * 0.5 / (0.5 * np.log(0.5)) ** 2, rel=1e-10)
    exp = capacitance_expansion(disk, np.geomspace(1e-1, 1e-3, 5), 1)
    assert exp.slopes[0] == pytest.approx(1.0, abs=0.1)
    assert exp.slopes[1] == pytest.approx(2.0, abs=0.1)
    with pytest.raises(ValueError):
        capacitance_moments(disk, 2)


def test_continuity_at_zero_on_a_pair():
    comps = [build_component(CurveParametrization.ellipse((0.4, 0.1), 0.25, 0.15, 0.3), 128),
             build_component(CurveParametrization.kite((-0.35, -0.05), 0.25), 128)]
    dtn = build_dtn(LayerOperators.build(assemble(comps)))
    C0 = capacitance_matrix(dtn, 0.0).C
    gs = np.geomspace(1e-3, 1e-5, 5)
    err = [np.linalg.norm(capacitance_matrix(dtn, g).C - C0) for g in gs]
    assert loglog_slope(gs, err).slope == pytest.approx(1.0, abs=0.1)


def test_provenance_flag(disk):
    assert capacitance_matrix(disk, 0.1).provenance == "numeric"
