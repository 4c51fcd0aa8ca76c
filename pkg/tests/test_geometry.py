import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ellipe

from imperfect_bem import CurveParametrization, GeometryError, assemble, build_component, two_disks
from imperfect_bem.geometry import _check_simple, closest_points, min_gap


def test_circle_arclength_and_curvature():
    c = build_component(CurveParametrization.circle((0.1, -0.2), 0.3), 64)
    assert c.arclength == pytest.approx(2 * np.pi * 0.3, rel=1e-14)
    np.testing.assert_allclose(c.curvatures, 1 / 0.3, rtol=1e-12)
    np.testing.assert_allclose(np.hypot(*c.normals.T), 1.0, rtol=1e-14)


def test_ellipse_perimeter_matches_complete_elliptic_integral():
    a_, b_ = 0.4, 0.15
    c = build_component(CurveParametrization.ellipse((0, 0), a_, b_, 0.7), 128)
    exact = 4 * a_ * ellipe(1 - (b_ / a_) ** 2)
    assert c.arclength == pytest.approx(exact, rel=1e-12)


def test_normals_point_out_of_the_inclusion():
    a = assemble([build_component(CurveParametrization.kite((0, 0), 0.3), 128)])
    h = 0.01 * a.weights[:, None]
    assert np.all(a.inclusion_containing(a.points + h * a.normals) == -1)
    assert np.all(a.inclusion_containing(a.points - h * a.normals) == 0)


def test_reversed_curve_flips_normals_and_curvature():
    p = CurveParametrization.circle((0, 0), 0.25)
    fwd, rev = build_component(p, 32), build_component(p, 32, reverse=True)
    np.testing.assert_allclose(rev.curvatures, -4.0, rtol=1e-12)
    # radial component of the normal is negative on the reversed curve
    assert np.all(np.sum(rev.normals * rev.points, axis=1) < 0)
    assert np.all(np.sum(fwd.normals * fwd.points, axis=1) > 0)


def test_hole_joins_its_outer_curve():
    outer = build_component(CurveParametrization.circle((0, 0), 0.5), 64)
    inner = build_component(CurveParametrization.circle((0, 0), 0.25), 64, reverse=True)
    a = assemble([outer, inner], inclusions=(0, 0))
    assert a.n_inclusions == 1
    assert a.inclusion_containing([[0.4, 0.0], [0.1, 0.0], [0.7, 0.0]]).tolist() == [0, -1, -1]
    with pytest.raises(GeometryError):
        assemble([outer, build_component(CurveParametrization.circle((0, 0), 0.25), 64)])


@pytest.mark.parametrize("n", [15, 14, 33, 8])
def test_bad_node_counts(n):
    with pytest.raises(GeometryError, match="even integer"):
        build_component(CurveParametrization.circle(), n)


@pytest.mark.parametrize("kwargs", [
    dict(kind="circle", radius=-1.0),
    dict(kind="ellipse", semi_axes=(0.2, 0.0)),
    dict(kind="kite", scale=0.0),
    dict(kind="star", radius=0.3, amplitude=1.2),
    dict(kind="spline"),
])
def test_invalid_parameters(kwargs):
    with pytest.raises(GeometryError):
        CurveParametrization(**kwargs)


def test_self_intersection_detected():
    t = 2 * np.pi * np.arange(64) / 64
    eight = np.stack([np.sin(t), np.sin(t) * np.cos(t)], axis=-1)
    with pytest.raises(GeometryError, match="self-intersecting"):
        _check_simple(eight, np.full(64, 2 * np.pi / 64))


def test_overlapping_curves_rejected():
    c1 = build_component(CurveParametrization.circle((0, 0), 0.3), 64)
    c2 = build_component(CurveParametrization.circle((0.4, 0), 0.3), 64)
    with pytest.raises(GeometryError, match="overlap|inside"):
        assemble([c1, c2])


def test_two_disk_gap_and_closest_points():
    a = two_disks(1.0, 0.05, 64, scale=0.4)
    assert min_gap(a) == pytest.approx(0.02, rel=1e-10)
    d, pa, pb = closest_points(a)
    np.testing.assert_allclose(pa, [-0.01, 0.0], atol=1e-8)
    np.testing.assert_allclose(pb, [0.01, 0.0], atol=1e-8)


def test_closest_points_between_ellipses_off_the_nodes():
    e1 = build_component(CurveParametrization.ellipse((-0.3, 0.0), 0.2, 0.1), 32)
    e2 = build_component(CurveParametrization.ellipse((0.3, 0.05), 0.2, 0.1), 32)
    d = min_gap(assemble([e1, e2]))
    fine = np.linspace(0, 2 * np.pi, 20001)
    x1 = e1.param.evaluate(fine)[0]
    x2 = e2.param.evaluate(fine)[0]
    brute = min(np.min(np.hypot(*(x2 - p).T)) for p in x1[::10])
    assert d <= brute + 1e-6 and d == pytest.approx(brute, abs=2e-4)


def test_integrals_and_tilde():
    a = two_disks(0.2, 0.1, 32)
    assert a.integrals(np.ones(a.n_nodes)) == pytest.approx([2 * np.pi * 0.2] * 2, rel=1e-13)
    x = a.points[:, 1]
    assert a.is_tilde(x)
    assert not a.is_tilde(x + 1)
    with pytest.raises(IndexError):
        a.indicator(2)


def test_refined_and_interior_probe():
    a = assemble([build_component(CurveParametrization.kite((0, 0), 0.3), 64)])
    assert a.refined(4).n_nodes == 256
    p = a.interior_probe(0)
    assert a.inclusion_containing(p[None])[0] == 0


@settings(max_examples=25, deadline=None)
@given(R=st.floats(0.05, 0.9), cx=st.floats(-0.5, 0.5), cy=st.floats(-0.5, 0.5), m=st.integers(8, 64))
def test_circle_quadrature_is_exact(R, cx, cy, m):
    c = build_component(CurveParametrization.circle((cx, cy), R), 2 * m)
    assert c.arclength == pytest.approx(2 * np.pi * R, rel=1e-12)
    np.testing.assert_allclose(c.points.mean(axis=0), [cx, cy], atol=1e-12)
