import numpy as np
import pytest

from imperfect_bem import (
    CurveParametrization,
    HarmonicBackground,
    LayerOperators,
    TransmissionProblem,
    assemble,
    build_component,
    build_dtn,
)


def circle_assembly(R=0.5, n=64, center=(0.0, 0.0)):
    return assemble([build_component(CurveParametrization.circle(center, R), n)])


def kite_assembly(n=128, scale=0.3):
    return assemble([build_component(CurveParametrization.kite((0.0, 0.0), scale), n)])


@pytest.fixture(scope="session")
def disk():
    """Operators for the circle R = 0.5 at n = 128."""
    a = circle_assembly(0.5, 128)
    return build_dtn(LayerOperators.build(a))


@pytest.fixture(scope="session")
def kite():
    return build_dtn(LayerOperators.build(kite_assembly(128)))


@pytest.fixture(scope="session")
def disk_problem(disk):
    return TransmissionProblem.build(disk.assembly, HarmonicBackground.linear((1.0, 0.0)), disk)


@pytest.fixture(scope="session")
def pair_problem():
    """An ellipse and a kite, asymmetric, with a slanted linear background."""
    comps = [
        build_component(CurveParametrization.ellipse((0.4, 0.1), 0.25, 0.15, 0.3), 128),
        build_component(CurveParametrization.kite((-0.35, -0.05), 0.25), 128),
    ]
    a = assemble(comps)
    return TransmissionProblem.build(a, HarmonicBackground.linear((0.8, 0.6)))


def theta(a):
    return np.arctan2(a.points[:, 1], a.points[:, 0])


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line ``(number, title, passed, detail)`` and assert it."""

    def record(number, title, passed, detail=""):
        _ACCEPTANCE.append((number, title, bool(passed), detail))
        print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}  {detail}")
        assert passed, f"criterion {number} ({title}) failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{number:2d}  {'PASS' if passed else 'FAIL'}  {title}  [{detail}]")
