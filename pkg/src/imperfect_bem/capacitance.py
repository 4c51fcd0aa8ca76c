"""Resistive capacitance matrices: numeric assembly, closed forms, expansions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .boundary_ops import LayerOperators
from .dtn import DtNOperator, build_dtn
from .geometry import CurveParametrization, assemble, build_component


@dataclass(frozen=True)
class ResistiveCapacitanceMatrix:
    gamma: float
    C: np.ndarray
    provenance: str

    @property
    def symmetry_residual(self) -> float:
        return float(np.linalg.norm(self.C - self.C.T) / np.linalg.norm(self.C))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.C + self.C.T))[0])

    @property
    def is_positive_definite(self) -> bool:
        return self.min_eigenvalue > 0


def resolved_indicators(dtn: DtNOperator, gamma: float) -> np.ndarray:
    """Columns ``(I + gamma Lambda_+)^{-1} e_j``."""
    E = dtn.indicator_densities
    return dtn.resolvent_apply(gamma, E)


def capacitance_matrix(dtn: DtNOperator, gamma: float) -> ResistiveCapacitanceMatrix:
    """``C_ij = int_{dD_i} (I + gamma Lambda_+)^{-1}[e_j] ds``."""
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    cols = resolved_indicators(dtn, gamma)
    return ResistiveCapacitanceMatrix(float(gamma), dtn.assembly.integrals(cols), "numeric")


def analytic_disk_capacitance(R: float, gamma: float) -> float:
    """``2 pi R / (-R log R + gamma)`` for a disk of radius ``0 < R < 1``."""
    if not 0 < R < 1:
        raise ValueError(f"disk radius must satisfy 0 < R < 1, got {R}")
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    return 2.0 * np.pi * R / (-R * np.log(R) + gamma)


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in ``R^d``."""
    return 2.0 * np.pi ** (d / 2) / gamma_fn(d / 2)


def analytic_ball_capacitance(d: int, R: float, gamma: float) -> float:
    """``(d-2) omega_d R^{d-1} / (R^{d-2} + (d-2) gamma)`` for ``d >= 3``."""
    if d < 3:
        raise ValueError(f"ball formula requires d >= 3, got d={d}")
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    return (d - 2) * sphere_area(d) * R ** (d - 1) / (R ** (d - 2) + (d - 2) * gamma)


@dataclass(frozen=True)
class ExcisionResult:
    C_D: float
    C_E: float

    @property
    def relative_gap(self) -> float:
        return abs(self.C_D - self.C_E) / abs(self.C_D)


def excision_invariance_check(outer: CurveParametrization, inner: CurveParametrization,
                              gamma: float, n: int, n_inner: int | None = None) -> ExcisionResult:
    """Compare the scalar capacitance of ``D`` (inside ``outer``) with that of ``E``.

    ``E`` is ``D`` with the closed region inside ``inner`` removed; its
    boundary is the outer curve plus the reversed inner curve, both
    belonging to the single inclusion ``E``.
    """
    out_c = build_component(outer, n)
    in_c = build_component(inner, n_inner or n, reverse=True)
    D = assemble([out_c])
    E = assemble([out_c, in_c], inclusions=(0, 0))
    cd = capacitance_matrix(build_dtn(LayerOperators.build(D)), gamma).C[0, 0]
    ce = capacitance_matrix(build_dtn(LayerOperators.build(E)), gamma).C[0, 0]
    return ExcisionResult(float(cd), float(ce))


@dataclass(frozen=True)
class CapacitanceExpansion:
    """Moments ``m_l[i, j] = int_{dD_i} Lambda^l[e_j]`` and remainder slopes."""

    moments: tuple
    gammas: np.ndarray
    residuals: np.ndarray
    slopes: dict


def capacitance_moments(dtn: DtNOperator, order: int) -> list:
    if order not in (0, 1):
        raise ValueError("expansion order must be 0 or 1")
    a = dtn.assembly
    E = np.array(dtn.indicator_densities)
    out = [a.integrals(E)]
    if order >= 1:
        out.append(a.integrals(dtn.matrix @ E))
    return out


def capacitance_expansion(dtn: DtNOperator, gammas, order: int) -> CapacitanceExpansion:
    """Truncated series ``sum_l (-gamma)^l m_l`` against numeric ``C^gamma``.

    ``residuals[k, K]`` is the Frobenius remainder of the order-``K`` series
    at ``gammas[k]``; ``slopes[K]`` is its least-squares log-log slope.
    """
    from .fitting import loglog_slope

    gammas = np.asarray(gammas, dtype=float)
    moments = capacitance_moments(dtn, order)
    res = np.zeros((len(gammas), order + 1))
    for k, g in enumerate(gammas):
        C = capacitance_matrix(dtn, g).C
        series = np.zeros_like(C)
        for K in range(order + 1):
            series = series + (-g) ** K * moments[K]
            res[k, K] = np.linalg.norm(C - series)
    slopes = {}
    pos = gammas > 0
    for K in range(order + 1):
        fit = loglog_slope(gammas[pos], res[pos, K])
        slopes[K] = fit.slope if fit is not None else None
    return CapacitanceExpansion(tuple(moments), gammas, res, slopes)
