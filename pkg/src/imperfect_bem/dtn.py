"""Exterior Dirichlet-to-Neumann map, equilibrium density and resolvents.

``Lambda_+ = -(1/2 I + K*) S^{-1}`` maps Dirichlet data on the boundary to
minus the exterior normal derivative of its harmonic extension (the normal
points out of the inclusions, i.e. into the exterior domain).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .boundary_ops import LayerOperators
from .errors import CapacityGuardError
from .geometry import Assembly

COND_LIMIT = 1e12
ROBIN_FLOOR = 1e-3

_RESCALE_HINT = (
    "the single layer operator is nearly singular (logarithmic capacity close to 1); "
    "rescale the geometry so it fits well inside the unit disk"
)


@dataclass(frozen=True)
class EquilibriumData:
    """Unit-mass density ``phi0`` with ``S[phi0] = c0`` on the boundary."""

    phi0: np.ndarray
    c0: float


@dataclass(eq=False)
class DtNOperator:
    """``Lambda_+`` on an assembly together with a factorization of ``S_h``."""

    ops: LayerOperators
    matrix: np.ndarray = field(repr=False)
    s_lu: tuple = field(repr=False)

    @property
    def assembly(self) -> Assembly:
        return self.ops.assembly

    def S_solve(self, rhs) -> np.ndarray:
        return sla.lu_solve(self.s_lu, rhs)

    def __post_init__(self):
        self._resolvents = {}

    def resolvent_factor(self, gamma: float):
        """LU factorization of ``I + gamma Lambda_+``, cached per ``gamma``."""
        g = float(gamma)
        if g not in self._resolvents:
            A = np.eye(self.matrix.shape[0]) + g * self.matrix
            self._resolvents[g] = sla.lu_factor(A, check_finite=False)
        return self._resolvents[g]

    def resolvent_apply(self, gamma: float, f) -> np.ndarray:
        return resolvent_apply(self, gamma, f)

    @property
    def indicator_densities(self) -> np.ndarray:
        """Columns ``e_j = -S^{-1}[1_{dD_j}]``, shape ``(M, N)``."""
        if not hasattr(self, "_e"):
            a = self.assembly
            ind = np.stack([a.indicator(j) for j in range(a.n_inclusions)], axis=1)
            self._e = -self.S_solve(ind)
            self._e.setflags(write=False)
        return self._e


def _factor_S(S: np.ndarray):
    lu = sla.lu_factor(S, check_finite=False)
    anorm = np.linalg.norm(S, 1)
    rcond, info = sla.lapack.dgecon(lu[0], anorm, norm="1")
    if info != 0 or rcond * COND_LIMIT < 1.0:
        cond = np.inf if rcond == 0 else 1.0 / rcond
        raise CapacityGuardError(f"cond(S_h) ~ {cond:.2e} exceeds {COND_LIMIT:.0e}: {_RESCALE_HINT}")
    return lu


def build_dtn(ops: LayerOperators, robin_floor: float = ROBIN_FLOOR) -> DtNOperator:
    """Assemble ``Lambda_+ = -(1/2 I + K*_h) S_h^{-1}`` with one LU of ``S_h``.

    Raises :class:`CapacityGuardError` when ``S_h`` is numerically singular
    or the Robin constant falls below ``robin_floor`` in magnitude.
    """
    lu = _factor_S(ops.S)
    M = ops.S.shape[0]
    B = 0.5 * np.eye(M) + ops.Kstar
    # Lambda^T = -S^{-T} B^T
    lam = -sla.lu_solve(lu, B.T, trans=1).T
    dtn = DtNOperator(ops, lam, lu)
    eq = equilibrium(dtn)
    if abs(eq.c0) < robin_floor:
        raise CapacityGuardError(f"Robin constant |c0| = {abs(eq.c0):.3e} < {robin_floor:.1e}: {_RESCALE_HINT}")
    dtn.matrix.setflags(write=False)
    return dtn


def equilibrium(dtn_or_ops) -> EquilibriumData:
    """Solve the bordered system ``S phi = c 1``, ``int phi = 1``."""
    ops = dtn_or_ops.ops if isinstance(dtn_or_ops, DtNOperator) else dtn_or_ops
    w = ops.assembly.weights
    M = len(w)
    A = np.zeros((M + 1, M + 1))
    A[:M, :M] = ops.S
    A[:M, M] = -1.0
    A[M, :M] = w
    rhs = np.zeros(M + 1)
    rhs[M] = 1.0
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise CapacityGuardError(f"singular equilibrium system: {exc}") from None
    return EquilibriumData(phi0=sol[:M], c0=float(sol[M]))


def indicator_density(dtn: DtNOperator, j: int) -> np.ndarray:
    """``e_j = -S^{-1}[1_{dD_j}]``."""
    n = dtn.assembly.n_inclusions
    if not 0 <= j < n:
        raise IndexError(f"inclusion index {j} out of range 0..{n - 1}")
    return dtn.indicator_densities[:, j].copy()


def resolvent_apply(dtn: DtNOperator, gamma: float, f) -> np.ndarray:
    """Solve ``(I + gamma Lambda_+) psi = f``. ``gamma = 0`` returns ``f``."""
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    f = np.asarray(f, dtype=float)
    if gamma == 0:
        return f.copy()
    return sla.lu_solve(dtn.resolvent_factor(gamma), f)


def weighted_resolvent_norm(dtn: DtNOperator, gamma: float) -> float:
    """``||W^{1/2} (I + gamma Lambda_+)^{-1} W^{-1/2}||_2`` (discrete L2 operator norm)."""
    sw = np.sqrt(dtn.assembly.weights)
    M = len(sw)
    R = resolvent_apply(dtn, gamma, np.diag(1.0 / sw)) if gamma > 0 else np.diag(1.0 / sw)
    return float(np.linalg.norm(sw[:, None] * R, 2)) if M else 0.0


def weighted_norm(a: Assembly, f) -> float:
    """Quadrature approximation of the L2 boundary norm."""
    f = np.asarray(f)
    return float(np.sqrt(np.sum(a.weights * f * f)))


def resolvent_expansion_residual(dtn: DtNOperator, gamma: float, f, order: int) -> float:
    """``||(I + gamma L)^{-1} f - sum_{l <= order} (-gamma L)^l f||`` in the weighted L2 norm."""
    if order not in (0, 1):
        raise ValueError("expansion order must be 0 or 1")
    f = np.asarray(f, dtype=float)
    if gamma == 0:
        return 0.0
    approx = f.copy()
    if order == 1:
        approx -= gamma * (dtn.matrix @ f)
    return weighted_norm(dtn.assembly, resolvent_apply(dtn, gamma, f) - approx)


def dtn_symmetry_residual(dtn: DtNOperator) -> float:
    """``||W L - L^T W|| / ||W L||``; zero for the continuum operator."""
    WL = dtn.assembly.weights[:, None] * dtn.matrix
    return float(np.linalg.norm(WL - WL.T) / np.linalg.norm(WL))


def dtn_min_eigenvalue(dtn: DtNOperator) -> float:
    """Smallest eigenvalue of the symmetric part of ``W L`` relative to ``||W L||_2``."""
    WL = dtn.assembly.weights[:, None] * dtn.matrix
    sym = 0.5 * (WL + WL.T)
    return float(np.linalg.eigvalsh(sym)[0] / np.linalg.norm(WL, 2))
