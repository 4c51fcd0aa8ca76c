"""Imperfect-bonding transmission problem: densities, constants and fields.

The solution is represented as ``u = h + S[phi] - gamma D[phi]`` in the
exterior, with ``phi`` of zero mean on every inclusion boundary, and is
locally constant inside the inclusions. ``phi`` is obtained from the
perfect-bonding density ``phi0`` by resolvent solves plus a correction in
the span of the ``e_j``, whose coefficients solve the capacitance system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .boundary_ops import (
    DEFAULT_CLEARANCE,
    LayerOperators,
    eval_double_layer,
    eval_single_layer,
    tangential_derivative,
)
from .capacitance import capacitance_matrix, resolved_indicators
from .dtn import DtNOperator, build_dtn, weighted_norm
from .errors import ClearanceError, ImperfectBEMError
from .geometry import Assembly, closest_points


@dataclass(frozen=True)
class HarmonicBackground:
    """A harmonic function ``h`` on the whole plane.

    ``kind`` is ``"linear"`` (``h = g . x``), ``"poly"`` (real or imaginary
    part of ``(x1 + i x2)^m``), ``"constant"`` or ``"custom"``, in which case
    ``func(pts) -> values`` and ``grad(pts) -> gradients`` are given.
    """

    kind: str = "linear"
    direction: tuple = (1.0, 0.0)
    degree: int = 1
    part: str = "re"
    value: float = 0.0
    func: Callable | None = field(default=None, compare=False)
    grad: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("linear", "poly", "constant", "custom"):
            raise ValueError(f"unknown background kind {self.kind!r}")
        if self.kind == "poly" and self.part not in ("re", "im"):
            raise ValueError(f"poly part must be 're' or 'im', got {self.part!r}")
        if self.kind == "custom" and (self.func is None or self.grad is None):
            raise ValueError("custom background needs both func and grad")

    @classmethod
    def linear(cls, direction=(1.0, 0.0)):
        return cls("linear", direction=tuple(float(d) for d in direction))

    @classmethod
    def poly(cls, degree, part="re"):
        return cls("poly", degree=int(degree), part=part)

    @classmethod
    def constant(cls, value):
        return cls("constant", value=float(value))

    @classmethod
    def custom(cls, func, grad):
        return cls("custom", func=func, grad=grad)

    def __call__(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "linear":
            return p @ np.asarray(self.direction)
        if self.kind == "constant":
            return np.full(len(p), self.value)
        if self.kind == "custom":
            return np.asarray(self.func(p), dtype=float)
        zm = (p[:, 0] + 1j * p[:, 1]) ** self.degree
        return zm.real if self.part == "re" else zm.imag

    def gradient(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "linear":
            return np.tile(np.asarray(self.direction, dtype=float), (len(p), 1))
        if self.kind == "constant":
            return np.zeros((len(p), 2))
        if self.kind == "custom":
            return np.asarray(self.grad(p), dtype=float)
        m = self.degree
        if m == 0:
            return np.zeros((len(p), 2))
        dz = m * (p[:, 0] + 1j * p[:, 1]) ** (m - 1)
        if self.part == "re":
            return np.stack([dz.real, -dz.imag], axis=-1)
        return np.stack([dz.imag, dz.real], axis=-1)

    def normal_derivative(self, a: Assembly) -> np.ndarray:
        return np.sum(self.gradient(a.points) * a.normals, axis=1)

    def laplacian_residual(self, pts, step=1e-3) -> np.ndarray:
        """Five-point-stencil Laplacian at ``pts`` (should vanish)."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        ex, ey = np.array([step, 0.0]), np.array([0.0, step])
        return (self(p + ex) + self(p - ex) + self(p + ey) + self(p - ey) - 4 * self(p)) / step**2


@dataclass(eq=False)
class TransmissionProblem:
    """Geometry, operators and background shared by solves at different ``gamma``."""

    assembly: Assembly
    ops: LayerOperators
    dtn: DtNOperator
    background: HarmonicBackground

    @classmethod
    def build(cls, a: Assembly, background: HarmonicBackground, dtn: DtNOperator | None = None):
        if dtn is None:
            dtn = build_dtn(LayerOperators.build(a))
        return cls(a, dtn.ops, dtn, background)

    @property
    def phi0(self) -> np.ndarray:
        if not hasattr(self, "_phi0"):
            self._phi0 = solve_perfect(self.assembly, self.ops, self.dtn, self.background)
            self._phi0.setflags(write=False)
        return self._phi0

    @property
    def capacitance0(self) -> np.ndarray:
        if not hasattr(self, "_c0"):
            self._c0 = capacitance_matrix(self.dtn, 0.0).C
        return self._c0

    @property
    def u0_interior(self) -> np.ndarray:
        """``u0`` on each inclusion, from ``h + S[phi0]`` at an interior probe."""
        if not hasattr(self, "_u0i"):
            a = self.assembly
            probes = np.array([a.interior_probe(j) for j in range(a.n_inclusions)])
            vals = self.background(probes) + _auto_eval(eval_single_layer, a, self.phi0, probes)
            self._u0i = np.asarray(vals)
        return self._u0i

    def solve(self, gamma: float) -> "TransmissionSolution":
        return solve_imperfect(self, gamma)


def solve_perfect(a: Assembly, ops: LayerOperators, dtn: DtNOperator, h: HarmonicBackground) -> np.ndarray:
    """Zero-mean solution of ``(1/2 I - K*) phi = d_nu h``.

    ``1/2 I - K*`` has kernel ``span{e_j}``; the bordered system appends the
    per-inclusion mean constraints and multipliers along the ``e_j``.
    """
    M, N = a.n_nodes, a.n_inclusions
    E = np.asarray(dtn.indicator_densities)
    A = np.zeros((M + N, M + N))
    A[:M, :M] = 0.5 * np.eye(M) - ops.Kstar
    A[:M, M:] = E
    rows = np.zeros((N, M))
    rows[a.inclusion_of_node, np.arange(M)] = a.weights
    A[M:, :M] = rows
    rhs = np.concatenate([h.normal_derivative(a), np.zeros(N)])
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise ImperfectBEMError(f"perfect-bonding bordered system is rank deficient: {exc}") from None
    return sol[:M]


@dataclass(eq=False)
class TransmissionSolution:
    gamma: float
    phi: np.ndarray
    phi0: np.ndarray
    a: np.ndarray
    capacitance: np.ndarray
    problem: TransmissionProblem = field(repr=False)

    @property
    def assembly(self) -> Assembly:
        return self.problem.assembly

    @property
    def background(self) -> HarmonicBackground:
        return self.problem.background

    def interior_constants(self) -> np.ndarray:
        """``u^gamma`` on each inclusion: ``u0(D_i) - a_i``."""
        return self.problem.u0_interior - self.a

    def perturbation(self, pts, want_gradient=False, clearance=DEFAULT_CLEARANCE, upsample=1):
        """``S[phi] - gamma D[phi]`` (the field minus ``h``) by direct quadrature."""
        a = self.assembly
        out = eval_single_layer(a, self.phi, pts, want_gradient, clearance, upsample)
        if self.gamma == 0:
            return out
        dl = eval_double_layer(a, self.phi, pts, want_gradient, clearance, upsample)
        if want_gradient:
            return out[0] - self.gamma * dl[0], out[1] - self.gamma * dl[1]
        return out - self.gamma * dl

    def representation(self, pts, want_gradient=False, clearance=DEFAULT_CLEARANCE, upsample=1):
        """``h + S[phi] - gamma D[phi]`` at any off-boundary point."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        p = self.perturbation(pts, want_gradient, clearance, upsample)
        if want_gradient:
            return self.background(pts) + p[0], self.background.gradient(pts) + p[1]
        return self.background(pts) + p

    def eval_field(self, pts, want_gradient=False, clearance=DEFAULT_CLEARANCE, upsample=1):
        """``u^gamma`` (and ``grad u^gamma``); interior points get the inclusion constant."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        where = self.assembly.inclusion_containing(pts)
        ext = where < 0
        val = np.empty(len(pts))
        grad = np.zeros((len(pts), 2))
        if np.any(ext):
            r = self.representation(pts[ext], want_gradient, clearance, upsample)
            if want_gradient:
                val[ext], grad[ext] = r
            else:
                val[ext] = r
        if np.any(~ext):
            if clearance > 0:
                # interior shortcut still refuses points hugging the boundary
                from .boundary_ops import _check_clearance

                _check_clearance(self.assembly, pts[~ext], clearance / max(int(upsample), 1))
            val[~ext] = self.interior_constants()[where[~ext]]
        return (val, grad) if want_gradient else val

    def boundary_gradient(self) -> np.ndarray:
        """Exterior trace of ``grad u^gamma`` at the nodes.

        ``d_nu u|+ = phi`` and ``u|+ = const + gamma phi`` along each
        inclusion boundary, so the tangential part is ``gamma d_tau phi``.
        """
        a = self.assembly
        nu = a.normals
        tau = np.stack([-nu[:, 1], nu[:, 0]], axis=-1)
        dtau = self.gamma * tangential_derivative(a, self.phi) if self.gamma else 0.0
        return self.phi[:, None] * nu + np.asarray(dtau)[..., None] * tau


def solve_imperfect(problem: TransmissionProblem, gamma: float) -> TransmissionSolution:
    """``phi = R phi0 + sum_j a_j R e_j`` with ``C^gamma a = -(int_{dD_i} R phi0)_i``.

    ``R = (I + gamma Lambda_+)^{-1}``. At ``gamma = 0`` this is exactly the
    perfect-bonding density with ``a = 0``.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    a_ = problem.assembly
    phi0 = np.array(problem.phi0)
    if gamma == 0:
        return TransmissionSolution(0.0, phi0, phi0, np.zeros(a_.n_inclusions),
                                    problem.capacitance0, problem)
    dtn = problem.dtn
    r = dtn.resolvent_apply(gamma, phi0)
    cols = resolved_indicators(dtn, gamma)
    C = a_.integrals(cols)
    try:
        coef = np.linalg.solve(C, -a_.integrals(r))
    except np.linalg.LinAlgError as exc:
        raise ImperfectBEMError(f"capacitance system singular at gamma={gamma}: {exc}") from None
    phi = r + cols @ coef
    return TransmissionSolution(float(gamma), phi, phi0, coef, C, problem)


def _auto_eval(fn, a, dens, pts, clearance=DEFAULT_CLEARANCE):
    """Evaluate a layer potential, upsampling until the clearance rule holds."""
    _, ratio = a.distance_to_nodes(pts)
    need = clearance / max(float(np.min(ratio)), 1e-300)
    q = 1
    while q < need and q < 256:
        q *= 2
    if q < need:
        raise ClearanceError(pts[int(np.argmin(ratio))], 0.0, 0.0)
    return fn(a, dens, pts, False, clearance, q)


@dataclass(eq=False)
class FirstOrderTerm:
    """The coefficient ``v1`` of ``gamma`` in ``u^gamma = u0 + gamma v1 + o(gamma)``."""

    problem: TransmissionProblem
    phi_tilde: np.ndarray
    beta: np.ndarray
    psi1: np.ndarray

    def exterior_density(self) -> np.ndarray:
        """Density ``q`` with ``v1 = S[q]`` in the exterior."""
        E = np.asarray(self.problem.dtn.indicator_densities)
        return self.phi_tilde - E @ self.beta

    def __call__(self, pts, want_gradient=False, clearance=DEFAULT_CLEARANCE, upsample=1):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        a = self.problem.assembly
        where = a.inclusion_containing(pts)
        ext = where < 0
        val = np.empty(len(pts))
        grad = np.zeros((len(pts), 2))
        if np.any(ext):
            r = eval_single_layer(a, self.exterior_density(), pts[ext], want_gradient, clearance, upsample)
            if want_gradient:
                val[ext], grad[ext] = r
            else:
                val[ext] = r
        val[~ext] = self.beta[where[~ext]]
        return (val, grad) if want_gradient else val

    def via_psi1(self, pts, want_gradient=False, clearance=DEFAULT_CLEARANCE, upsample=1):
        """Exterior ``v1 = S[psi1] - D[phi0]`` (independent route)."""
        a = self.problem.assembly
        s = eval_single_layer(a, self.psi1, pts, want_gradient, clearance, upsample)
        d = eval_double_layer(a, self.problem.phi0, pts, want_gradient, clearance, upsample)
        if want_gradient:
            return s[0] - d[0], s[1] - d[1]
        return s - d


def first_order_term(problem: TransmissionProblem) -> FirstOrderTerm:
    """Build ``v1`` from ``phi~ = S^{-1} phi0`` and the inverse of ``C^0``.

    Also returns the density correction ``psi1 = -L phi0 + sum_i c_i e_i``
    (first-order coefficient of ``phi^gamma``).
    """
    a = problem.assembly
    dtn = problem.dtn
    phi0 = np.asarray(problem.phi0)
    C0 = problem.capacitance0
    phi_t = dtn.S_solve(phi0)
    beta = np.linalg.solve(C0, a.integrals(phi_t))
    lam_phi0 = dtn.matrix @ phi0
    c = np.linalg.solve(C0, a.integrals(lam_phi0))
    psi1 = -lam_phi0 + np.asarray(dtn.indicator_densities) @ c
    return FirstOrderTerm(problem, phi_t, beta, psi1)


def density_error(sol: TransmissionSolution) -> float:
    """``||phi^gamma - phi0||`` in the weighted boundary L2 norm."""
    return weighted_norm(sol.assembly, sol.phi - sol.phi0)


def decay_at_infinity_check(sol_g: TransmissionSolution, sol_0: TransmissionSolution, radii,
                            n_angles: int = 128, center=(0.0, 0.0)):
    """Scaled far-field differences on circles of the given radii.

    Returns rows ``(radius, max |u^g - u^0| r, max |grad(u^g - u^0)| r^2)``.
    The background cancels exactly, so only the layer parts are evaluated.
    """
    th = 2 * np.pi * np.arange(n_angles) / n_angles
    rows = []
    for R in radii:
        pts = np.asarray(center) + R * np.stack([np.cos(th), np.sin(th)], axis=-1)
        vg, gg = sol_g.perturbation(pts, True)
        v0, g0 = sol_0.perturbation(pts, True)
        du = np.max(np.abs(vg - v0)) * R
        dg = np.max(np.hypot(*(gg - g0).T)) * R**2
        rows.append((float(R), float(du), float(dg)))
    return rows


@dataclass(frozen=True)
class SampleRegion:
    """Deterministic probe sets for sup-norm estimates.

    ``kind="annulus"``: ``center``, ``r_in``, ``r_out`` (polar grid);
    ``kind="segment"``: ``p0``, ``p1``;
    ``kind="midgap"``: segment between the closest points of two inclusions,
    shortened by the clearance at each end;
    ``kind="boundary"``: exterior trace at the nodes (no quadrature).
    """

    kind: str
    center: tuple = (0.0, 0.0)
    r_in: float = 1.0
    r_out: float = 2.0
    p0: tuple = (0.0, 0.0)
    p1: tuple = (1.0, 0.0)

    @classmethod
    def annulus(cls, r_in, r_out, center=(0.0, 0.0)):
        return cls("annulus", center=tuple(center), r_in=float(r_in), r_out=float(r_out))

    @classmethod
    def segment(cls, p0, p1):
        return cls("segment", p0=tuple(p0), p1=tuple(p1))

    def points(self, a: Assembly | None = None, n_samples: int = 33, offset: float = 0.0) -> np.ndarray:
        if self.kind == "annulus":
            nr = max(int(round(np.sqrt(n_samples / 8))), 2)
            nt = max(n_samples // nr, 8)
            r = np.linspace(self.r_in, self.r_out, nr)
            th = 2 * np.pi * np.arange(nt) / nt
            R, T = np.meshgrid(r, th, indexing="ij")
            return np.asarray(self.center) + np.stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()], axis=-1)
        if self.kind == "segment":
            s = np.linspace(0.0, 1.0, n_samples)[:, None]
            return (1 - s) * np.asarray(self.p0) + s * np.asarray(self.p1)
        if self.kind == "midgap":
            d, pa, pb = closest_points(a)
            if 2 * offset >= d:
                raise ClearanceError(0.5 * (pa + pb), 0.5 * d, offset)
            u = (pb - pa) / d
            s = np.linspace(offset, d - offset, n_samples)[:, None]
            return pa + s * u
        raise ValueError(f"region kind {self.kind!r} has no quadrature point set")


def gradient_sup(sol: TransmissionSolution, region: SampleRegion, n_samples: int = 33,
                 clearance: float = DEFAULT_CLEARANCE, upsample: int | str = 1) -> float:
    """Max of ``|grad u^gamma|`` over a deterministic sample of ``region``.

    ``upsample="auto"`` (mid-gap only) refines the evaluation quadrature so
    the 33-point segment fits inside the gap with the clearance offset.
    """
    if region.kind == "boundary":
        g = sol.boundary_gradient()
        return float(np.max(np.hypot(g[:, 0], g[:, 1])))
    a = sol.assembly
    q = upsample
    if region.kind == "midgap":
        d = closest_points(a)[0]
        hmax = float(np.max(a.weights))
        if q == "auto":
            q = 1
            while 2 * clearance * hmax / q >= 0.5 * d and q < 1024:
                q *= 2
        offset = clearance * hmax / int(q)
        pts = region.points(a, n_samples, offset)
    else:
        if q == "auto":
            q = 1
        pts = region.points(a, n_samples)
    _, g = sol.eval_field(pts, True, clearance, int(q))
    return float(np.max(np.hypot(g[:, 0], g[:, 1])))
