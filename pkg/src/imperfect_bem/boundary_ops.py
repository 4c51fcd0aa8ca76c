"""Dense Nystrom discretizations of the 2-D Laplace layer operators.

Conventions (``omega_2 = 2*pi``)::

    Gamma(x)   = log|x| / (2 pi)
    S[phi](x)  = int Gamma(x - y) phi(y) ds(y)
    D[psi](x)  = -1/(2 pi) int (x - y).nu_y / |x - y|^2 psi(y) ds(y)
    K[psi](x)  = boundary trace (principal value) of the D kernel
    K*         = L2 adjoint of K

so that ``d_nu S[phi]|+- = (+-1/2 + K*) phi``, ``D[psi]|+- = (-+1/2 + K) psi``
and ``K[1] = 1/2`` on every closed curve.

The self-interaction block of ``S`` on each curve uses the Kussmaul-Martensen
splitting of the logarithm into ``log(4 sin^2((t - s)/2)) / 2`` plus a smooth
remainder; the singular part is integrated with exact trigonometric weights.
All other kernels are smooth on analytic curves and use the trapezoid rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import resample

from .errors import ClearanceError
from .geometry import Assembly

INV_2PI = 1.0 / (2.0 * np.pi)
DEFAULT_CLEARANCE = 5.0
_CHUNK = 1024


def log_weights(n: int) -> np.ndarray:
    """Trigonometric weights for ``int_0^{2pi} log(4 sin^2((t_k - s)/2)) f(s) ds``.

    Returns the first row ``r`` of the circulant matrix ``R[k, j] = r[(k - j) % n]``.
    """
    m = n // 2
    tau = 2.0 * np.pi * np.arange(n) / n
    q = np.arange(1, m)
    r = -(2.0 * np.pi / m) * (np.cos(np.outer(tau, q)) / q).sum(axis=1)
    r -= (np.pi / m**2) * np.cos(m * tau)
    return r


def _circulant(row: np.ndarray) -> np.ndarray:
    n = len(row)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return row[idx]


def assemble_single_layer(a: Assembly) -> np.ndarray:
    """Nystrom matrix ``S_h`` with ``(S_h phi)_k ~ S[phi](x_k)``."""
    X, w = a.points, a.weights
    dx = X[:, None, 0] - X[None, :, 0]
    dy = X[:, None, 1] - X[None, :, 1]
    r2 = dx * dx + dy * dy
    np.fill_diagonal(r2, 1.0)
    S = 0.5 * INV_2PI * np.log(r2) * w[None, :]

    for c, comp in enumerate(a.components):
        sl = a.curve_slice(c)
        n = comp.n_nodes
        t = comp.t
        diff = t[:, None] - t[None, :]
        sin2 = 4.0 * np.sin(0.5 * diff) ** 2
        np.fill_diagonal(sin2, 1.0)
        block_r2 = r2[sl, sl]
        smooth = 0.5 * INV_2PI * (np.log(block_r2) - np.log(sin2))
        np.fill_diagonal(smooth, INV_2PI * np.log(comp.jacobians))
        J = comp.jacobians[None, :]
        S[sl, sl] = (0.5 * INV_2PI) * _circulant(log_weights(n)) * J + (2.0 * np.pi / n) * smooth * J
    return S


def assemble_np(a: Assembly) -> tuple[np.ndarray, np.ndarray]:
    """Nystrom matrices of the NP operator ``K`` and its adjoint ``K*``.

    The diagonal uses the continuous limit ``kappa / (4 pi)`` of the kernel,
    and ``K* = W^{-1} K^T W`` with ``W = diag(w)``.
    """
    X, nu, w = a.points, a.normals, a.weights
    dx = X[:, None, 0] - X[None, :, 0]
    dy = X[:, None, 1] - X[None, :, 1]
    r2 = dx * dx + dy * dy
    np.fill_diagonal(r2, 1.0)
    ker = -INV_2PI * (dx * nu[None, :, 0] + dy * nu[None, :, 1]) / r2
    np.fill_diagonal(ker, a.curvatures * (0.5 * INV_2PI))
    K = ker * w[None, :]
    Kstar = K.T * (w[None, :] / w[:, None])
    return K, Kstar


@dataclass(eq=False)
class LayerOperators:
    """The assembled ``S_h``, ``K_h`` and ``K*_h`` for one assembly."""

    assembly: Assembly
    S: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    Kstar: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, a: Assembly) -> "LayerOperators":
        K, Kstar = assemble_np(a)
        ops = cls(a, assemble_single_layer(a), K, Kstar)
        for m in (ops.S, ops.K, ops.Kstar):
            m.setflags(write=False)
        return ops

    def plemelj_residual(self) -> float:
        return plemelj_residual(self)


def plemelj_residual(ops: LayerOperators) -> float:
    """``||S K* - K S||_2 / ||S||_2``; zero in the continuum."""
    lhs = ops.S @ ops.Kstar
    rhs = ops.K @ ops.S
    return float(np.linalg.norm(lhs - rhs, 2) / np.linalg.norm(ops.S, 2))


def tangential_derivative(a: Assembly, phi) -> np.ndarray:
    """Arc-length derivative along each curve by spectral differentiation.

    The Nyquist mode is dropped so the discrete operator is exactly
    skew-adjoint in the weighted inner product.
    """
    phi = np.asarray(phi, dtype=float)
    out = np.empty_like(phi)
    for c, comp in enumerate(a.components):
        sl = a.curve_slice(c)
        n = comp.n_nodes
        k = np.fft.fftfreq(n, d=1.0 / n)
        k[n // 2] = 0.0
        dphi = np.real(np.fft.ifft(1j * k * np.fft.fft(phi[sl])))
        out[sl] = dphi / comp.jacobians
    return out


def _check_clearance(a: Assembly, pts: np.ndarray, clearance: float):
    if clearance <= 0:
        return
    X, h = a.points, a.weights
    for s in range(0, len(pts), _CHUNK):
        p = pts[s:s + _CHUNK]
        d = np.hypot(p[:, None, 0] - X[None, :, 0], p[:, None, 1] - X[None, :, 1])
        bad = d < clearance * h[None, :]
        if np.any(bad):
            i = int(np.nonzero(bad.any(axis=1))[0][0])
            k = int(np.argmax(bad[i]))
            raise ClearanceError(p[i], d[i].min(), clearance * h[k])


def _upsampled(a: Assembly, values: np.ndarray, factor: int):
    if factor == 1:
        return a, values
    fine = a.refined(factor)
    out = np.empty(fine.n_nodes)
    for c in range(a.n_curves):
        out[fine.curve_slice(c)] = resample(values[a.curve_slice(c)], fine.components[c].n_nodes)
    return fine, out


def eval_single_layer(a: Assembly, phi, pts, want_gradient=False, clearance=DEFAULT_CLEARANCE, upsample=1):
    """Evaluate ``S[phi]`` (and optionally its gradient) off the boundary.

    Parameters
    ----------
    a : Assembly
    phi : array_like, shape (M,)
        Node values of the density.
    pts : array_like, shape (P, 2)
    want_gradient : bool
    clearance : float
        Every point must be at least ``clearance * h_k`` from node ``k``,
        where ``h_k`` is the local spacing of the quadrature actually used.
    upsample : int
        Trigonometric interpolation of the density onto ``upsample`` times
        as many nodes before applying the trapezoid rule.

    Returns
    -------
    values : ndarray, shape (P,)
    gradients : ndarray, shape (P, 2)
        Only when ``want_gradient`` is true.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    qa, dens = _upsampled(a, np.asarray(phi, dtype=float), int(upsample))
    _check_clearance(qa, pts, clearance)
    X = qa.points
    wd = qa.weights * dens
    val = np.empty(len(pts))
    grad = np.empty((len(pts), 2)) if want_gradient else None
    for s in range(0, len(pts), _CHUNK):
        p = pts[s:s + _CHUNK]
        dx = p[:, None, 0] - X[None, :, 0]
        dy = p[:, None, 1] - X[None, :, 1]
        r2 = dx * dx + dy * dy
        val[s:s + _CHUNK] = 0.5 * INV_2PI * (np.log(r2) @ wd)
        if want_gradient:
            grad[s:s + _CHUNK, 0] = INV_2PI * ((dx / r2) @ wd)
            grad[s:s + _CHUNK, 1] = INV_2PI * ((dy / r2) @ wd)
    return (val, grad) if want_gradient else val


def eval_double_layer(a: Assembly, psi, pts, want_gradient=False, clearance=DEFAULT_CLEARANCE, upsample=1):
    """Evaluate ``D[psi]`` (and optionally its gradient) off the boundary.

    Same arguments and clearance rule as :func:`eval_single_layer`. The
    gradient differentiates the kernel analytically.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    qa, dens = _upsampled(a, np.asarray(psi, dtype=float), int(upsample))
    _check_clearance(qa, pts, clearance)
    X, nu = qa.points, qa.normals
    wd = qa.weights * dens
    val = np.empty(len(pts))
    grad = np.empty((len(pts), 2)) if want_gradient else None
    for s in range(0, len(pts), _CHUNK):
        p = pts[s:s + _CHUNK]
        dx = p[:, None, 0] - X[None, :, 0]
        dy = p[:, None, 1] - X[None, :, 1]
        r2 = dx * dx + dy * dy
        rn = dx * nu[None, :, 0] + dy * nu[None, :, 1]
        val[s:s + _CHUNK] = -INV_2PI * ((rn / r2) @ wd)
        if want_gradient:
            r4 = r2 * r2
            gx = nu[None, :, 0] / r2 - 2.0 * rn * dx / r4
            gy = nu[None, :, 1] / r2 - 2.0 * rn * dy / r4
            grad[s:s + _CHUNK, 0] = -INV_2PI * (gx @ wd)
            grad[s:s + _CHUNK, 1] = -INV_2PI * (gy @ wd)
    return (val, grad) if want_gradient else val


def one_sided_limit(evaluate, a: Assembly, nodes, side: int, deltas) -> np.ndarray:
    """Extrapolate ``evaluate(x_k + side * delta * nu_k)`` to ``delta -> 0``.

    ``evaluate(pts, k)`` returns one value per point (``k`` are the node
    indices, for projections onto ``nu_k``). The limit is the value at zero
    of the interpolating polynomial in ``delta``.
    """
    nodes = np.asarray(nodes)
    deltas = np.asarray(deltas, dtype=float)
    X, nu = a.points[nodes], a.normals[nodes]
    samples = np.empty((len(deltas), len(nodes)))
    for i, d in enumerate(deltas):
        samples[i] = evaluate(X + side * d * nu, nodes)
    coef = np.polynomial.polynomial.polyfit(deltas, samples, len(deltas) - 1)
    return coef[0]


def jump_upsample(a: Assembly, delta_min: float, clearance: float = DEFAULT_CLEARANCE) -> int:
    """Smallest power-of-two refinement putting ``delta_min`` outside the clearance zone."""
    need = clearance * float(np.max(a.weights)) / delta_min
    q = 1
    while q < need:
        q *= 2
    return q
