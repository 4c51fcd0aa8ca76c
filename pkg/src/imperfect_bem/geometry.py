"""Smooth closed curves, their Nystrom node data, and multi-curve assemblies.

Every curve is a 2*pi-periodic map ``t -> x(t)`` with analytic first and
second derivatives. Nodes are the equispaced parameters ``t_k = 2*pi*k/n``,
so the arc weights ``w_k = (2*pi/n) |x'(t_k)|`` form the periodic trapezoid
rule, which is spectrally accurate for analytic data.

Orientation: a curve bounding an inclusion is traversed counter-clockwise and
the normal ``nu = (y', -x')/|x'|`` then points out of the inclusion. A curve
that bounds a hole of an inclusion (e.g. the inner circle of an annulus) is
built with ``reverse=True``; the same formula then points into the hole,
which is again outward with respect to the inclusion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import GeometryError

TWO_PI = 2.0 * np.pi

CURVE_KINDS = ("circle", "ellipse", "kite", "star")


@dataclass(frozen=True)
class CurveParametrization:
    """Analytic parametrization of one closed curve.

    Parameters
    ----------
    kind : {"circle", "ellipse", "kite", "star"}
    center : (float, float)
    radius : float
        Circle radius, or the base radius of a star.
    semi_axes : (float, float)
        Ellipse semi-axes ``(a, b)``.
    rotation : float
        Ellipse rotation angle in radians.
    scale : float
        Kite scale factor applied to ``(cos t + 0.65 cos 2t - 0.65, 1.5 sin t)``.
    amplitude, lobes : float, int
        Star radius ``radius * (1 + amplitude * cos(lobes * t))``.
    """

    kind: str
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    semi_axes: tuple[float, float] = (1.0, 1.0)
    rotation: float = 0.0
    scale: float = 1.0
    amplitude: float = 0.0
    lobes: int = 5

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "semi_axes", tuple(float(c) for c in self.semi_axes))
        if self.kind not in CURVE_KINDS:
            raise GeometryError(f"unknown curve kind {self.kind!r}; expected one of {CURVE_KINDS}")
        if self.kind == "circle" and not self.radius > 0:
            raise GeometryError(f"circle radius must be positive, got {self.radius}")
        if self.kind == "ellipse" and not min(self.semi_axes) > 0:
            raise GeometryError(f"ellipse semi-axes must be positive, got {self.semi_axes}")
        if self.kind == "kite" and not self.scale > 0:
            raise GeometryError(f"kite scale must be positive, got {self.scale}")
        if self.kind == "star":
            if not self.radius > 0:
                raise GeometryError(f"star base radius must be positive, got {self.radius}")
            if int(self.lobes) != self.lobes or self.lobes < 1:
                raise GeometryError(f"star lobes must be a positive integer, got {self.lobes}")
            # |x'|^2 = r'^2 + r^2 vanishes only if r(t) = 0 somewhere.
            if not abs(self.amplitude) < 1.0:
                raise GeometryError(
                    f"star amplitude {self.amplitude} makes the radius vanish (|x'| = 0)"
                )

    @classmethod
    def circle(cls, center=(0.0, 0.0), radius=1.0):
        return cls("circle", center=center, radius=radius)

    @classmethod
    def ellipse(cls, center=(0.0, 0.0), a=1.0, b=1.0, rotation=0.0):
        return cls("ellipse", center=center, semi_axes=(a, b), rotation=rotation)

    @classmethod
    def kite(cls, center=(0.0, 0.0), scale=1.0):
        return cls("kite", center=center, scale=scale)

    @classmethod
    def star(cls, center=(0.0, 0.0), radius=1.0, amplitude=0.2, lobes=5):
        return cls("star", center=center, radius=radius, amplitude=amplitude, lobes=lobes)

    def evaluate(self, t):
        """Return ``x(t), x'(t), x''(t)`` as arrays of shape ``(len(t), 2)``."""
        t = np.asarray(t, dtype=float)
        c, s = np.cos(t), np.sin(t)
        if self.kind == "circle":
            r = self.radius
            x = np.stack([r * c, r * s], axis=-1)
            dx = np.stack([-r * s, r * c], axis=-1)
            ddx = -x
        elif self.kind == "ellipse":
            a, b = self.semi_axes
            x = np.stack([a * c, b * s], axis=-1)
            dx = np.stack([-a * s, b * c], axis=-1)
            ddx = -x
            cr, sr = np.cos(self.rotation), np.sin(self.rotation)
            rot = np.array([[cr, -sr], [sr, cr]])
            x, dx, ddx = x @ rot.T, dx @ rot.T, ddx @ rot.T
        elif self.kind == "kite":
            k = self.scale
            c2, s2 = np.cos(2 * t), np.sin(2 * t)
            x = k * np.stack([c + 0.65 * c2 - 0.65, 1.5 * s], axis=-1)
            dx = k * np.stack([-s - 1.3 * s2, 1.5 * c], axis=-1)
            ddx = k * np.stack([-c - 2.6 * c2, -1.5 * s], axis=-1)
        else:
            m, amp, r0 = self.lobes, self.amplitude, self.radius
            r = r0 * (1 + amp * np.cos(m * t))
            dr = -r0 * amp * m * np.sin(m * t)
            ddr = -r0 * amp * m * m * np.cos(m * t)
            e_r = np.stack([c, s], axis=-1)
            e_t = np.stack([-s, c], axis=-1)
            x = r[..., None] * e_r
            dx = dr[..., None] * e_r + r[..., None] * e_t
            ddx = (ddr - r)[..., None] * e_r + 2 * dr[..., None] * e_t
        return x + np.asarray(self.center), dx, ddx

    def bounding_radius(self, n=512):
        """Largest distance from the origin over a dense parameter sample."""
        x, _, _ = self.evaluate(np.linspace(0.0, TWO_PI, n, endpoint=False))
        return float(np.max(np.hypot(x[:, 0], x[:, 1])))

    def scaled(self, factor):
        """The same shape with every length multiplied by ``factor``."""
        f = float(factor)
        return CurveParametrization(
            self.kind,
            center=(self.center[0] * f, self.center[1] * f),
            radius=self.radius * f,
            semi_axes=(self.semi_axes[0] * f, self.semi_axes[1] * f),
            rotation=self.rotation,
            scale=self.scale * f,
            amplitude=self.amplitude,
            lobes=self.lobes,
        )


@dataclass(frozen=True, eq=False)
class BoundaryComponent:
    """Node data of one discretized closed curve."""

    param: CurveParametrization
    n_nodes: int
    reverse: bool
    t: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    jacobians: np.ndarray
    normals: np.ndarray
    curvatures: np.ndarray
    weights: np.ndarray

    @property
    def arclength(self) -> float:
        return float(self.weights.sum())

    def spacing(self) -> np.ndarray:
        """Local node spacing (arc length per node)."""
        return self.weights

    def evaluate(self, t):
        """Curve point(s) in the traversal direction of this component."""
        s = -np.asarray(t, dtype=float) if self.reverse else np.asarray(t, dtype=float)
        return self.param.evaluate(s)[0]


def build_component(param: CurveParametrization, n: int, reverse: bool = False,
                    validate: bool = True) -> BoundaryComponent:
    """Discretize ``param`` at ``n`` equispaced parameter nodes.

    ``n`` must be even and at least 16 (the logarithmic quadrature pairs each
    node with an antipodal one). ``validate=False`` skips the quadratic-cost
    simplicity test, for refinements of an already validated curve.
    """
    if int(n) != n or n % 2 or n < 16:
        raise GeometryError(f"n_nodes must be an even integer >= 16, got {n}")
    n = int(n)
    t = TWO_PI * np.arange(n) / n
    if reverse:
        x, dx, ddx = param.evaluate(-t)
        dx = -dx
    else:
        x, dx, ddx = param.evaluate(t)
    jac = np.hypot(dx[:, 0], dx[:, 1])
    if np.min(jac) <= 1e-12 * max(np.max(jac), 1.0):
        raise GeometryError("degenerate parametrization: |x'(t)| vanishes at a node")
    normals = np.stack([dx[:, 1], -dx[:, 0]], axis=-1) / jac[:, None]
    curv = (dx[:, 0] * ddx[:, 1] - dx[:, 1] * ddx[:, 0]) / jac**3
    weights = (TWO_PI / n) * jac

    # Simplicity: non-adjacent nodes must stay apart.
    if validate:
        _check_simple(x, weights)

    return BoundaryComponent(
        param=param, n_nodes=n, reverse=bool(reverse), t=t, points=x, tangents=dx,
        jacobians=jac, normals=normals, curvatures=curv, weights=weights,
    )


def _check_simple(x, weights):
    n = len(x)
    d = np.hypot(x[:, None, 0] - x[None, :, 0], x[:, None, 1] - x[None, :, 1])
    idx = np.arange(n)
    sep = np.abs(idx[:, None] - idx[None, :])
    sep = np.minimum(sep, n - sep)
    floor = 0.25 * float(np.min(weights))
    if np.any(d[sep > 1] < floor):
        raise GeometryError("curve appears self-intersecting (non-adjacent nodes closer than spacing)")


def _winding(points: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Winding number of the closed node polygon ``points`` around each target."""
    d = points[None, :, :] - pts[:, None, :]
    ang = np.arctan2(d[..., 1], d[..., 0])
    dang = np.diff(np.concatenate([ang, ang[:, :1]], axis=1), axis=1)
    dang = (dang + np.pi) % TWO_PI - np.pi
    return np.rint(dang.sum(axis=1) / TWO_PI).astype(int)


@dataclass(frozen=True, eq=False)
class Assembly:
    """Ordered curves with global node indexing.

    ``inclusion_of_curve[c]`` names the inclusion ``D_j`` bounded by curve
    ``c``. By default every curve is its own inclusion; a reversed hole curve
    shares the index of the curve that surrounds it.
    """

    components: tuple
    inclusion_of_curve: tuple
    offsets: np.ndarray = field(repr=False)

    @property
    def n_curves(self) -> int:
        return len(self.components)

    @property
    def n_inclusions(self) -> int:
        return max(self.inclusion_of_curve) + 1

    @property
    def n_nodes(self) -> int:
        return int(self.offsets[-1])

    @property
    def points(self) -> np.ndarray:
        return self._cat("points")

    @property
    def normals(self) -> np.ndarray:
        return self._cat("normals")

    @property
    def weights(self) -> np.ndarray:
        return self._cat("weights")

    @property
    def jacobians(self) -> np.ndarray:
        return self._cat("jacobians")

    @property
    def curvatures(self) -> np.ndarray:
        return self._cat("curvatures")

    def _cat(self, name):
        cache = self.__dict__.setdefault("_cache", {})
        if name not in cache:
            arr = np.concatenate([getattr(c, name) for c in self.components])
            arr.setflags(write=False)
            cache[name] = arr
        return cache[name]

    def curve_slice(self, c: int) -> slice:
        return slice(int(self.offsets[c]), int(self.offsets[c + 1]))

    @property
    def curve_of_node(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_curves), np.diff(self.offsets))

    @property
    def inclusion_of_node(self) -> np.ndarray:
        return np.asarray(self.inclusion_of_curve)[self.curve_of_node]

    def indicator(self, j: int) -> np.ndarray:
        """Node values of ``1_{dD_j}``."""
        if not 0 <= j < self.n_inclusions:
            raise IndexError(f"inclusion index {j} out of range 0..{self.n_inclusions - 1}")
        return (self.inclusion_of_node == j).astype(float)

    def integrals(self, values) -> np.ndarray:
        """Per-inclusion boundary integrals of node-sampled densities.

        ``values`` may be a vector ``(M,)`` or a matrix ``(M, k)``; the result
        has shape ``(N,)`` or ``(N, k)``.
        """
        v = np.asarray(values)
        wv = self.weights[:, None] * v.reshape(v.shape[0], -1)
        out = np.zeros((self.n_inclusions, wv.shape[1]))
        np.add.at(out, self.inclusion_of_node, wv)
        return out[:, 0] if v.ndim == 1 else out

    def is_tilde(self, values, tol=1e-9) -> bool:
        """True when every per-inclusion integral vanishes to ``tol`` (scaled)."""
        v = np.asarray(values, dtype=float)
        scale = max(float(np.sum(self.weights * np.abs(v))), 1e-300)
        return bool(np.all(np.abs(self.integrals(v)) <= tol * scale))

    def inclusion_containing(self, pts) -> np.ndarray:
        """Index of the inclusion containing each point, or -1 in the exterior."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        w = np.zeros((self.n_inclusions, len(pts)), dtype=int)
        for c, comp in enumerate(self.components):
            w[self.inclusion_of_curve[c]] += _winding(comp.points, pts)
        out = np.full(len(pts), -1)
        for j in range(self.n_inclusions):
            out[w[j] == 1] = j
        return out

    def distance_to_nodes(self, pts):
        """Distance from each point to the nearest node and that node's spacing ratio.

        Returns ``(dist, ratio)`` where ``ratio = min_k |x - x_k| / h_k``.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        X, h = self.points, self.weights
        dist = np.empty(len(pts))
        ratio = np.empty(len(pts))
        for s in range(0, len(pts), 2048):
            p = pts[s:s + 2048]
            d = np.hypot(p[:, None, 0] - X[None, :, 0], p[:, None, 1] - X[None, :, 1])
            dist[s:s + 2048] = d.min(axis=1)
            ratio[s:s + 2048] = (d / h[None, :]).min(axis=1)
        return dist, ratio

    def refined(self, factor: int) -> "Assembly":
        """The same curves discretized with ``factor`` times as many nodes."""
        comps = tuple(build_component(c.param, c.n_nodes * factor, c.reverse, validate=False)
                      for c in self.components)
        offsets = np.concatenate([[0], np.cumsum([c.n_nodes for c in comps])])
        return Assembly(components=comps, inclusion_of_curve=self.inclusion_of_curve, offsets=offsets)

    def interior_probe(self, j: int) -> np.ndarray:
        """A point well inside inclusion ``j``, verified by winding number.

        Tries the node centroid of the inclusion first, then points displaced
        inward along the normals, keeping the one farthest from all nodes.
        """
        mask = self.inclusion_of_node == j
        X = self.points[mask]
        centroid = X.mean(axis=0)
        if self.inclusion_containing(centroid)[0] == j:
            return centroid
        nu = self.normals[mask]
        h = np.sqrt(np.sum(self.weights[mask]))
        cands = np.concatenate([X - s * h * nu for s in (0.05, 0.1, 0.2, 0.3)])
        inside = self.inclusion_containing(cands) == j
        if not np.any(inside):
            raise GeometryError(f"could not locate an interior point of inclusion {j}")
        cands = cands[inside]
        dist, _ = self.distance_to_nodes(cands)
        return cands[int(np.argmax(dist))]


def assemble(components: Sequence[BoundaryComponent], inclusions=None, clearance: float = 0.0) -> Assembly:
    """Stack curves into one :class:`Assembly`.

    Parameters
    ----------
    components : sequence of BoundaryComponent
    inclusions : sequence of int, optional
        Inclusion index per curve (default: one inclusion per curve).
    clearance : float
        Minimum node distance required between distinct curves.
    """
    comps = tuple(components)
    if not comps:
        raise GeometryError("an assembly needs at least one boundary component")
    if inclusions is None:
        inclusions = tuple(range(len(comps)))
    inclusions = tuple(int(i) for i in inclusions)
    if len(inclusions) != len(comps):
        raise GeometryError("one inclusion label per curve is required")
    if sorted(set(inclusions)) != list(range(max(inclusions) + 1)):
        raise GeometryError(f"inclusion labels must be 0..N-1 without gaps, got {inclusions}")
    for a in range(len(comps)):
        for b in range(a + 1, len(comps)):
            pa, pb = comps[a].points, comps[b].points
            d = np.hypot(pa[:, None, 0] - pb[None, :, 0], pa[:, None, 1] - pb[None, :, 1]).min()
            if not d > clearance:
                raise GeometryError(
                    f"curves {a} and {b} overlap or violate clearance: node gap {d:.3e} <= {clearance:.3e}"
                )
    offsets = np.concatenate([[0], np.cumsum([c.n_nodes for c in comps])])
    asm = Assembly(components=comps, inclusion_of_curve=inclusions, offsets=offsets)

    # A curve may sit inside another inclusion only as one of its holes.
    for c, comp in enumerate(comps):
        j = asm.inclusion_containing(comp.points[:1] + 1e-3 * comp.weights[0] * comp.normals[:1])[0]
        if j != -1 and j != inclusions[c]:
            raise GeometryError(f"curve {c} lies inside inclusion {j}; inclusions must be disjoint")
        k = inclusions[c]
        if asm.inclusion_containing(comp.points[:1] - 1e-3 * comp.weights[0] * comp.normals[:1])[0] != k:
            raise GeometryError(f"curve {c} orientation is inconsistent with inclusion {k}")
    return asm


def closest_points(a: Assembly):
    """Closest pair of boundary points on distinct inclusions.

    The closest node pair seeds an alternating golden-section refinement of
    the two curve parameters. Returns ``(distance, point_a, point_b)``.
    """
    if a.n_inclusions < 2:
        raise GeometryError("a gap needs at least two inclusions")
    best = (np.inf, None, None)
    for ca in range(a.n_curves):
        for cb in range(ca + 1, a.n_curves):
            if a.inclusion_of_curve[ca] == a.inclusion_of_curve[cb]:
                continue
            A, B = a.components[ca], a.components[cb]
            d = np.hypot(A.points[:, None, 0] - B.points[None, :, 0],
                         A.points[:, None, 1] - B.points[None, :, 1])
            i, k = np.unravel_index(np.argmin(d), d.shape)
            ta, tb = A.t[i], B.t[k]
            ha, hb = TWO_PI / A.n_nodes, TWO_PI / B.n_nodes

            def dist(s, u):
                return float(np.linalg.norm(A.evaluate(np.array([s]))[0] - B.evaluate(np.array([u]))[0]))

            for _ in range(20):
                ta = minimize_scalar(lambda s: dist(s, tb), bracket=(ta - ha, ta + ha),
                                     method="golden", options={"xtol": 1e-12}).x
                tb = minimize_scalar(lambda u: dist(ta, u), bracket=(tb - hb, tb + hb),
                                     method="golden", options={"xtol": 1e-12}).x
            dd = dist(ta, tb)
            if dd > d[i, k]:
                dd, pa, pb = float(d[i, k]), A.points[i], B.points[k]
            else:
                pa, pb = A.evaluate(np.array([ta]))[0], B.evaluate(np.array([tb]))[0]
            if dd < best[0]:
                best = (dd, np.asarray(pa), np.asarray(pb))
    return best


def min_gap(a: Assembly) -> float:
    """Minimum distance between points on distinct inclusions."""
    return closest_points(a)[0]


def two_disks(radius: float, gap: float, n: int, scale: float = 1.0) -> Assembly:
    """Equal disks centred at ``(+-(radius + gap/2), 0)``, optionally rescaled."""
    cx = radius + 0.5 * gap
    comps = [
        build_component(CurveParametrization.circle((-cx * scale, 0.0), radius * scale), n),
        build_component(CurveParametrization.circle((cx * scale, 0.0), radius * scale), n),
    ]
    return assemble(comps)
