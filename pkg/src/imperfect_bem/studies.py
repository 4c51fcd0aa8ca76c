"""Study drivers behind the CLI subcommands.

Each driver returns a :class:`StudyResult` holding long-form records
``(study, params, metric, value)``, fitted slopes and pass/fail checks.
Parameter sweeps run on a thread pool; results are merged in parameter
order so output files do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boundary_ops import DEFAULT_CLEARANCE, LayerOperators
from .capacitance import analytic_disk_capacitance, capacitance_matrix, excision_invariance_check
from .dtn import build_dtn
from .fitting import loglog_slope
from .geometry import two_disks
from .solver import (
    HarmonicBackground,
    SampleRegion,
    TransmissionProblem,
    decay_at_infinity_check,
    density_error,
    first_order_term,
    gradient_sup,
)
from .verify import Check, run_checks

FLOAT_FMT = "%.16e"


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return FLOAT_FMT % float(x)


@dataclass(frozen=True)
class Record:
    study: str
    params: str
    metric: str
    value: float


@dataclass(frozen=True)
class SlopeReport:
    name: str
    fit: object  # SlopeFit or None
    expected: float
    tolerance: float

    @property
    def passed(self) -> bool | None:
        if self.fit is None:
            return None
        return abs(self.fit.slope - self.expected) <= self.tolerance

    def line(self) -> str:
        if self.fit is None:
            return f"n/a   slope {self.name:<22s} (fewer than 4 usable points)"
        lo, hi = self.fit.bounds()
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag}  slope {self.name:<22s} {self.fit.slope:+.4f}  expected {self.expected:+.2f} "
                f"+- {self.tolerance:.2f}  95% CI [{lo:+.3f}, {hi:+.3f}]")


@dataclass
class StudyResult:
    study: str
    records: list = field(default_factory=list)
    slopes: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # file name -> (header, rows)
    texts: dict = field(default_factory=dict)  # file name -> content
    notes: list = field(default_factory=list)

    def add(self, params: str, metric: str, value) -> None:
        self.records.append(Record(self.study, params, metric, float(value)))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and all(s.passed is not False for s in self.slopes)

    def report(self) -> str:
        lines = [f"== {self.study} =="]
        lines += [c.line() for c in self.checks]
        lines += [s.line() for s in self.slopes]
        lines += self.notes
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)

    def write(self, out_dir) -> list:
        """Write ``<study>.csv``, any extra tables and texts; returns the paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{self.study}.csv"]
        rows = [(r.study, r.params, r.metric, fmt(r.value)) for r in self.records]
        _write_csv(paths[0], ("study", "params", "metric", "value"), rows)
        for name, (header, trows) in self.tables.items():
            paths.append(out / name)
            _write_csv(paths[-1], header, [tuple(fmt(v) for v in row) for row in trows])
        for name, text in self.texts.items():
            paths.append(out / name)
            paths[-1].write_text(text, encoding="utf-8")
        return paths


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _pool_map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _threads(cfg, threads):
    return int(threads if threads is not None else cfg.threads)


# ---------------------------------------------------------------- verify

def verify_study(cfg, threads=None) -> StudyResult:
    res = StudyResult("verify")
    res.checks = run_checks(cfg)
    params = cfg.parameter_tuple()
    for c in res.checks:
        res.add(params, c.name, c.value)
    return res


# ----------------------------------------------------------- capacitance

def _single_circle_radius(cfg):
    if len(cfg.curves) == 1 and cfg.curves[0].param.kind == "circle" and not cfg.curves[0].reverse:
        return cfg.curves[0].param.radius
    return None


def capacitance_study(cfg, threads=None) -> StudyResult:
    """``C^gamma`` over the configured grid, with disk and excision references."""
    res = StudyResult("capacitance")
    tol = cfg.tolerances
    dtn = build_dtn(LayerOperators.build(cfg.assembly()), robin_floor=tol["robin_floor"])
    R = _single_circle_radius(cfg)
    geo = cfg.parameter_tuple()
    rows, summary = [], []
    mats = _pool_map(lambda g: capacitance_matrix(dtn, g), cfg.gammas, _threads(cfg, threads))
    worst_sym, worst_eig, worst_oracle = 0.0, np.inf, 0.0
    for g, C in zip(cfg.gammas, mats):
        params = f"{geo};gamma={fmt(g)}"
        ref = analytic_disk_capacitance(R, g) if R is not None else None
        for i in range(C.C.shape[0]):
            for j in range(C.C.shape[1]):
                rows.append(("config", g, i, j, C.C[i, j], "" if ref is None else ref))
                res.add(params, f"C_{i}{j}", C.C[i, j])
        res.add(params, "symmetry_residual", C.symmetry_residual)
        res.add(params, "min_eigenvalue", C.min_eigenvalue)
        summary.append(("config", g, C.symmetry_residual, C.min_eigenvalue, int(C.is_positive_definite)))
        worst_sym = max(worst_sym, C.symmetry_residual)
        worst_eig = min(worst_eig, C.min_eigenvalue)
        if ref is not None:
            worst_oracle = max(worst_oracle, abs(C.C[0, 0] - ref) / ref)
    res.checks.append(Check("cap_symmetry", worst_sym, tol["cap_symmetry"], worst_sym <= tol["cap_symmetry"]))
    res.checks.append(Check("cap_positive", worst_eig, 0.0, bool(worst_eig > 0), "min eigenvalue"))
    if R is not None:
        res.checks.append(Check("disk_oracle", worst_oracle, tol["disk_oracle"],
                                worst_oracle <= tol["disk_oracle"], f"R = {R:g}"))

    if cfg.excision is not None:
        outer, inner = cfg.excision
        gaps = _pool_map(lambda g: excision_invariance_check(outer.param, inner.param, g, outer.n, inner.n),
                         cfg.gammas, _threads(cfg, threads))
        ref_R = outer.param.radius if outer.param.kind == "circle" else None
        ex_geo = f"excision:{outer.param.kind}:n={outer.n}|{inner.param.kind}:n={inner.n}"
        worst = 0.0
        for g, ex in zip(cfg.gammas, gaps):
            ref = "" if ref_R is None else analytic_disk_capacitance(ref_R, g)
            rows.append(("excision_D", g, 0, 0, ex.C_D, ref))
            rows.append(("excision_E", g, 0, 0, ex.C_E, ref))
            params = f"{ex_geo};gamma={fmt(g)}"
            res.add(params, "C_D", ex.C_D)
            res.add(params, "C_E", ex.C_E)
            res.add(params, "relative_gap", ex.relative_gap)
            worst = max(worst, ex.relative_gap)
        res.checks.append(Check("excision", worst, tol["excision"], worst <= tol["excision"]))

    res.tables["capacitance_table.csv"] = (("domain", "gamma", "i", "j", "C_ij", "analytic_ref"), rows)
    res.tables["capacitance_summary.csv"] = (
        ("domain", "gamma", "symmetry_residual", "min_eigenvalue", "positive_definite"), summary)
    return res


# ----------------------------------------------------------- convergence

CONVERGENCE_EXPECTED = (
    ("density_error", 1.0),
    ("u_sup_error", 1.0),
    ("grad_sup_error", 1.0),
    ("first_order_remainder", 2.0),
)


def convergence_metrics(problem: TransmissionProblem, v1, sol0, pts, gamma: float) -> dict:
    """The four error norms of one ``gamma`` against ``gamma = 0``."""
    sol = problem.solve(gamma)
    u, g = sol.eval_field(pts, True)
    u0, g0 = sol0
    vv = v1(pts)
    return {
        "density_error": density_error(sol),
        "u_sup_error": float(np.max(np.abs(u - u0))),
        "grad_sup_error": float(np.max(np.hypot(*(g - g0).T))),
        "first_order_remainder": float(np.max(np.abs(u - u0 - gamma * vv))),
    }


def convergence_study(cfg, threads=None) -> StudyResult:
    res = StudyResult("convergence")
    a = cfg.assembly()
    dtn = build_dtn(LayerOperators.build(a), robin_floor=cfg.tolerances["robin_floor"])
    problem = TransmissionProblem.build(a, cfg.background, dtn)
    region = SampleRegion.annulus(*cfg.annulus, center=cfg.annulus_center)
    pts = region.points(a, cfg.annulus_samples)
    sol0 = problem.solve(0.0).eval_field(pts, True)
    v1 = first_order_term(problem)
    gammas = [float(g) for g in cfg.gammas if g > 0]
    metrics = _pool_map(lambda g: convergence_metrics(problem, v1, sol0, pts, g), gammas, _threads(cfg, threads))
    geo = cfg.parameter_tuple()
    ann = f"annulus={fmt(cfg.annulus[0])},{fmt(cfg.annulus[1])}"
    for g, m in zip(gammas, metrics):
        for name, _ in CONVERGENCE_EXPECTED:
            res.add(f"{geo};{ann};gamma={fmt(g)}", name, m[name])
    for name, expected in CONVERGENCE_EXPECTED:
        fit = loglog_slope(gammas, [m[name] for m in metrics])
        res.slopes.append(SlopeReport(name, fit, expected, cfg.tolerances["slope"]))
        if fit is not None:
            res.add(f"{geo};{ann}", f"slope_{name}", fit.slope)
    return res


# ---------------------------------------------------------------- blowup

def blowup_geometry_scale(radius: float, epsilons) -> float:
    """Length scale putting the two-disk configuration inside the unit disk."""
    return 0.88 / (2 * radius + max(epsilons))


def blowup_metric(sol, probe: str) -> float:
    if probe == "boundary":
        return gradient_sup(sol, SampleRegion("boundary"))
    return gradient_sup(sol, SampleRegion("midgap"), n_samples=33, clearance=DEFAULT_CLEARANCE, upsample="auto")


def blowup_column(radius: float, n: int, eps: float, gammas, probe: str, scale: float):
    """Metrics for one gap ``eps`` at each ``gamma`` (lengths in unscaled units).

    The geometry and ``gamma`` are both multiplied by ``scale``; with a
    linear background the gradient is unchanged by this rescaling.
    """
    a = two_disks(radius, eps, n, scale=scale)
    problem = TransmissionProblem.build(a, HarmonicBackground.linear((1.0, 0.0)))
    return [blowup_metric(problem.solve(g * scale), probe) for g in gammas]


def blowup_study(cfg, threads=None) -> StudyResult:
    """Two-disk regime map of ``sup |grad u|`` over ``(gamma, eps)``."""
    res = StudyResult("blowup")
    bl = cfg.blowup
    tol = cfg.tolerances
    R, n, probe = bl["radius"], bl["n"], bl["probe"]
    eps = sorted(bl["epsilons"], reverse=True)
    gams = sorted(set(bl["gammas"]) | {bl["gamma_min"], bl["gamma_fixed"]})
    scale = blowup_geometry_scale(R, eps)
    cols = _pool_map(lambda e: blowup_column(R, n, e, gams + [e], probe, scale), eps, _threads(cfg, threads))
    grid = {}
    rows = []
    for e, col in zip(eps, cols):
        for g, m in zip(gams, col[:-1]):
            grid[(g, e)] = m
            rows.append(("grid", g, e, m))
        grid[("diag", e)] = col[-1]
        rows.append(("diagonal", e, e, col[-1]))
    geo = f"two_disks:R={fmt(R)}:n={n}:probe={probe}:scale={fmt(scale)}"
    for kind, g, e, m in rows:
        res.add(f"{geo};cell={kind};gamma={fmt(g)};eps={fmt(e)}", "grad_sup", m)
    res.tables["blowup_map.csv"] = (("cell", "gamma", "eps", "grad_sup"), rows)

    st = tol["blowup_slope"]
    fit_eps = loglog_slope(eps, [grid[(bl["gamma_min"], e)] for e in eps])
    res.slopes.append(SlopeReport(f"eps@gamma={bl['gamma_min']:g}", fit_eps, -0.5, st))
    fit_diag = loglog_slope([2 * e for e in eps], [grid[("diag", e)] for e in eps])
    res.slopes.append(SlopeReport("diagonal(gamma+eps)", fit_diag, -0.5, st))
    plateau = [grid[(bl["gamma_fixed"], e)] for e in eps]
    ratio = max(plateau) / min(plateau)
    res.checks.append(Check(f"plateau@gamma={bl['gamma_fixed']:g}", ratio, tol["plateau_ratio"],
                            bool(ratio < tol["plateau_ratio"]), "max/min over eps"))
    for name, fit in (("slope_eps", fit_eps), ("slope_diagonal", fit_diag)):
        if fit is not None:
            res.add(geo, name, fit.slope)
    res.add(geo, "plateau_ratio", ratio)

    # monotonicity in gamma at the widest gap: reported, not asserted
    wide = [grid[(g, eps[0])] for g in gams]
    mono = all(x >= y for x, y in zip(wide, wide[1:]))
    res.add(f"{geo};eps={fmt(eps[0])}", "monotone_in_gamma", float(mono))
    res.notes.append(f"info  metric monotone decreasing in gamma at eps={eps[0]:g}: {'yes' if mono else 'no'}")
    return res


# ----------------------------------------------------------------- solve

PLOT_SCRIPT = """# gnuplot script: colour map of u from field.csv (long form x,y,metric,value)
set datafile separator ","
set size ratio -1
set title "u, gamma = {gamma}"
set xlabel "x"
set ylabel "y"
plot "< awk -F, '$3==\\"u\\"' field.csv" using 1:2:4 with points palette pt 5 ps 0.6 notitle
pause -1
"""


def dipole_moment(sol) -> np.ndarray:
    """``P`` with ``u - h ~ P . x / |x|^2`` at infinity."""
    a = sol.assembly
    w = a.weights[:, None]
    phi = sol.phi[:, None]
    return -(np.sum(w * a.points * phi, axis=0) - sol.gamma * np.sum(w * a.normals * phi, axis=0)) / (2 * np.pi)


def solve_study(cfg, threads=None) -> StudyResult:
    res = StudyResult("solve")
    a = cfg.assembly()
    problem = TransmissionProblem.build(a, cfg.background)
    g = cfg.solve_gamma
    sol = problem.solve(g)
    sol0 = problem.solve(0.0)
    params = f"{cfg.parameter_tuple()};gamma={fmt(g)}"

    x0, x1, y0, y1, nx, ny = cfg.grid
    X, Y = np.meshgrid(np.linspace(x0, x1, nx), np.linspace(y0, y1, ny))
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    _, ratio = a.distance_to_nodes(pts)
    keep = ratio >= DEFAULT_CLEARANCE
    dropped = int(np.count_nonzero(~keep))
    pts = pts[keep]
    u, grad = sol.eval_field(pts, True)
    rows = []
    for p, uu, gg in zip(pts, u, grad):
        rows += [(p[0], p[1], "u", uu), (p[0], p[1], "ux", gg[0]), (p[0], p[1], "uy", gg[1])]
    res.tables["field.csv"] = (("x", "y", "metric", "value"), rows)
    res.add(params, "dropped_points", dropped)
    res.notes.append(f"info  grid points dropped by the clearance rule: {dropped}")

    for j, (c, aj) in enumerate(zip(sol.interior_constants(), sol.a)):
        res.add(params, f"interior_constant_{j}", c)
        res.add(params, f"a_{j}", aj)
    P = dipole_moment(sol)
    res.add(params, "dipole_x", P[0])
    res.add(params, "dipole_y", P[1])
    for R, du, dg in decay_at_infinity_check(sol, sol0, cfg.far_radii):
        res.add(f"{params};radius={fmt(R)}", "far_u_times_r", du)
        res.add(f"{params};radius={fmt(R)}", "far_grad_times_r2", dg)
    res.texts["plot_field.gp"] = PLOT_SCRIPT.format(gamma=f"{g:g}")
    return res


STUDIES = {
    "verify": verify_study,
    "capacitance": capacitance_study,
    "convergence": convergence_study,
    "blowup": blowup_study,
    "solve": solve_study,
}
