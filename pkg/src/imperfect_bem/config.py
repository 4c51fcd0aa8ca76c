"""Experiment configuration: an INI-style file with flat key/value sections.

Grammar (documented in full in ``docs/config.md``)::

    [run]            seed, allow_large, threads
    [curve.NAME]     kind, center, radius | a, b, rotation | scale | amplitude, lobes;
                     n, reverse, inclusion (NAME of the curve whose inclusion a hole joins)
    [background]     kind = linear | poly | constant; direction | degree, part | value
    [gamma]          values = g1, g2, ...   or   min, max, points, spacing = log | linear
    [region]         annulus = r_in, r_out; annulus_center; annulus_samples; far_radii
    [solve]          gamma; grid = xmin, xmax, ymin, ymax, nx, ny
    [blowup]         radius, n, epsilons, gammas, gamma_min, gamma_fixed, probe
    [excision.outer], [excision.inner]   curve sections for the annulus/disk pairing
    [tolerance]      per-check overrides for ``verify``

Curves appear in file order. Keys are case-insensitive; ``#`` and ``;``
start comments.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, GeometryError
from .geometry import CurveParametrization, assemble, build_component
from .solver import HarmonicBackground

DEFAULT_TOLERANCES = {
    "np_one": 1e-8,
    "kstar_e": 1e-8,
    "plemelj": 1e-5,
    "plemelj_drop": 1e2,
    "jump": 1e-6,
    "dtn_kernel": 1e-8,
    "dtn_symmetry": 1e-6,
    "dtn_positivity": 1e-8,
    "contraction": 1e-6,
    "cap_symmetry": 1e-8,
    "equilibrium": 1e-8,
    "flux": 1e-9,
    "interior": 1e-7,
    "tangential_duality": 1e-12,
    "excision": 1e-7,
    "disk_oracle": 1e-8,
    "slope": 0.15,
    "blowup_slope": 0.1,
    "plateau_ratio": 2.0,
    "robin_floor": 1e-3,
}


@dataclass
class CurveSpec:
    name: str
    param: CurveParametrization
    n: int
    reverse: bool = False
    inclusion: str | None = None


@dataclass
class ExperimentConfig:
    path: str
    curves: list
    background: HarmonicBackground
    gammas: np.ndarray
    seed: int = 0
    allow_large: bool = False
    threads: int = 1
    annulus: tuple = (1.0, 2.0)
    annulus_center: tuple = (0.0, 0.0)
    annulus_samples: int = 256
    far_radii: tuple = (10.0, 100.0, 1000.0)
    solve_gamma: float = 0.1
    grid: tuple = (-1.5, 1.5, -1.5, 1.5, 31, 31)
    blowup: dict = field(default_factory=dict)
    excision: tuple | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def assembly(self):
        """Discretize the configured curves into an :class:`Assembly`."""
        names = [c.name for c in self.curves]
        labels, comps = [], []
        for c in self.curves:
            comps.append(build_component(c.param, c.n, c.reverse))
        # inclusions are numbered in file order; holes join their owner
        base = {}
        for c in self.curves:
            if c.inclusion is None:
                base[c.name] = len(base)
        for c in self.curves:
            if c.inclusion is None:
                labels.append(base[c.name])
            else:
                if c.inclusion not in base:
                    raise ConfigError(f"[curve.{c.name}] inclusion: unknown curve {c.inclusion!r} (known: {names})")
                labels.append(base[c.inclusion])
        return assemble(comps, inclusions=labels)

    def parameter_tuple(self) -> str:
        """Compact description of the geometry for CSV records."""
        return ";".join(f"{c.name}:{c.param.kind}:n={c.n}" for c in self.curves)


def default_config_path() -> Path:
    return Path(str(resources.files("imperfect_bem") / "data" / "default.ini"))


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    cur = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            cur = line[1:-1].strip()
            if key is None and cur == section:
                return i
            continue
        if cur == section and key is not None:
            k = line.split("=", 1)[0].split(":", 1)[0].strip().lower()
            if k == key:
                return i
    return None


class _Reader:
    def __init__(self, cp, text, path):
        self.cp, self.text, self.path = cp, text, path

    def fail(self, section, key, msg):
        ln = _line_of(self.text, section, key)
        where = f"{self.path}:{ln}: " if ln else f"{self.path}: "
        field_ = f"[{section}] {key}" if key else f"[{section}]"
        raise ConfigError(f"{where}{field_}: {msg}")

    def get(self, section, key, conv, default=None, required=False):
        if not self.cp.has_option(section, key):
            if required:
                self.fail(section, key, "missing required key")
            return default
        raw = self.cp.get(section, key)
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            self.fail(section, key, f"cannot parse {raw!r}: {exc}")


def _floats(raw):
    vals = [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    if not vals:
        raise ValueError("empty list")
    return vals


def _pair(raw):
    v = _floats(raw)
    if len(v) != 2:
        raise ValueError("expected two numbers")
    return tuple(v)


def _bool(raw):
    s = raw.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _curve(rd: _Reader, section: str, name: str) -> CurveSpec:
    kind = rd.get(section, "kind", str, required=True).strip()
    center = rd.get(section, "center", _pair, (0.0, 0.0))
    try:
        if kind == "circle":
            p = CurveParametrization.circle(center, rd.get(section, "radius", float, required=True))
        elif kind == "ellipse":
            p = CurveParametrization.ellipse(center, rd.get(section, "a", float, required=True),
                                             rd.get(section, "b", float, required=True),
                                             rd.get(section, "rotation", float, 0.0))
        elif kind == "kite":
            p = CurveParametrization.kite(center, rd.get(section, "scale", float, 1.0))
        elif kind == "star":
            p = CurveParametrization.star(center, rd.get(section, "radius", float, required=True),
                                          rd.get(section, "amplitude", float, 0.2),
                                          rd.get(section, "lobes", int, 5))
        else:
            rd.fail(section, "kind", f"unknown curve kind {kind!r}")
    except GeometryError as exc:
        rd.fail(section, None, str(exc))
    n = rd.get(section, "n", int, 128)
    if n < 16 or n % 2:
        rd.fail(section, "n", f"node count must be even and >= 16, got {n}")
    return CurveSpec(name, p, n, rd.get(section, "reverse", _bool, False),
                     rd.get(section, "inclusion", str, None))


def load_config(path=None, overrides=()) -> ExperimentConfig:
    """Parse and validate a configuration file.

    ``overrides`` are ``"section.key=value"`` strings applied after reading;
    the key is the text after the last dot.
    """
    path = Path(path) if path is not None else default_config_path()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read configuration: {exc}") from None
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for ov in overrides:
        if "=" not in ov or "." not in ov.split("=", 1)[0]:
            raise ConfigError(f"override {ov!r}: expected section.key=value")
        lhs, value = ov.split("=", 1)
        section, key = lhs.rsplit(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key.strip(), value.strip())

    rd = _Reader(cp, text, path)
    known = ("run", "background", "gamma", "region", "solve", "blowup", "tolerance")
    for s in cp.sections():
        if not (s in known or s.startswith("curve.") or s in ("excision.outer", "excision.inner")):
            rd.fail(s, None, "unknown section")

    curves = [_curve(rd, s, s.split(".", 1)[1]) for s in cp.sections() if s.startswith("curve.")]
    if not curves:
        raise ConfigError(f"{path}: no [curve.NAME] sections defined")

    bkind = rd.get("background", "kind", str, "linear").strip()
    if bkind == "linear":
        d = np.asarray(rd.get("background", "direction", _pair, (1.0, 0.0)))
        if not np.linalg.norm(d) > 0:
            rd.fail("background", "direction", "direction must be non-zero")
        bg = HarmonicBackground.linear(tuple(d / np.linalg.norm(d)))
    elif bkind == "poly":
        part = rd.get("background", "part", str, "re").strip()
        if part not in ("re", "im"):
            rd.fail("background", "part", "expected 're' or 'im'")
        bg = HarmonicBackground.poly(rd.get("background", "degree", int, 1), part)
    elif bkind == "constant":
        bg = HarmonicBackground.constant(rd.get("background", "value", float, 1.0))
    else:
        rd.fail("background", "kind", f"unknown background kind {bkind!r}")

    if cp.has_option("gamma", "values"):
        gammas = np.asarray(rd.get("gamma", "values", _floats))
    elif cp.has_section("gamma"):
        lo = rd.get("gamma", "min", float, required=True)
        hi = rd.get("gamma", "max", float, required=True)
        pts = rd.get("gamma", "points", int, 5)
        spacing = rd.get("gamma", "spacing", str, "log").strip()
        if spacing == "log":
            if not lo > 0:
                rd.fail("gamma", "min", "log spacing requires min > 0")
            gammas = np.geomspace(hi, lo, pts)
        elif spacing == "linear":
            gammas = np.linspace(hi, lo, pts)
        else:
            rd.fail("gamma", "spacing", f"expected 'log' or 'linear', got {spacing!r}")
        if pts < 1:
            rd.fail("gamma", "points", "need at least one point")
    else:
        gammas = np.array([0.0, 1e-3, 1e-1, 1.0, 10.0])
    if np.any(gammas < 0):
        rd.fail("gamma", "values" if cp.has_option("gamma", "values") else "min", "gamma must be >= 0")

    cfg = ExperimentConfig(
        path=str(path), curves=curves, background=bg, gammas=gammas,
        seed=rd.get("run", "seed", int, 0),
        allow_large=rd.get("run", "allow_large", _bool, False),
        threads=rd.get("run", "threads", int, 1),
    )
    cfg.annulus = rd.get("region", "annulus", _pair, cfg.annulus)
    if not 0 < cfg.annulus[0] < cfg.annulus[1]:
        rd.fail("region", "annulus", "need 0 < r_in < r_out")
    cfg.annulus_center = rd.get("region", "annulus_center", _pair, cfg.annulus_center)
    cfg.annulus_samples = rd.get("region", "annulus_samples", int, cfg.annulus_samples)
    cfg.far_radii = tuple(rd.get("region", "far_radii", _floats, list(cfg.far_radii)))
    if min(cfg.far_radii) <= 0:
        rd.fail("region", "far_radii", "radii must be positive")
    cfg.solve_gamma = rd.get("solve", "gamma", float, cfg.solve_gamma)
    if cfg.solve_gamma < 0:
        rd.fail("solve", "gamma", "gamma must be >= 0")
    grid = rd.get("solve", "grid", _floats, list(cfg.grid))
    if len(grid) != 6 or grid[4] < 1 or grid[5] < 1 or grid[0] >= grid[1] or grid[2] >= grid[3]:
        rd.fail("solve", "grid", "expected xmin, xmax, ymin, ymax, nx, ny with min < max")
    cfg.grid = tuple(grid[:4]) + (int(grid[4]), int(grid[5]))

    bl = {
        "radius": rd.get("blowup", "radius", float, 1.0),
        "n": rd.get("blowup", "n", int, 256),
        "epsilons": rd.get("blowup", "epsilons", _floats, [0.2, 0.1, 0.05, 0.025]),
        "gammas": rd.get("blowup", "gammas", _floats, [1e-6, 1e-3, 0.05, 0.5]),
        "gamma_min": rd.get("blowup", "gamma_min", float, 1e-6),
        "gamma_fixed": rd.get("blowup", "gamma_fixed", float, 0.05),
        "probe": rd.get("blowup", "probe", str, "midgap").strip(),
    }
    if bl["radius"] <= 0 or min(bl["epsilons"]) <= 0 or min(bl["gammas"]) < 0:
        rd.fail("blowup", None, "radius and epsilons must be positive, gammas non-negative")
    if bl["probe"] not in ("midgap", "boundary"):
        rd.fail("blowup", "probe", "expected 'midgap' or 'boundary'")
    cfg.blowup = bl

    if cp.has_section("excision.outer") or cp.has_section("excision.inner"):
        if not (cp.has_section("excision.outer") and cp.has_section("excision.inner")):
            rd.fail("excision.outer", None, "excision needs both [excision.outer] and [excision.inner]")
        cfg.excision = (_curve(rd, "excision.outer", "outer"), _curve(rd, "excision.inner", "inner"))

    if cp.has_section("tolerance"):
        for k in cp.options("tolerance"):
            if k not in DEFAULT_TOLERANCES:
                rd.fail("tolerance", k, f"unknown tolerance (known: {sorted(DEFAULT_TOLERANCES)})")
            cfg.tolerances[k] = rd.get("tolerance", k, float)

    if not cfg.allow_large:
        for c in curves:
            r = c.param.bounding_radius()
            if not r < 1.0:
                rd.fail(f"curve.{c.name}", None,
                        f"curve reaches radius {r:.4g} >= 1; the 2-D single layer needs the geometry "
                        "inside the unit disk (rescale all lengths, or set [run] allow_large = true)")
    return cfg
