"""Command line experiment runner.

``bsasym <experiment> --config <path> [--desk] [--out <dir>]``

Configs are flat ``key = value`` files with ``#`` comments and dotted keys
(``grid.N = 64``). Values not given fall back to the experiment defaults,
then to ``--desk`` overrides. Every CSV starts with a comment line echoing
the resolved config.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, oracles
from .grid import Field, GridSpec, l2_seminorm, write_heightmap
from .solvers import (
    BlowUpError,
    ConfigError,
    RadialProfile,
    SolverConfig,
    propagate,
    run,
    run_radial,
    trotter_kato,
)
from .sources import L1Cone, RadialCone, TwinBalls, TwinCones, sample_to_field, source_from_config
from .stencils import StencilParams

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INVARIANT, EXIT_BLOWUP, EXIT_CONFIG = 0, 1, 2, 3

EXPERIMENTS = ("ex1", "ex2", "ex3", "volcano", "twin", "tk", "radial", "invariants")

# key -> default; the default's type drives parsing (None means optional float,
# or a string for the few path-like keys)
DEFAULTS: dict[str, object] = {
    "grid.R": 2.56,
    "grid.N": 128,
    "solver.scheme": "fmcf",
    "solver.dt_factor": None,
    "solver.eps": 0.001,
    "solver.rho": 0.01,
    "solver.limiter": "printed",
    "solver.lambda": 0.5,
    "solver.Lambda": 5.05,
    "solver.delta": 1.0,
    "source.kind": "radial_cone",
    "source.r": 1.6,
    "source.R0": None,
    "source.offset": None,
    "source.table_path": "",
    "run.T": 40.0,
    "run.sample_interval": 0.25,
    "sweep.param": "",
    "sweep.start": None,
    "sweep.stop": None,
    "sweep.step": None,
    "fit.r_min": 1.6,
    "fit.r_max": 2.0,
    "volcano.times": "1.25,2.5",
    "volcano.r_max": None,
    "tk.t": 1.0,
    "tk.tau0": 0.1,
    "tk.levels": 3,
    "radial.dr": 0.005,
    "radial.r_max": 4.0,
    "radial.compare_r_max": 2.5,
    "radial.n_controls": 33,
    "invariants.inject_superadditive": False,
}

_STRING_KEYS = {"solver.scheme", "solver.limiter", "source.kind", "source.table_path",
                "sweep.param", "volcano.times"}

EXPERIMENT_DEFAULTS: dict[str, dict[str, object]] = {
    "ex1": {"source.kind": "radial_cone", "sweep.param": "source.r",
            "sweep.start": 0.8, "sweep.stop": 1.6, "sweep.step": 0.2},
    "ex2": {"source.kind": "l1_cone", "sweep.param": "source.r",
            "sweep.start": 0.8, "sweep.stop": 2.0, "sweep.step": 0.1},
    "ex3": {"source.kind": "twin_cones", "source.R0": 1.2, "sweep.param": "source.offset",
            "sweep.start": 0.0, "sweep.stop": 1.5, "sweep.step": 0.5},
    "volcano": {"solver.scheme": "imcf_truncated", "source.kind": "ball_indicator",
                "source.R0": 0.2},
    "twin": {"solver.scheme": "imcf_truncated", "source.kind": "twin_balls",
             "source.R0": 0.2, "source.offset": 0.8},
    "tk": {"source.kind": "radial_cone", "source.r": 1.2},
    "radial": {"source.kind": "radial_cone", "source.r": 1.6, "run.T": 5.0},
    "invariants": {"grid.N": 64, "run.T": 10.0},
}

DESK = {"grid.N": 64, "run.T": 10.0}
_DESK_KEEPS_T = ("volcano", "twin", "tk", "radial")


# -- configuration -------------------------------------------------------------

def _parse_value(key: str, text: str):
    default = DEFAULTS[key]
    if key in _STRING_KEYS:
        return text
    if isinstance(default, bool):
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}")
    try:
        if isinstance(default, int):
            return int(text)
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite")
    return value


def parse_config_text(text: str) -> dict[str, object]:
    """Parse ``key = value`` lines; unknown keys and malformed lines raise ConfigError."""
    out: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(" #", 1)[0].strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _parse_value(key, value)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    values: dict
    out_dir: Path

    def __getitem__(self, key):
        return self.values[key]

    @property
    def spec(self) -> GridSpec:
        return GridSpec(float(self["grid.R"]), int(self["grid.N"]))

    def solver(self, scheme: str | None = None) -> SolverConfig:
        scheme = scheme or str(self["solver.scheme"])
        stencil = StencilParams(eps=float(self["solver.eps"]), rho=float(self["solver.rho"]),
                                limiter=str(self["solver.limiter"]))
        return SolverConfig.for_grid(scheme, self.spec.dx, self["solver.dt_factor"], stencil=stencil,
                                     lam=float(self["solver.lambda"]), Lam=float(self["solver.Lambda"]),
                                     delta=float(self["solver.delta"]))

    def source(self, **override):
        params = {"r": self["source.r"], "R0": self["source.R0"], "offset": self["source.offset"],
                  "table_path": self["source.table_path"] or None}
        params.update(override)
        return source_from_config(str(self["source.kind"]), **params)

    def sweep_values(self) -> list[float]:
        start, stop, step = self["sweep.start"], self["sweep.stop"], self["sweep.step"]
        if start is None or stop is None:
            raise ConfigError("sweep needs sweep.start and sweep.stop")
        if start == stop:
            return [float(start)]
        if step is None or step <= 0:
            raise ConfigError("sweep.step must be positive")
        n = int(round((stop - start) / step))
        if n < 0 or abs(start + n * step - stop) > 1e-9 * max(1.0, abs(stop)):
            raise ConfigError("sweep.stop must be sweep.start plus a whole number of steps")
        return [round(start + k * step, 12) for k in range(n + 1)]

    def echo(self) -> str:
        items = " ".join(f"{k}={self.values[k]}" for k in sorted(self.values))
        return f"experiment={self.experiment} {items}"

    def sample_times(self, T: float) -> list[float]:
        h = float(self["run.sample_interval"])
        n = int(math.floor(T / h + 1e-9))
        return [round(k * h, 12) for k in range(1, n + 1)]


def resolve_config(experiment: str, file_values: dict, desk: bool, out_dir) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    values = dict(DEFAULTS)
    values.update(EXPERIMENT_DEFAULTS[experiment])
    if desk:
        values["grid.N"] = DESK["grid.N"]
        if experiment not in _DESK_KEEPS_T:
            values["run.T"] = DESK["run.T"]
    values.update(file_values)
    cfg = ExperimentConfig(experiment, values, Path(out_dir))
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    """Build every object once so constraint violations surface before any run."""
    try:
        cfg.spec
        cfg.solver()
        if cfg.experiment in ("ex1", "ex2", "ex3"):
            key = str(cfg["sweep.param"]).removeprefix("source.")
            if key not in ("r", "R0", "offset"):
                raise ConfigError(f"cannot sweep {cfg['sweep.param']!r}")
            for v in cfg.sweep_values():
                cfg.source(**{key: v})
        elif cfg.experiment not in ("invariants",):
            cfg.source()
        if cfg["run.T"] < 0 or cfg["run.sample_interval"] <= 0:
            raise ConfigError("run.T must be nonnegative and run.sample_interval positive")
        if cfg.experiment in ("volcano", "twin"):
            times = _times(cfg)
            if any(t < 0 for t in times):
                raise ConfigError("volcano.times must be nonnegative")
            lam, Lam, R0 = cfg["solver.lambda"], cfg["solver.Lambda"], cfg.source().R0
            oracles._check_volcano(R0, lam, Lam)
        if cfg.experiment == "tk" and (cfg["tk.levels"] < 1 or cfg["tk.tau0"] <= 0 or cfg["tk.t"] <= 0):
            raise ConfigError("tk needs t > 0, tau0 > 0 and levels >= 1")
        if cfg.experiment == "radial" and cfg["radial.dr"] <= 0:
            raise ConfigError("radial.dr must be positive")
    except ConfigError:
        raise
    except (ValueError, TypeError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def _times(cfg: ExperimentConfig) -> list[float]:
    try:
        return [float(s) for s in str(cfg["volcano.times"]).split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"volcano.times: bad list {cfg['volcano.times']!r}") from None


# -- output helpers --------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, cfg: ExperimentConfig, header, rows) -> Path:
    buf = io.StringIO()
    buf.write(f"# config: {cfg.echo()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path


def _write_series(cfg: ExperimentConfig, name: str, series: analysis.SpeedSeries) -> Path:
    path = cfg.out_dir / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(series.to_csv(f"config: {cfg.echo()}"))
    return path


def _tag(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


# -- experiments -------------------------------------------------------------------

def _speed_run(cfg: ExperimentConfig, src, scheme: str = "fmcf", T: float | None = None):
    """One run from zero; returns (final c_delta, series, final field)."""
    spec = cfg.spec
    T = float(cfg["run.T"]) if T is None else T
    scfg = cfg.solver(scheme)
    f = sample_to_field(src, spec)
    snaps = run(Field.zeros(spec), f, scfg, T, cfg.sample_times(T))
    series = analysis.SpeedSeries.from_snapshots(snaps, scfg.stencil.limiter)
    final = snaps[-1]
    c = analysis.speed_estimate(final.u, T) if T > 0 else 0.0
    return c, series, final.u


def _sweep(cfg: ExperimentConfig, prefix: str):
    key = str(cfg["sweep.param"]).removeprefix("source.")
    out = []
    for v in cfg.sweep_values():
        src = cfg.source(**{key: v})
        c, series, u = _speed_run(cfg, src)
        _write_series(cfg, f"{prefix}_{key}{_tag(v)}_series.csv", series)
        logger.info("%s %s=%g c=%.6g", prefix, key, v, c)
        out.append((v, c, u))
    return key, out


def ex1(cfg: ExperimentConfig) -> int:
    T = float(cfg["run.T"])
    key, pts = _sweep(cfg, "ex1")
    rows = []
    for r, c, u in pts:
        target = oracles.speed_radial_cone(r)
        e = analysis.l2_error(u, T, target) if T > 0 else 0.0
        rows.append((r, c, e, abs(c - target), target))
    write_csv(cfg.out_dir / "ex1_curve.csv", cfg, (key, "c_delta", "e_delta", "abs_error", "c_exact"), rows)
    return EXIT_OK


def ex2(cfg: ExperimentConfig) -> int:
    key, pts = _sweep(cfg, "ex2")
    rows = []
    for r, c, _ in pts:
        claim = oracles.speed_claim_l1(r)
        tol = 0.05
        rows.append((r, c, claim.kind, claim.value, claim.check(c, tol)))
    write_csv(cfg.out_dir / "ex2_curve.csv", cfg, (key, "c_delta", "claim", "claim_value", "claim_ok"), rows)
    lo, hi = float(cfg["fit.r_min"]), float(cfg["fit.r_max"])
    fit_pts = [(r, c) for r, c, _ in pts if lo - 1e-9 <= r <= hi + 1e-9]
    if len({r for r, _ in fit_pts}) >= 2:
        rep = analysis.fit_report(fit_pts)
        write_csv(cfg.out_dir / "ex2_fit.csv", cfg, ("slope", "intercept", "n_points", "residual_l2"),
                  [(rep["slope"], rep["intercept"], rep["n_points"], rep["residual_l2"])])
    else:
        logger.warning("fewer than two sweep points in [%g, %g]; no fit written", lo, hi)
    return EXIT_OK


def ex3(cfg: ExperimentConfig) -> int:
    key, pts = _sweep(cfg, "ex3")
    rows = []
    for v, c, _ in pts:
        src = cfg.source(**{key: v})
        claim = oracles.speed_claim_twin(src.R0, src.offset)
        rows.append((src.R0, src.offset, c, claim.kind, claim.value, claim.check(c, 0.1)))
    write_csv(cfg.out_dir / "ex3_curve.csv", cfg,
              ("R0", "offset", "c_delta", "claim", "claim_value", "claim_ok"), rows)
    return EXIT_OK


def _volcano_common(cfg: ExperimentConfig, prefix: str, target) -> int:
    spec = cfg.spec
    src = cfg.source()
    scfg = cfg.solver("imcf_truncated")
    times = sorted(set(_times(cfg)))
    T = times[-1] if times else 0.0
    x1, x2 = spec.mesh()
    radius = spec.radius()
    r_max = cfg["volcano.r_max"]
    r_max = 1.0 / float(cfg["solver.lambda"]) if r_max is None else float(r_max)
    inner = radius <= r_max + 1e-12
    snaps = run(Field.zeros(spec), sample_to_field(src, spec), scfg, T, times)
    rows = []
    for s in snaps:
        if s.t not in times:
            continue
        write_heightmap(cfg.out_dir / f"{prefix}_t{_tag(s.t)}.txt", s.u, s.t)
        phi = Field(spec, target((x1, x2), s.t))
        diff = np.abs(s.u.values - phi.values)
        rows.append((s.t, float(diff[inner].max()), float(diff.max()),
                     l2_seminorm(s.u - phi) / (2 * spec.R) ** 2))
    write_csv(cfg.out_dir / f"{prefix}_diff.csv", cfg,
              ("t", "sup_diff_inner", "sup_diff", "l2_diff"), rows)
    return EXIT_OK


def volcano(cfg: ExperimentConfig) -> int:
    R0 = cfg.source().R0
    return _volcano_common(cfg, "volcano", lambda x, t: oracles.fuji_field(x, t, R0))


def twin(cfg: ExperimentConfig) -> int:
    src = cfg.source()
    if not isinstance(src, TwinBalls):
        raise ConfigError("twin needs source.kind = twin_balls")
    a = (src.offset, 0.0)
    return _volcano_common(cfg, "twin", lambda x, t: oracles.twin_target(x, t, src.R0, a))


def tk(cfg: ExperimentConfig) -> int:
    spec = cfg.spec
    scfg = cfg.solver("fmcf")
    f = sample_to_field(cfg.source(), spec)
    t_end = float(cfg["tk.t"])
    u0 = Field.zeros(spec)
    direct = propagate(u0, f, scfg, t_end)
    rows = []
    tau = float(cfg["tk.tau0"])
    for _ in range(int(cfg["tk.levels"])):
        i = int(round(t_end / tau))
        if abs(i * tau - t_end) > 1e-9:
            raise ConfigError(f"tau={tau!r} does not divide t={t_end!r}")
        split = trotter_kato(u0, f, tau, i, scfg)
        err = float(np.max(np.abs(split.values - direct.values)))
        rows.append((tau, i, err))
        logger.info("tk tau=%g error=%.6g", tau, err)
        tau /= 2
    write_csv(cfg.out_dir / "tk.csv", cfg, ("tau", "i_steps", "sup_error"), rows)
    return EXIT_OK


def axis_rays(u: Field) -> tuple[np.ndarray, np.ndarray]:
    """Radii ``0, dx, ..., R`` and the four axis rays from the origin (shape ``(4, N+1)``)."""
    N, dx = u.spec.N, u.spec.dx
    v = u.values
    return np.arange(N + 1) * dx, np.stack([v[N, N:], v[N, N::-1], v[N:, N], v[N::-1, N]])


@dataclass(frozen=True)
class RadialComparison:
    r: np.ndarray
    rays: np.ndarray
    radial_1d: np.ndarray
    value_function: np.ndarray
    speeds: tuple

    def sup_diffs(self) -> dict[str, float]:
        """Pairwise sup differences; the grid solution is taken ray by ray."""
        a, b, c = self.rays, self.radial_1d, self.value_function
        return {
            "grid_2d-radial_1d": float(np.max(np.abs(a - b))),
            "grid_2d-value_function": float(np.max(np.abs(a - c))),
            "radial_1d-value_function": float(np.max(np.abs(b - c))),
        }


def radial_three_way(cfg: ExperimentConfig) -> RadialComparison:
    """Grid, radial PDE and value-function solutions at ``run.T`` on matched radii."""
    src = cfg.source()
    if not src.radial:
        raise ConfigError("radial comparison needs a radial source")
    T = float(cfg["run.T"])
    spec = cfg.spec
    u = propagate(Field.zeros(spec), sample_to_field(src, spec), cfg.solver("fmcf"), T)
    dr, r_max = float(cfg["radial.dr"]), float(cfg["radial.r_max"])
    phi_r = run_radial(RadialProfile.zeros(r_max, dr), src.profile, T)
    phi_v = oracles.value_function_radial(src, 2, r_max, dr, dr, T, int(cfg["radial.n_controls"]))
    r, rays = axis_rays(u)
    keep = r <= float(cfg["radial.compare_r_max"]) + 1e-12
    r = r[keep]
    speeds = (analysis.speed_estimate(u, T) if T > 0 else 0.0,
              float(phi_r.values.max() / T) if T > 0 else 0.0,
              float(phi_v.values.max() / T) if T > 0 else 0.0)
    return RadialComparison(r, rays[:, keep], phi_r(r), phi_v(r), speeds)


def radial(cfg: ExperimentConfig) -> int:
    cmp = radial_three_way(cfg)
    write_csv(cfg.out_dir / "radial_profiles.csv", cfg,
              ("r", "grid_2d_ray_mean", "radial_1d", "value_function"),
              zip(cmp.r, cmp.rays.mean(axis=0), cmp.radial_1d, cmp.value_function))
    write_csv(cfg.out_dir / "radial_compare.csv", cfg, ("pair", "sup_diff"), cmp.sup_diffs().items())
    write_csv(cfg.out_dir / "radial_speeds.csv", cfg,
              ("c_grid_2d_mean", "c_radial_1d_max", "c_value_function_max", "c_exact"),
              [(*cmp.speeds, oracles.speed_radial(cfg.source(), 2))])
    return EXIT_OK


INVARIANT_SCENARIOS = (
    ("fmcf", RadialCone(1.6)),
    ("fmcf", RadialCone(0.8)),
    ("eikonal", RadialCone(1.2)),
)


def invariants(cfg: ExperimentConfig) -> int:
    spec = cfg.spec
    T = float(cfg["run.T"])
    times = cfg.sample_times(T)
    scenarios = list(INVARIANT_SCENARIOS) + [("fmcf", L1Cone(2.0)), ("fmcf", TwinCones(1.2, 0.0))]
    rows = []
    ok = True
    trajectories = {}
    for scheme, src in scenarios:
        scfg = cfg.solver(scheme)
        mon = analysis.InvariantMonitor(src, spec.dx, T, scfg.dt, scheme, scfg.stencil.limiter)
        snaps = run(Field.zeros(spec), sample_to_field(src, spec), scfg, T, times, observers=[mon])
        trajectories[(scheme, src)] = snaps
        rep = mon.report()
        name = f"{scheme}:{src!r}"
        for line in rep.lines():
            print(f"{name} {line}")
        for key, chk in rep.checks.items():
            rows.append((name, key, chk.enabled, chk.passed, chk.worst_margin))
        ok &= rep.passed
    lower = trajectories[("fmcf", RadialCone(0.8))]
    upper = trajectories[("fmcf", RadialCone(1.6))]
    cmp = analysis.comparison_report(lower, upper, 10 * spec.dx)
    print(f"cone0.8<=cone1.6 {'PASS' if cmp.passed else 'FAIL'} {cmp.name} worst_margin={cmp.worst_margin:.6g}")
    rows.append(("fmcf:RadialCone(0.8)<=RadialCone(1.6)", "comparison", True, cmp.passed, cmp.worst_margin))
    ok &= cmp.passed
    if cfg["invariants.inject_superadditive"]:
        fake = analysis.SpeedSeries.from_m(times, [t * t for t in times])
        viol = analysis.subadditivity_report(fake, lambda m: 0.05 * m + 10 * spec.dx)
        passed = not viol
        print(f"injected {'PASS' if passed else 'FAIL'} subadditive (superadditive fake series) violations={len(viol)}")
        rows.append(("injected_fake", "subadditive", True, passed, math.nan))
        ok &= passed
    write_csv(cfg.out_dir / "invariants.csv", cfg, ("scenario", "check", "enabled", "passed", "worst_margin"), rows)
    return EXIT_OK if ok else EXIT_INVARIANT


RUNNERS = {"ex1": ex1, "ex2": ex2, "ex3": ex3, "volcano": volcano, "twin": twin,
           "tk": tk, "radial": radial, "invariants": invariants}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bsasym", description="Birth-and-spread asymptotic speed experiments.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--desk", action="store_true", help="desk scale: N=64 and T=10")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = parse_config_text(args.config.read_text()) if args.config else {}
        cfg = resolve_config(args.experiment, file_values, args.desk, args.out)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        return RUNNERS[args.experiment](cfg)
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
