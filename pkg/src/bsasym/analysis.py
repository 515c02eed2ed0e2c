"""Speed estimation, error metrics and invariant monitors for simulated runs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .grid import Field, l2_seminorm, mean, sup
from .solvers import Snapshot
from .sources import SourceTerm
from .stencils import grad_tilde_array

__all__ = [
    "SpeedSample",
    "SpeedSeries",
    "speed_estimate",
    "l2_error",
    "subadditivity_report",
    "fit_line",
    "fit_report",
    "level_radius",
    "Tolerances",
    "CheckResult",
    "MonitorReport",
    "InvariantMonitor",
    "monitors",
    "comparison_report",
    "is_monotone",
]


def speed_estimate(u: Field, t: float) -> float:
    """Domain average of ``u / t``."""
    if not t > 0:
        raise ValueError(f"speed estimate needs t > 0, got {t!r}")
    return mean(u) / t


def l2_error(u: Field, t: float, c_target: float) -> float:
    """``|| u/t - c ||_L2 / (2R)^2``."""
    if not t > 0:
        raise ValueError(f"l2 error needs t > 0, got {t!r}")
    return l2_seminorm(u / t - c_target) / (2 * u.spec.R) ** 2


@dataclass(frozen=True)
class SpeedSample:
    t: float
    c_delta: float
    m_sup: float
    grad_max: float


@dataclass
class SpeedSeries:
    """Time-ordered :class:`SpeedSample` records."""

    samples: list[SpeedSample] = field(default_factory=list)

    HEADER = ("t", "c_delta", "m_sup", "grad_max")

    def append(self, sample: SpeedSample) -> None:
        if self.samples and not sample.t > self.samples[-1].t:
            raise ValueError("sample times must be strictly increasing")
        if not sample.t > 0:
            raise ValueError("speed samples need t > 0")
        self.samples.append(sample)

    @classmethod
    def from_snapshots(cls, snaps: Iterable[Snapshot], limiter: str = "printed") -> SpeedSeries:
        out = cls()
        for s in snaps:
            if s.t > 0:
                g = grad_tilde_array(s.u.values, s.u.spec.dx, limiter)
                out.append(SpeedSample(s.t, speed_estimate(s.u, s.t), sup(s.u), float(g.max())))
        return out

    @classmethod
    def from_m(cls, times: Sequence[float], m: Sequence[float]) -> SpeedSeries:
        """Series carrying only ``m(t)``; other columns are NaN."""
        out = cls()
        for t, v in zip(times, m):
            out.append(SpeedSample(float(t), math.nan, float(v), math.nan))
        return out

    @property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def c_delta(self) -> np.ndarray:
        return np.array([s.c_delta for s in self.samples])

    @property
    def m_sup(self) -> np.ndarray:
        return np.array([s.m_sup for s in self.samples])

    @property
    def grad_max(self) -> np.ndarray:
        return np.array([s.grad_max for s in self.samples])

    def __len__(self):
        return len(self.samples)

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            for line in header_comment.splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for s in self.samples:
            w.writerow([f"{v:.17g}" for v in (s.t, s.c_delta, s.m_sup, s.grad_max)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> SpeedSeries:
        rows = [line for line in text.splitlines() if line and not line.startswith("#")]
        reader = csv.DictReader(rows)
        out = cls()
        for row in reader:
            out.append(SpeedSample(*(float(row[k]) for k in cls.HEADER)))
        return out


def subadditivity_report(series: SpeedSeries, tol) -> list[tuple[float, float, float, float]]:
    """Sampled pairs with ``m(t+s) > m(t) + m(s) + tol``.

    ``tol`` is a number or a callable of ``m(t+s)``. Only pairs whose sum is
    itself a sample time are checked. Each violation is
    ``(t, s, m(t+s), m(t) + m(s))``.
    """
    tol_fn = tol if callable(tol) else (lambda _m: tol)
    times = series.t
    m = series.m_sup
    scale = max(1.0, float(times.max())) if len(times) else 1.0
    lookup = {round(t / scale, 9): v for t, v in zip(times, m)}
    out = []
    for a in range(len(times)):
        for b in range(a, len(times)):
            key = round((times[a] + times[b]) / scale, 9)
            if key not in lookup:
                continue
            m_sum = lookup[key]
            bound = m[a] + m[b]
            # relative slack absorbs rounding on exactly additive data
            if m_sum > bound + tol_fn(m_sum) + 1e-12 * max(1.0, abs(m_sum)):
                out.append((float(times[a]), float(times[b]), float(m_sum), float(bound)))
    return out


def fit_line(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Ordinary least squares ``y ~ slope * x + intercept``."""
    xy = np.asarray(points, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise ValueError("points must be a sequence of (x, y) pairs")
    x, y = xy[:, 0], xy[:, 1]
    if np.unique(x).size < 2:
        raise ValueError("need at least two distinct x values")
    xm, ym = x.mean(), y.mean()
    slope = np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2)
    return float(slope), float(ym - slope * xm)


def fit_report(points: Sequence[tuple[float, float]]) -> dict:
    slope, intercept = fit_line(points)
    xy = np.asarray(points, dtype=float)
    resid = xy[:, 1] - (slope * xy[:, 0] + intercept)
    return {"slope": slope, "intercept": intercept, "n_points": len(xy),
            "residual_l2": float(np.sqrt(np.sum(resid**2)))}


def _ray_crossings(u: Field, level: float) -> list[float]:
    N, dx = u.spec.N, u.spec.dx
    v = u.values
    rays = (v[N, N:], v[N, N::-1], v[N:, N], v[N::-1, N])
    out = []
    for ray in rays:
        d = ray - level
        hit = np.nonzero((d[:-1] == 0) | (np.sign(d[:-1]) != np.sign(d[1:])))[0]
        if hit.size == 0:
            raise ValueError(f"level {level!r} is not crossed along an axis ray")
        k = hit[0]
        a, b = d[k], d[k + 1]
        frac = 0.0 if a == 0 else a / (a - b)
        out.append((k + frac) * dx)
    return out


def level_radius(u: Field, level: float, per_ray: bool = False):
    """Radius where ``u`` first crosses ``level`` along the four axis rays.

    Linear interpolation between nodes, averaged over the rays (or the four
    values themselves with ``per_ray=True``).
    """
    radii = _ray_crossings(u, level)
    return radii if per_ray else float(np.mean(radii))


def is_monotone(values: Sequence[float], increasing: bool = True) -> bool:
    d = np.diff(np.asarray(values, dtype=float))
    return bool(np.all(d >= 0) if increasing else np.all(d <= 0))


# -- invariant monitors -------------------------------------------------------

@dataclass(frozen=True)
class Tolerances:
    """Slack for the discrete invariant checks, in terms of ``dx`` and ``M``."""

    growth_dx: float = 10.0
    rate_rel: float = 0.1
    rate_warmup: float = 0.01
    sub_rel: float = 0.05
    sub_dx: float = 10.0
    grad_abs: float = 0.1
    grad_until: float = 2.0
    cmp_dx: float = 10.0


@dataclass
class CheckResult:
    name: str
    passed: bool = True
    worst_margin: float = math.inf
    failures: list = field(default_factory=list)
    enabled: bool = True

    def record(self, t: float, margin: float) -> None:
        """``margin >= 0`` means the bound holds."""
        self.worst_margin = min(self.worst_margin, margin)
        if margin < 0:
            self.passed = False
            self.failures.append((t, margin))


@dataclass
class MonitorReport:
    checks: dict[str, CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values() if c.enabled)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks.values():
            if not c.enabled:
                out.append(f"SKIP {c.name}")
                continue
            status = "PASS" if c.passed else "FAIL"
            out.append(f"{status} {c.name} worst_margin={c.worst_margin:.6g} failures={len(c.failures)}")
        return out


class InvariantMonitor:
    """Observer for :func:`bsasym.solvers.run` started from ``u0 = 0``.

    Checks, per sample: ``0 <= u <= M t + tol`` nodewise, the step rate
    bound ``|u^k - u^{k-1}|/dt <= M + tol`` after warm-up, and the spatial
    gradient bound ``max |Du| <= L t + tol`` up to ``grad_until`` with the
    same cap afterwards. :meth:`report` adds monotonicity and
    subadditivity of ``m(t) = sup u``.
    """

    def __init__(self, src: SourceTerm, dx: float, T: float, dt: float,
                 scheme: str = "fmcf", limiter: str = "printed",
                 tol: Tolerances | None = None):
        self.M = src.max_value
        self.L = src.lipschitz_bound
        self.dx = dx
        self.T = T
        self.dt = dt
        self.scheme = scheme
        self.limiter = limiter
        self.tol = tol or Tolerances()
        self.series = SpeedSeries()
        self.checks = {
            "bound_u": CheckResult("bound_u (0 <= u <= M t)"),
            "lipschitz_time": CheckResult("lipschitz_time (|u_t| <= M)"),
            "lipschitz_space": CheckResult("lipschitz_space (|Du| <= L t, then bounded)",
                                           enabled=math.isfinite(self.L)),
            "m_monotone": CheckResult("m_monotone (sup u nondecreasing)"),
            "subadditive": CheckResult("subadditive (m(t+s) <= m(t) + m(s))"),
        }
        self._warm_steps = self.tol.rate_warmup * T / dt

    def __call__(self, snap: Snapshot) -> None:
        t, tol = snap.t, self.tol
        v = snap.u.values
        lo, hi = float(v.min()), float(v.max())
        self.checks["bound_u"].record(t, min(lo, self.M * t + tol.growth_dx * self.dx - hi))
        if snap.step > self._warm_steps:
            worst_rate = float(np.abs(snap.rate).max())
            self.checks["lipschitz_time"].record(t, self.M + tol.rate_rel * (1 + self.M) - worst_rate)
        if t <= 0:
            return
        with np.errstate(over="ignore"):  # growing but still finite states
            g = float(grad_tilde_array(v, snap.u.spec.dx, self.limiter).max())
        self.series.append(SpeedSample(t, speed_estimate(snap.u, t), hi, g))
        if self.checks["lipschitz_space"].enabled:
            cap = self.L * min(t, tol.grad_until) + tol.grad_abs
            self.checks["lipschitz_space"].record(t, cap - g)

    def report(self) -> MonitorReport:
        m = self.series.m_sup
        mono = self.checks["m_monotone"]
        for t, d in zip(self.series.t[1:], np.diff(m)):
            mono.record(float(t), float(d))
        sub = self.checks["subadditive"]
        tol = self.tol
        for t, s, m_sum, bound in subadditivity_report(
                self.series, lambda ms: tol.sub_rel * ms + tol.sub_dx * self.dx):
            sub.record(t + s, bound + tol.sub_rel * m_sum + tol.sub_dx * self.dx - m_sum)
        if sub.worst_margin == math.inf and len(self.series):
            sub.worst_margin = self._sub_margin()
        return MonitorReport(dict(self.checks))

    def _sub_margin(self) -> float:
        """Smallest slack over all checked pairs (for reporting)."""
        times, m = self.series.t, self.series.m_sup
        lookup = {round(t, 9): v for t, v in zip(times, m)}
        best = math.inf
        for a in range(len(times)):
            for b in range(a, len(times)):
                key = round(times[a] + times[b], 9)
                if key in lookup:
                    ms = lookup[key]
                    slack = m[a] + m[b] + self.tol.sub_rel * ms + self.tol.sub_dx * self.dx - ms
                    best = min(best, slack)
        return best


def monitors(snaps: Sequence[Snapshot], src: SourceTerm, dt: float,
             limiter: str = "printed", tol: Tolerances | None = None) -> MonitorReport:
    """Run every invariant check over a finished trajectory."""
    snaps = list(snaps)
    if not snaps:
        raise ValueError("no snapshots")
    spec = snaps[0].u.spec
    mon = InvariantMonitor(src, spec.dx, snaps[-1].t, dt, limiter=limiter, tol=tol)
    for s in snaps:
        mon(s)
    return mon.report()


def comparison_report(lower: Sequence[Snapshot], upper: Sequence[Snapshot], tol: float) -> CheckResult:
    """Check ``u_lower <= u_upper + tol`` nodewise at matching samples."""
    res = CheckResult("comparison (u1 <= u2 for f1 <= f2)")
    for a, b in zip(lower, upper):
        if abs(a.t - b.t) > 1e-12:
            raise ValueError("trajectories are sampled at different times")
        res.record(a.t, float(np.min(b.u.values + tol - a.u.values)))
    return res
