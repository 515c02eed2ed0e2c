"""Closed-form speeds, explicit solutions and independent reference solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .solvers import ConfigError, RadialProfile
from .sources import SourceTerm

__all__ = [
    "SpeedClaim",
    "CollapseError",
    "speed_radial_cone",
    "speed_radial",
    "speed_positive_velocity",
    "speed_claim_l1",
    "speed_claim_twin",
    "volcano_profile",
    "fuji_field",
    "twin_target",
    "value_function_radial",
    "circle_radius",
    "extinction_time",
]

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SpeedClaim:
    """What is known about an asymptotic speed.

    ``kind`` is one of ``exact``, ``lower_bound``, ``positive``, ``zero`` or
    ``unknown``; ``value`` is set for ``exact`` and ``lower_bound``.
    """

    kind: str
    value: float | None = None

    KINDS = ("exact", "lower_bound", "positive", "zero", "unknown")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown claim kind {self.kind!r}")
        if self.kind in ("exact", "lower_bound"):
            if self.value is None or not math.isfinite(self.value) or self.value < 0:
                raise ValueError(f"{self.kind} claim needs a finite nonnegative value")

    def check(self, c: float, tol: float) -> bool | None:
        """Whether a measured speed ``c`` is consistent with the claim (None if unknown)."""
        if self.kind == "exact":
            return abs(c - self.value) <= tol
        if self.kind == "lower_bound":
            return c >= self.value - tol
        if self.kind == "zero":
            return abs(c) <= tol
        if self.kind == "positive":
            return c > 0
        return None


def speed_radial_cone(r: float) -> float:
    """Speed for the source ``(r - |x|)_+`` in the plane: ``(r - 1)_+``."""
    if r < 0:
        raise ValueError("cone radius must be nonnegative")
    return max(r - 1.0, 0.0)


def speed_radial(f_tilde: Callable | SourceTerm, n: int, r_max: float | None = None, dr: float = 0.01) -> float:
    """``max f~(r)`` over ``r >= n - 1``, sampled at ``dr / 10``.

    ``f_tilde`` is a radial source or a callable profile; for a bare
    callable ``r_max`` must bound its support.
    """
    if isinstance(f_tilde, SourceTerm):
        if r_max is None:
            r_max = f_tilde.support_radius
        profile = f_tilde.profile
    else:
        if r_max is None:
            raise ValueError("r_max is required for a callable profile")
        profile = f_tilde
    lo = float(n - 1)
    if r_max <= lo:
        return float(max(profile(np.array([lo]))[0], 0.0))
    r = np.linspace(lo, r_max, int(math.ceil((r_max - lo) / (dr / 10))) + 1)
    return float(max(np.max(profile(r)), 0.0))


def speed_positive_velocity(src: SourceTerm) -> float:
    """Speed when the normal velocity is positive: the source maximum."""
    return src.max_value


def speed_claim_l1(r: float) -> SpeedClaim:
    """Known facts for ``(r - |x|_1)_+``."""
    if r < 1:
        return SpeedClaim("zero")
    if 1 < r < SQRT2:
        return SpeedClaim("positive")
    if r > SQRT2:
        return SpeedClaim("lower_bound", r - SQRT2)
    return SpeedClaim("unknown")


def speed_claim_twin(R0: float, r: float) -> SpeedClaim:
    """Known facts for two cones of radius ``R0`` at ``(+-r, 0)``."""
    if 0.5 < R0 < 1 and (0 <= r < 1 - R0 or r > R0):
        return SpeedClaim("zero")
    if R0 > 1:
        if r == 0:
            return SpeedClaim("exact", 2 * (R0 - 1))
        if r > R0:
            return SpeedClaim("exact", R0 - 1)
    return SpeedClaim("unknown")


def _check_volcano(R0, lam, Lam):
    if not R0 > 0:
        raise ConfigError("R0 must be positive")
    if not 0 < lam < Lam:
        raise ConfigError(f"need 0 < lambda < Lambda, got {lam!r}, {Lam!r}")
    if Lam < 1 / R0:
        raise ConfigError(f"need Lambda >= 1/R0 = {1 / R0!r}, got {Lam!r}")


def volcano_profile(r, t: float, R0: float, lam: float, Lam: float):
    """Maximal solution for the disc-indicator source, as a function of radius.

    Piecewise in ``r`` with a switch at ``t = log(Lam / lam)``; beyond
    ``r = 1/lam`` and after the switch the outer branch is
    ``max(t - lam r - T, 0)``.
    """
    _check_volcano(R0, lam, Lam)
    r = np.asarray(r, dtype=float)
    T = math.log(Lam) - math.log(lam)
    with np.errstate(divide="ignore"):
        log_branch = t + np.log(R0 / np.maximum(r, 1e-300))
    if t < T:
        out = np.where(r <= R0, t, np.maximum(log_branch, 0.0))
    else:
        out = np.where(r <= R0, t,
                       np.where(r <= 1 / lam, log_branch, np.maximum(t - lam * r - T, 0.0)))
    return float(out) if out.ndim == 0 else out


def fuji_field(x, t: float, R0: float):
    """``min(t, max(0, t - log|x| + log R0))``; ``x`` has shape ``(..., 2)`` or is a pair of arrays."""
    if isinstance(x, tuple) and len(x) == 2:
        rad = np.hypot(np.asarray(x[0], dtype=float), np.asarray(x[1], dtype=float))
    else:
        x = np.asarray(x, dtype=float)
        rad = np.hypot(x[..., 0], x[..., 1])
    with np.errstate(divide="ignore"):
        inner = t - np.log(rad) + math.log(R0)
    out = np.minimum(t, np.maximum(0.0, inner))
    return float(out) if np.ndim(out) == 0 else out


def twin_target(x, t: float, R0: float, a=(0.8, 0.0)):
    """Two-crater analogue of :func:`fuji_field` with craters at ``+-a``."""
    if isinstance(x, tuple) and len(x) == 2:
        x1, x2 = np.asarray(x[0], dtype=float), np.asarray(x[1], dtype=float)
    else:
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
    with np.errstate(divide="ignore"):
        psi1 = t - np.log(np.hypot(x1 - a[0], x2 - a[1])) + math.log(R0)
        psi2 = t - np.log(np.hypot(x1 + a[0], x2 + a[1])) + math.log(R0)
    out = np.minimum(t, np.maximum(0.0, np.maximum(psi1, psi2)))
    return float(out) if np.ndim(out) == 0 else out


def value_function_radial(
    f_tilde: Callable | SourceTerm,
    n: int,
    r_max: float,
    dr: float,
    dt: float,
    T: float,
    n_controls: int = 33,
) -> RadialProfile:
    """Semi-Lagrangian dynamic programming for the radial control problem.

    Paths end at ``r`` and move with ``|gamma' + (n-1)/gamma| <= 1`` while
    staying positive; the value collects ``f~`` along the path. Each step
    takes ``dt f~(r)`` plus the best interpolated value at the feet of the
    characteristics over ``n_controls`` sampled controls. Feet are clipped
    to ``[dr, r_max]`` and the node at ``r = 0`` copies its neighbour.
    """
    if dt > dr:
        raise ConfigError(f"dt={dt!r} must not exceed dr={dr!r}")
    if n < 2:
        raise ValueError("dimension n must be at least 2")
    profile = f_tilde.profile if isinstance(f_tilde, SourceTerm) else f_tilde
    M = int(round(r_max / dr))
    r = np.arange(M + 1) * dr
    fr = np.asarray(profile(r), dtype=float)
    phi = np.zeros(M + 1)
    if T <= 0:
        return RadialProfile(dr, phi, n)

    s = np.linspace(-1.0, 1.0, n_controls)
    k = int(math.ceil(T / dt - 1e-9))
    h_last = T - (k - 1) * dt
    feet = _feet(r[1:], s, n, dt, dr, r[-1])
    feet_last = feet if h_last == dt else _feet(r[1:], s, n, h_last, dr, r[-1])
    for step in range(k):
        h, ft = (dt, feet) if step < k - 1 else (h_last, feet_last)
        best = np.interp(ft, r, phi).max(axis=1)
        new = np.empty_like(phi)
        new[1:] = h * fr[1:] + best
        new[0] = new[1]
        phi = new
    return RadialProfile(dr, phi, n)


def _feet(r, s, n, h, lo, hi, substeps=32):
    """Start points of the characteristics ``gamma' = s - (n-1)/gamma`` that
    reach ``r`` after time ``h``, clipped to ``[lo, hi]``.

    Integrated backwards in ``y = gamma**2``, where the right-hand side
    ``2(n-1) - 2 s sqrt(y)`` stays bounded as ``gamma -> 0``.
    """
    y = np.broadcast_to((r * r)[:, None], (r.size, s.size)).copy()
    sv = s[None, :]
    g = lambda y: 2.0 * (n - 1) - 2.0 * sv * np.sqrt(np.maximum(y, 0.0))  # noqa: E731
    dtau = h / substeps
    for _ in range(substeps):
        k1 = g(y)
        k2 = g(y + 0.5 * dtau * k1)
        k3 = g(y + 0.5 * dtau * k2)
        k4 = g(y + dtau * k3)
        y = y + dtau / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return np.clip(np.sqrt(np.maximum(y, 0.0)), lo, hi)


class CollapseError(ArithmeticError):
    """The circle shrinks to a point before the requested time."""

    def __init__(self, collapse_time: float):
        self.collapse_time = collapse_time
        super().__init__(f"circle collapses at t = {collapse_time:.8g}")


def _rhs(rho):
    return 1.0 - 1.0 / rho


def _rk4(rho, h):
    k1 = _rhs(rho)
    r2 = rho + 0.5 * h * k1
    if r2 <= 0:
        return -1.0
    k2 = _rhs(r2)
    r3 = rho + 0.5 * h * k2
    if r3 <= 0:
        return -1.0
    k3 = _rhs(r3)
    r4 = rho + h * k3
    if r4 <= 0:
        return -1.0
    k4 = _rhs(r4)
    return rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _integrate(rho0, t, h):
    """Returns ``(rho(t), None)`` or ``(None, collapse_time)``."""
    if rho0 <= 0:
        raise ValueError("initial radius must be positive")
    rho, s = float(rho0), 0.0
    step = h
    while s < t:
        step = min(step, t - s)
        nxt = _rk4(rho, step)
        if nxt > 0 and math.isfinite(nxt):
            rho, s = nxt, s + step
            continue
        # shrink towards the singularity at rho = 0
        step /= 2
        if step < 1e-15:
            return None, s
    return rho, None


def circle_radius(rho0: float, t: float, h: float = 1e-4) -> float:
    """Radius at time ``t`` of a circle moving with normal speed ``1 - 1/rho``."""
    rho, collapse = _integrate(rho0, t, h)
    if collapse is not None:
        raise CollapseError(collapse)
    return rho


def extinction_time(rho0: float, h: float = 1e-4, t_max: float = 1e3) -> float:
    """Time at which a circle with ``rho0 < 1`` shrinks to a point."""
    if rho0 >= 1:
        return math.inf
    rho, collapse = _integrate(rho0, t_max, h)
    if collapse is None:
        return math.inf
    return collapse
