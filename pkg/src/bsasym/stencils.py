"""Finite-difference operators on square grids with Neumann ghost layers.

Field-level functions take a :class:`~bsasym.grid.Field` and return a new
one. The ``*_array`` variants work on raw ``(2N+1, 2N+1)`` arrays and are
what the time steppers call in their inner loop. Per-node functions
(``diff_fwd``, ``diff_bwd``, ``diff_transverse_avg``) exist for checking
single stencils by hand.

Axis convention: axis 1 is ``x1`` (index ``i``), axis 2 is ``x2`` (index
``j``). Arrays are indexed ``[j, i]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, neumann_get, pad_neumann

__all__ = [
    "StencilParams",
    "diff_fwd",
    "diff_bwd",
    "diff_transverse_avg",
    "limiter_mu",
    "curvature_reg",
    "grad_hat",
    "grad_tilde",
    "grad_bar",
    "curvature_reg_array",
    "grad_hat_array",
    "grad_tilde_array",
    "grad_bar_array",
]

LIMITERS = ("printed", "minmod")


@dataclass(frozen=True)
class StencilParams:
    """Curvature regularization ``eps`` and central-difference switch ``rho``.

    ``limiter`` selects the second-order correction in :func:`grad_tilde`:
    ``"printed"`` is ``mu(p, q) = p if |p| < q else q`` taken literally,
    ``"minmod"`` the usual sign-aware minmod.
    """

    eps: float = 0.001
    rho: float = 0.01
    limiter: str = "printed"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps!r}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho!r}")
        if self.limiter not in LIMITERS:
            raise ValueError(f"limiter must be one of {LIMITERS}, got {self.limiter!r}")


# -- per-node stencils ----------------------------------------------------

def _offset(axis: int, k: int) -> tuple[int, int]:
    if axis == 1:
        return (k, 0)
    if axis == 2:
        return (0, k)
    raise ValueError(f"axis must be 1 or 2, got {axis!r}")


def diff_fwd(u: Field, axis: int, i: int, j: int) -> float:
    di, dj = _offset(axis, 1)
    return (neumann_get(u, i + di, j + dj) - neumann_get(u, i, j)) / u.spec.dx


def diff_bwd(u: Field, axis: int, i: int, j: int) -> float:
    di, dj = _offset(axis, 1)
    return (neumann_get(u, i, j) - neumann_get(u, i - di, j - dj)) / u.spec.dx


def diff_transverse_avg(u: Field, axis: int, sign: int, i: int, j: int) -> float:
    """Central difference along ``axis`` averaged with the row shifted by ``sign``
    in the transverse direction."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    g = lambda a, b: neumann_get(u, a, b)  # noqa: E731
    if axis == 1:
        hi = (g(i + 1, j + sign) + g(i + 1, j)) / 2
        lo = (g(i - 1, j + sign) + g(i - 1, j)) / 2
    elif axis == 2:
        hi = (g(i + sign, j + 1) + g(i, j + 1)) / 2
        lo = (g(i + sign, j - 1) + g(i, j - 1)) / 2
    else:
        raise ValueError(f"axis must be 1 or 2, got {axis!r}")
    return (hi - lo) / (2 * u.spec.dx)


def limiter_mu(p, q):
    """``p`` where ``|p| < q``, ``q`` otherwise (elementwise)."""
    out = np.where(np.abs(p) < q, p, q)
    return float(out) if np.ndim(out) == 0 else out


def _minmod(p, q):
    same = p * q > 0
    return np.where(same, np.where(np.abs(p) < np.abs(q), p, q), 0.0)


# -- whole-field sweeps ---------------------------------------------------

class _Shifts:
    """Shifted views of a 2-layer padded array, ``s(di, dj) ~ u[j+dj, i+di]``."""

    __slots__ = ("P", "n")

    def __init__(self, values: np.ndarray):
        self.P = pad_neumann(values, 2)
        self.n = values.shape[0]

    def __call__(self, di: int, dj: int) -> np.ndarray:
        n = self.n
        return self.P[2 + dj : 2 + dj + n, 2 + di : 2 + di + n]


def curvature_reg_array(values: np.ndarray, dx: float, eps: float, s: _Shifts | None = None) -> np.ndarray:
    s = s or _Shifts(values)
    c = s(0, 0)
    e, w, n, so = s(1, 0), s(-1, 0), s(0, 1), s(0, -1)
    eps2 = eps * eps
    inv4dx = 1.0 / (4.0 * dx)

    # x1 fluxes at i +/- 1/2; transverse x2 slope averaged over columns i, i+/-1
    dp1 = (e - c) / dx
    dm1 = (c - w) / dx
    t2p = ((s(1, 1) + n) - (s(1, -1) + so)) * inv4dx
    t2m = ((s(-1, 1) + n) - (s(-1, -1) + so)) * inv4dx
    Pp = dp1 / np.sqrt(eps2 + dp1 * dp1 + t2p * t2p)
    Pm = dm1 / np.sqrt(eps2 + dm1 * dm1 + t2m * t2m)

    dp2 = (n - c) / dx
    dm2 = (c - so) / dx
    t1p = ((s(1, 1) + e) - (s(-1, 1) + w)) * inv4dx
    t1m = ((s(1, -1) + e) - (s(-1, -1) + w)) * inv4dx
    Qp = dp2 / np.sqrt(eps2 + t1p * t1p + dp2 * dp2)
    Qm = dm2 / np.sqrt(eps2 + t1m * t1m + dm2 * dm2)

    return (Pp - Pm + Qp - Qm) / dx


def grad_hat_array(values: np.ndarray, dx: float, rho: float, s: _Shifts | None = None) -> np.ndarray:
    s = s or _Shifts(values)
    c = s(0, 0)
    total = np.zeros_like(c)
    for di, dj in ((1, 0), (0, 1)):
        fwd, bwd = s(di, dj), s(-di, -dj)
        central = np.abs(fwd - bwd) / (2 * dx)
        one_sided = np.maximum(np.abs(fwd - c), np.abs(c - bwd)) / dx
        a = np.where(central >= rho, central, one_sided)
        total += a * a
    return np.sqrt(total)


def grad_tilde_array(values: np.ndarray, dx: float, limiter: str = "printed", s: _Shifts | None = None) -> np.ndarray:
    s = s or _Shifts(values)
    mu = limiter_mu if limiter == "printed" else _minmod
    c = s(0, 0)
    dx2 = dx * dx
    total = np.zeros_like(c)
    for di, dj in ((1, 0), (0, 1)):
        f1, f2 = s(di, dj), s(2 * di, 2 * dj)
        b1, b2 = s(-di, -dj), s(-2 * di, -2 * dj)
        centered = (f1 - 2 * c + b1) / dx2
        dplus = (f1 - c) / dx - 0.5 * dx * mu((f2 - 2 * f1 + c) / dx2, centered)
        dminus = (c - b1) / dx + 0.5 * dx * mu((b2 - 2 * b1 + c) / dx2, centered)
        a = np.maximum(np.maximum(dplus, 0.0), np.maximum(-dminus, 0.0))
        total += a * a
    return np.sqrt(total)


def grad_bar_array(values: np.ndarray, dx: float, s: _Shifts | None = None) -> np.ndarray:
    s = s or _Shifts(values)
    c = s(0, 0)
    total = np.zeros_like(c)
    for di, dj in ((1, 0), (0, 1)):
        dplus = (s(di, dj) - c) / dx
        dminus = (c - s(-di, -dj)) / dx
        a = np.maximum(np.maximum(dplus, 0.0), -np.minimum(dminus, 0.0))
        total += a * a
    return np.sqrt(total)


def curvature_reg(u: Field, params: StencilParams) -> Field:
    return Field(u.spec, curvature_reg_array(u.values, u.spec.dx, params.eps))


def grad_hat(u: Field, params: StencilParams) -> Field:
    return Field(u.spec, grad_hat_array(u.values, u.spec.dx, params.rho))


def grad_tilde(u: Field, params: StencilParams | None = None) -> Field:
    """Second-order upwind gradient magnitude with the limited correction."""
    limiter = params.limiter if params is not None else "printed"
    return Field(u.spec, grad_tilde_array(u.values, u.spec.dx, limiter))


def grad_bar(u: Field) -> Field:
    """First-order upwind gradient magnitude."""
    return Field(u.spec, grad_bar_array(u.values, u.spec.dx))
