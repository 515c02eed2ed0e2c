"""Fused per-node update kernels for the explicit steppers.

The kernels compute the same stencils as :mod:`bsasym.stencils` in one
pass over an array carrying two ghost layers on each side. Ghosts are
refreshed by the clamping rule after every step, so the interior loop is
branch-free apart from the selects in the limiter and the rho switch.
Per-node arithmetic is sequential and the result does not depend on loop
scheduling.
"""

import math

import numpy as np
from numba import njit

PRINTED = 0
MINMOD = 1

FMCF = 0
IMCF = 1
EIKONAL = 2

G = 2  # ghost width

_opts = dict(cache=True, error_model="numpy")


@njit(**_opts)
def fill_ghosts(P):
    n = P.shape[0]
    lo, hi = G, n - G - 1
    for j in range(G, n - G):
        for g in range(G):
            P[j, g] = P[j, lo]
            P[j, n - 1 - g] = P[j, hi]
    for g in range(G):
        for i in range(n):
            P[g, i] = P[lo, i]
            P[n - 1 - g, i] = P[hi, i]


def pad(values):
    P = np.empty((values.shape[0] + 2 * G, values.shape[1] + 2 * G))
    P[G:-G, G:-G] = values
    fill_ghosts(P)
    return P


@njit(inline="always", **_opts)
def _mu(p, q, kind):
    if kind == PRINTED:
        return p if abs(p) < q else q
    if p * q > 0.0:
        return p if abs(p) < abs(q) else q
    return 0.0


@njit(inline="always", **_opts)
def _curv(P, j, i, idx, eps2):
    c = P[j, i]
    e, w, no, so = P[j, i + 1], P[j, i - 1], P[j + 1, i], P[j - 1, i]
    ne, nw, se, sw = P[j + 1, i + 1], P[j + 1, i - 1], P[j - 1, i + 1], P[j - 1, i - 1]
    q = 0.25 * idx

    dp1 = (e - c) * idx
    dm1 = (c - w) * idx
    t2p = ((ne + no) - (se + so)) * q
    t2m = ((nw + no) - (sw + so)) * q
    pp = dp1 / math.sqrt(eps2 + dp1 * dp1 + t2p * t2p)
    pm = dm1 / math.sqrt(eps2 + dm1 * dm1 + t2m * t2m)

    dp2 = (no - c) * idx
    dm2 = (c - so) * idx
    t1p = ((ne + e) - (nw + w)) * q
    t1m = ((se + e) - (sw + w)) * q
    qp = dp2 / math.sqrt(eps2 + t1p * t1p + dp2 * dp2)
    qm = dm2 / math.sqrt(eps2 + t1m * t1m + dm2 * dm2)
    return (pp - pm + qp - qm) * idx


@njit(inline="always", **_opts)
def _hat_axis(b, c, f, idx, rho):
    central = abs(f - b) * (0.5 * idx)
    one_sided = max(abs(f - c), abs(c - b)) * idx
    return central if central >= rho else one_sided


@njit(inline="always", **_opts)
def _tilde_axis(b2, b1, c, f1, f2, dx, idx, kind):
    idx2 = idx * idx
    centered = (f1 - 2.0 * c + b1) * idx2
    dplus = (f1 - c) * idx - 0.5 * dx * _mu((f2 - 2.0 * f1 + c) * idx2, centered, kind)
    dminus = (c - b1) * idx + 0.5 * dx * _mu((b2 - 2.0 * b1 + c) * idx2, centered, kind)
    return max(max(dplus, 0.0), max(-dminus, 0.0))


@njit(inline="always", **_opts)
def _bar_axis(b, c, f, idx):
    return max(max((f - c) * idx, 0.0), -min((c - b) * idx, 0.0))


@njit(inline="always", **_opts)
def _grad_tilde(P, j, i, dx, idx, kind):
    c = P[j, i]
    a1 = _tilde_axis(P[j, i - 2], P[j, i - 1], c, P[j, i + 1], P[j, i + 2], dx, idx, kind)
    a2 = _tilde_axis(P[j - 2, i], P[j - 1, i], c, P[j + 1, i], P[j + 2, i], dx, idx, kind)
    return math.sqrt(a1 * a1 + a2 * a2)


@njit(**_opts)
def _step(scheme, P, F, out, dx, dt, eps, rho, kind, lam, Lam, delta):
    """One explicit step from padded ``P`` into padded ``out``; F is unpadded."""
    n = P.shape[0]
    idx = 1.0 / dx
    eps2 = eps * eps
    for j in range(G, n - G):
        for i in range(G, n - G):
            c = P[j, i]
            if scheme == FMCF:
                h1 = _hat_axis(P[j, i - 1], c, P[j, i + 1], idx, rho)
                h2 = _hat_axis(P[j - 1, i], c, P[j + 1, i], idx, rho)
                rate = (math.sqrt(h1 * h1 + h2 * h2) * _curv(P, j, i, idx, eps2)
                        + _grad_tilde(P, j, i, dx, idx, kind))
            elif scheme == IMCF:
                b1 = _bar_axis(P[j, i - 1], c, P[j, i + 1], idx)
                b2 = _bar_axis(P[j - 1, i], c, P[j + 1, i], idx)
                chi = min(max(-_curv(P, j, i, idx, eps2), lam), Lam)
                rate = math.sqrt(b1 * b1 + b2 * b2) / chi
            else:
                rate = delta * _grad_tilde(P, j, i, dx, idx, kind)
            out[j, i] = c + dt * (rate + F[j - G, i - G])
    fill_ghosts(out)


@njit(**_opts)
def _all_finite(P):
    for v in P.ravel():
        if not math.isfinite(v):
            return False
    return True


@njit(**_opts)
def advance(scheme, P, F, dx, dt, n_steps, eps, rho, kind, lam, Lam, delta):
    """Run ``n_steps`` steps in place on padded ``P``.

    Returns ``(steps_done, ok)``; ``ok`` is False if a non-finite value
    appeared, in which case ``P`` holds the offending state.
    """
    buf = np.empty_like(P)
    a, b = P, buf
    for k in range(n_steps):
        _step(scheme, a, F, b, dx, dt, eps, rho, kind, lam, Lam, delta)
        a, b = b, a
        if not _all_finite(a):
            if (k + 1) % 2 == 1:
                P[:, :] = a
            return k + 1, False
    if n_steps % 2 == 1:
        P[:, :] = a
    return n_steps, True
