import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsasym.analysis import (
    InvariantMonitor, SpeedSample, SpeedSeries, Tolerances, comparison_report, fit_line, fit_report,
    is_monotone, l2_error, level_radius, monitors, speed_estimate, subadditivity_report,
)
from bsasym.grid import Field, GridSpec
from bsasym.solvers import Snapshot
from bsasym.sources import RadialCone, ZeroSource

SPEC = GridSpec(2.56, 32)


def test_speed_estimate():
    assert speed_estimate(Field.constant(SPEC, 0.6 * 4.0), 4.0) == pytest.approx(0.6)
    assert speed_estimate(Field.zeros(SPEC), 3.0) == 0.0
    with pytest.raises(ValueError):
        speed_estimate(Field.zeros(SPEC), 0.0)


@given(st.floats(0.1, 50), st.floats(-5, 5), st.floats(-5, 5))
def test_speed_estimate_linear_and_scaling(t, a, b):
    u = Field.from_function(SPEC, lambda x1, x2: 1 + x1**2)
    v = Field.from_function(SPEC, lambda x1, x2: np.cos(x2))
    lhs = speed_estimate(u * a + v * b, t)
    assert lhs == pytest.approx(a * speed_estimate(u, t) + b * speed_estimate(v, t), abs=1e-9)
    assert speed_estimate(u, 2 * t) == pytest.approx(speed_estimate(u, t) / 2)


def test_l2_error():
    c, t = 0.6, 5.0
    assert l2_error(Field.constant(SPEC, c * t), t, c) == pytest.approx(0.0, abs=1e-15)
    expected = c * SPEC.n_nodes * SPEC.dx / (2 * SPEC.R) ** 2
    assert l2_error(Field.zeros(SPEC), t, c) == pytest.approx(expected)
    bumped = np.full(SPEC.shape, c * t)
    bumped[3, 4] += 1e-3
    assert l2_error(Field(SPEC, bumped), t, c) > 0
    with pytest.raises(ValueError):
        l2_error(Field.zeros(SPEC), -1.0, c)


def _m_series(func, times=np.arange(1, 21) * 0.5):
    return SpeedSeries.from_m(times, [func(t) for t in times])


def test_subadditivity_report():
    assert subadditivity_report(_m_series(lambda t: 0.7 * t), 0.0) == []
    assert subadditivity_report(_m_series(math.sqrt), 0.0) == []
    viol = subadditivity_report(_m_series(lambda t: t * t), 1e-3)
    assert viol and all(m_sum > bound for _, _, m_sum, bound in viol)
    assert (0.5, 0.5, 1.0, 0.5) in viol
    assert subadditivity_report(_m_series(lambda t: t * t), lambda m: m) == []


def test_fit_line():
    assert fit_line([(0, 1), (1, 3), (2, 5)]) == pytest.approx((2.0, 1.0))
    assert fit_line([(0, 0), (1, 1)]) == pytest.approx((1.0, 0.0))
    with pytest.raises(ValueError):
        fit_line([(1, 0), (1, 2)])
    with pytest.raises(ValueError):
        fit_line([(1, 2, 3)])
    rep = fit_report([(1.6, 0.3), (1.8, 0.5), (2.0, 0.6)])
    assert rep["n_points"] == 3 and rep["residual_l2"] > 0


@given(st.floats(-10, 10), st.floats(-10, 10), st.lists(st.floats(-5, 5), min_size=2, max_size=8, unique=True))
def test_fit_line_exact_on_collinear(a, b, xs):
    if max(xs) - min(xs) < 1e-3:
        return
    slope, intercept = fit_line([(x, a * x + b) for x in xs])
    assert slope == pytest.approx(a, abs=1e-9) and intercept == pytest.approx(b, abs=1e-9)


def test_level_radius():
    cone = Field.from_function(SPEC, lambda x1, x2: -np.hypot(x1, x2))
    assert level_radius(cone, -1.0) == pytest.approx(1.0, abs=SPEC.dx)
    bowl = Field.from_function(SPEC, lambda x1, x2: 1 - (x1**2 + x2**2))
    assert level_radius(bowl, 0.0) == pytest.approx(1.0, abs=SPEC.dx)
    rays = level_radius(bowl, 0.3, per_ray=True)
    assert max(rays) - min(rays) <= 1e-12
    with pytest.raises(ValueError):
        level_radius(cone, 5.0)


def test_speed_series_csv_round_trip():
    s = SpeedSeries()
    s.append(SpeedSample(0.5, 0.1, 0.2, 1.0 / 3))
    s.append(SpeedSample(1.0, 0.15, 0.4, 0.5))
    text = s.to_csv("config: test")
    assert text.splitlines()[:2] == ["# config: test", "t,c_delta,m_sup,grad_max"]
    assert SpeedSeries.from_csv(text).samples == s.samples
    with pytest.raises(ValueError):
        s.append(SpeedSample(1.0, 0, 0, 0))
    with pytest.raises(ValueError):
        SpeedSeries().append(SpeedSample(0.0, 0, 0, 0))


def test_is_monotone():
    assert is_monotone([1, 1, 2]) and not is_monotone([1, 0.9])
    assert is_monotone([3, 2, 2], increasing=False)


def _fabricated(values_at, src, times, dt):
    snaps, prev = [], None
    for t in times:
        v = values_at(t)
        rate = np.zeros(SPEC.shape) if prev is None else (v - values_at(t - dt)) / dt
        snaps.append(Snapshot(t, int(round(t / dt)), Field(SPEC, v), rate))
        prev = v
    return snaps


def test_monitors_on_zero_run():
    times = [0.0, 0.5, 1.0, 1.5, 2.0]
    snaps = _fabricated(lambda t: np.zeros(SPEC.shape), ZeroSource(), times, 0.01)
    rep = monitors(snaps, ZeroSource(), 0.01)
    assert rep.passed
    assert rep.checks["bound_u"].worst_margin == 0.0


def test_monitors_linear_growth_and_sensitivity():
    src = RadialCone(1.6)
    M, dt = src.max_value, 0.01
    times = [0.5, 1.0, 1.5, 2.0]
    exact = _fabricated(lambda t: np.full(SPEC.shape, M * t), src, times, dt)
    rep = monitors(exact, src, dt)
    assert rep.checks["bound_u"].passed

    def spiked(t):
        v = np.full(SPEC.shape, M * t)
        if t == 1.5:
            v[5, 5] += 1.0
        return v

    rep = monitors(_fabricated(spiked, src, times, dt), src, dt)
    bound = rep.checks["bound_u"]
    assert not bound.passed and [t for t, _ in bound.failures] == [1.5]
    assert not rep.passed
    assert any(line.startswith("FAIL bound_u") for line in rep.lines())


def test_monitor_flags_superadditive_growth():
    src = RadialCone(1.6)
    times = [0.5 * k for k in range(1, 9)]
    snaps = _fabricated(lambda t: np.full(SPEC.shape, 0.4 * t * t), src, times, 0.01)
    rep = monitors(snaps, src, 0.01, tol=Tolerances(sub_rel=0.0, sub_dx=0.0))
    assert not rep.checks["subadditive"].passed


def test_lipschitz_monitor_disabled_for_discontinuous_source():
    from bsasym.sources import BallIndicator

    mon = InvariantMonitor(BallIndicator(0.2), SPEC.dx, 1.0, 0.01)
    assert not mon.checks["lipschitz_space"].enabled
    assert any(line.startswith("SKIP") for line in mon.report().lines())


def test_comparison_report():
    times = [0.5, 1.0]
    lo = _fabricated(lambda t: np.full(SPEC.shape, t), ZeroSource(), times, 0.01)
    hi = _fabricated(lambda t: np.full(SPEC.shape, 2 * t), ZeroSource(), times, 0.01)
    assert comparison_report(lo, hi, 0.0).passed
    assert not comparison_report(hi, lo, 0.1).passed
    with pytest.raises(ValueError):
        comparison_report(lo, hi[::-1], 0.0)
