import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsasym.grid import GridSpec
from bsasym.sources import (
    BallIndicator, L1Cone, RadialCone, RadialTable, TwinBalls, TwinCones, ZeroSource, eval_source,
    lipschitz_bound, max_value, sample_to_field, source_from_config, support_radius,
)


def test_eval_examples():
    assert eval_source(RadialCone(1.6), (0, 0)) == 1.6
    assert eval_source(L1Cone(2.0), (1, 1)) == 0.0
    assert eval_source(TwinCones(1.2, 0.0), (0, 0)) == pytest.approx(2.4)
    assert eval_source(BallIndicator(0.2), (0.1, 0)) == 1.0
    assert eval_source(BallIndicator(0.2), (0.3, 0)) == 0.0
    assert eval_source(TwinBalls(0.2, 0.8), (-0.8, 0.1)) == 1.0
    assert eval_source(ZeroSource(), (0.3, 0.2)) == 0.0


def test_metadata_examples():
    c = RadialCone(1.6)
    assert (max_value(c), support_radius(c)) == (1.6, 1.6)
    t = TwinCones(1.2, 1.5)
    assert max_value(t) == pytest.approx(1.2) and support_radius(t) == pytest.approx(2.7)
    assert lipschitz_bound(c) == 1.0
    assert lipschitz_bound(L1Cone(1.0)) == pytest.approx(math.sqrt(2))
    assert lipschitz_bound(BallIndicator(0.2)) == math.inf
    assert lipschitz_bound(TwinCones(1.2, 0.3)) == 2.0
    assert lipschitz_bound(TwinCones(1.2, 1.5)) == 1.0


def test_overlapping_twin_max_by_dense_scan():
    t = TwinCones(1.2, 0.3)
    x = np.linspace(-3, 3, 600001)
    scan = float(np.max(t(x, np.zeros_like(x))))
    assert max_value(t) == pytest.approx(scan, abs=1e-5)


sources = st.one_of(
    st.floats(0.1, 2.5).map(RadialCone),
    st.floats(0.1, 2.5).map(L1Cone),
    st.tuples(st.floats(0.1, 1.5), st.floats(0, 2)).map(lambda p: TwinCones(*p)),
    st.floats(0.05, 1.0).map(BallIndicator),
)


@given(sources, st.floats(-4, 4), st.floats(-4, 4))
def test_bounded_nonnegative_compact(src, x1, x2):
    v = eval_source(src, (x1, x2))
    assert 0.0 <= v <= src.max_value + 1e-12
    if math.hypot(x1, x2) > src.support_radius + 1e-12:
        assert v == 0.0


@given(sources)
def test_max_attained_on_grid(src):
    spec = GridSpec(2.56, 64)
    f = sample_to_field(src, spec)
    # within one node of the maximizer; sources are at most 2-Lipschitz
    slack = 2 * math.sqrt(2) * spec.dx if math.isfinite(src.lipschitz_bound) else 0.0
    assert np.max(f.values) >= src.max_value - slack - 1e-12


@given(st.floats(0.1, 2.5), st.integers(-20, 20), st.integers(-20, 20))
def test_radial_rotation_symmetry(r, i, j):
    c = RadialCone(r)
    dx = 0.05
    vals = {float(c(a * dx, b * dx)) for a, b in ((i, j), (-j, i), (-i, -j), (j, -i))}
    assert max(vals) - min(vals) <= 1e-15


def test_radial_table(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("radius,value\n0,1.0\n1,0.5\n2,0.0\n")
    t = RadialTable.from_csv(path)
    assert t.profile(np.array([0.5, 1.5, 3.0])).tolist() == [0.75, 0.25, 0.0]
    assert eval_source(t, (0.6, 0.8)) == pytest.approx(0.5)
    assert t.max_value == 1.0 and t.support_radius == 2.0 and t.lipschitz_bound == 0.5
    jump = RadialTable((0.0, 1.0), (1.0, 1.0))
    assert jump.lipschitz_bound == math.inf and eval_source(jump, (1.5, 0)) == 0.0
    assert source_from_config("radial_table", table_path=str(path)) == t
    with pytest.raises(ValueError):
        RadialTable((0.0, 0.0), (1.0, 1.0))
    with pytest.raises(ValueError):
        RadialTable((0.0, 1.0), (1.0, -1.0))


def test_source_from_config():
    assert source_from_config("radial_cone", r=1.6) == RadialCone(1.6)
    assert source_from_config("twin_cones", R0=1.2, offset=None) == TwinCones(1.2, 0.0)
    assert source_from_config("twin_balls", R0=0.2, offset=0.8) == TwinBalls(0.2, 0.8)
    with pytest.raises(ValueError):
        source_from_config("gaussian")
    with pytest.raises(ValueError):
        source_from_config("radial_cone", r=-1)
    with pytest.raises(ValueError):
        source_from_config("radial_table")


def test_profile_only_for_radial():
    with pytest.raises(TypeError):
        L1Cone(1.0).profile(0.5)
