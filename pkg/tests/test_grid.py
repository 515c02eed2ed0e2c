import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from bsasym.grid import (
    Field, GridSpec, inf, l2_seminorm, mean, neumann_get, node_coord, pad_neumann,
    read_heightmap, sup, write_heightmap,
)

FULL_GRID = GridSpec(2.56, 128)


def test_spacing_is_derived():
    assert FULL_GRID.dx == pytest.approx(0.02, abs=1e-15)
    assert FULL_GRID.dx * FULL_GRID.N == FULL_GRID.R
    assert FULL_GRID.n_nodes == 257


@pytest.mark.parametrize("R, N", [(0, 4), (-1, 4), (np.inf, 4), (1, 0), (1, 2.5)])
def test_gridspec_rejects_bad_input(R, N):
    with pytest.raises(ValueError):
        GridSpec(R, N)


def test_node_coord():
    assert node_coord(FULL_GRID, 1, 0) == pytest.approx((0.02, 0.0))
    assert node_coord(FULL_GRID, 0, 0) == (0.0, 0.0)
    assert node_coord(FULL_GRID, -128, 128) == pytest.approx((-2.56, 2.56))
    with pytest.raises(IndexError):
        node_coord(FULL_GRID, 129, 0)


def test_mesh_layout_matches_indexing():
    spec = GridSpec(1.0, 3)
    u = Field.from_function(spec, lambda x1, x2: 10 * x1 + x2)
    i, j = 2, -1
    x1, x2 = node_coord(spec, i, j)
    assert u[i, j] == pytest.approx(10 * x1 + x2)
    with pytest.raises(IndexError):
        u[4, 0]


def _ramp(spec):
    return Field(spec, np.arange(spec.n_nodes**2, dtype=float).reshape(spec.shape))


def test_neumann_get_examples():
    spec = GridSpec(1.0, 4)
    u = _ramp(spec)
    N = spec.N
    assert neumann_get(u, N + 1, 0) == u[N, 0]
    assert neumann_get(u, N + 2, 0) == u[N, 0]
    assert neumann_get(u, 3, -4) == u[3, -4]
    assert neumann_get(u, -N - 2, N + 1) == u[-N, N]
    with pytest.raises(IndexError):
        neumann_get(u, N + 3, 0)


@given(st.integers(-6, 6), st.integers(-6, 6))
def test_neumann_get_is_idempotent_under_clamping(i, j):
    spec = GridSpec(1.0, 4)
    u = _ramp(spec)
    c = lambda k: min(max(k, -spec.N), spec.N)  # noqa: E731
    assert neumann_get(u, i, j) == neumann_get(u, c(i), c(j))


def test_pad_matches_neumann_get():
    spec = GridSpec(1.0, 3)
    u = _ramp(spec)
    P = pad_neumann(u.values, 2)
    N = spec.N
    for i in range(-N - 2, N + 3):
        for j in range(-N - 2, N + 3):
            assert P[j + N + 2, i + N + 2] == neumann_get(u, i, j)


def test_field_is_immutable_and_finite():
    spec = GridSpec(1.0, 2)
    v = np.zeros(spec.shape)
    u = Field(spec, v)
    v[0, 0] = 5.0
    assert u.values[0, 0] == 0.0
    with pytest.raises(ValueError):
        u.values[0, 0] = 1.0
    bad = np.zeros(spec.shape)
    bad[1, 1] = np.nan
    with pytest.raises(FloatingPointError):
        Field(spec, bad)
    with pytest.raises(ValueError):
        Field(spec, np.zeros((3, 3)))


def test_field_arithmetic_needs_same_grid():
    a = Field.constant(GridSpec(1.0, 2), 1.0)
    b = Field.constant(GridSpec(2.0, 2), 1.0)
    with pytest.raises(ValueError):
        a + b
    c = a + a * 2.0 - 0.5
    assert np.all(c.values == 2.5)
    assert (a / 2.0) == Field.constant(a.spec, 0.5)
    assert (-a) == Field.constant(a.spec, -1.0)
    assert (1.0 - a) == Field.zeros(a.spec)


def test_reductions_examples():
    spec = GridSpec(1.0, 1)
    v = np.zeros(spec.shape)
    v[2, 2] = 1.0
    assert mean(Field(spec, v)) == pytest.approx(1 / 9)
    assert mean(Field.constant(spec, 3.5)) == 3.5
    odd = Field.from_function(GridSpec(1.0, 8), lambda x1, x2: x1)
    assert abs(mean(odd)) < 1e-15

    assert l2_seminorm(Field.zeros(FULL_GRID)) == 0.0
    assert l2_seminorm(Field.constant(FULL_GRID, 1.0)) == pytest.approx(5.14, rel=1e-12)
    one = np.zeros(FULL_GRID.shape)
    one[10, 20] = 1.0
    assert l2_seminorm(Field(FULL_GRID, one)) == pytest.approx(0.02, rel=1e-12)

    seven = np.zeros(spec.shape)
    seven[0, 1] = 7.0
    assert sup(Field(spec, seven)) == 7.0 and inf(Field(spec, seven)) == 0.0
    bowl = Field.from_function(GridSpec(1.0, 5), lambda x1, x2: -(x1**2 + x2**2))
    assert sup(bowl) == 0.0 and bowl[0, 0] == 0.0


small_fields = arrays(np.float64, (7, 7), elements=st.floats(-1e3, 1e3))


@given(small_fields, st.integers(0, 7))
def test_reductions_invariant_under_square_symmetries(v, k):
    spec = GridSpec(1.5, 3)
    w = np.rot90(v, k % 4)
    if k >= 4:
        w = w.T
    a, b = Field(spec, v), Field(spec, w)
    assert mean(b) == pytest.approx(mean(a), rel=1e-12, abs=1e-9)
    assert l2_seminorm(b) == pytest.approx(l2_seminorm(a), rel=1e-12, abs=1e-9)


@given(small_fields, small_fields)
def test_sup_is_subadditive(v, w):
    spec = GridSpec(1.5, 3)
    a, b = Field(spec, v), Field(spec, w)
    assert sup(a + b) <= sup(a) + sup(b) + 1e-9


def test_heightmap_round_trip(tmp_path):
    spec = GridSpec(2.56, 4)
    u = Field.from_function(spec, lambda x1, x2: np.sin(x1) * np.exp(x2) / 3)
    path = tmp_path / "h.txt"
    write_heightmap(path, u, 1.25)
    lines = path.read_text().splitlines()
    assert lines[0] == "# R=2.56 N=4 t=1.25"
    assert len(lines) == 1 + spec.n_nodes
    assert all(len(line.split(",")) == spec.n_nodes for line in lines[1:])
    back, t = read_heightmap(path)
    assert t == 1.25 and back == u
