import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthkit.depthmap import DisparityMap
from depthkit.wls import (
    WlsParams,
    WlsSolveError,
    guide_affinities,
    relative_residual,
    wls_filter,
    wls_loss,
    wls_solve,
    wls_system,
)


def random_instance(seed, h=None, w=None):
    rng = np.random.default_rng(seed)
    h = h or int(rng.integers(2, 12))
    w = w or int(rng.integers(2, 12))
    g = rng.uniform(-5, 20, (h, w))
    weight = (rng.random((h, w)) > 0.2).astype(float)
    weight.flat[0] = 1.0
    guide = rng.random((h, w))
    ax, ay = guide_affinities(guide, 1.3, 1e-4)
    lam = float(10 ** rng.uniform(-2, 3))
    return g, weight, ax, ay, lam


def total_variation(u):
    return float(np.abs(np.diff(u, axis=1)).sum() + np.abs(np.diff(u, axis=0)).sum())


def test_params_validation():
    with pytest.raises(ValueError):
        WlsParams(lam=-1)
    with pytest.raises(ValueError):
        WlsParams(alpha=0)
    with pytest.raises(ValueError):
        WlsParams(solver="jacobi")


def test_two_pixel_hand_example():
    # (u0)^2 + (u1 - 1)^2 + (u1 - u0)^2, normal equations [[2,-1],[-1,2]] u = (0, 1)
    u = wls_solve(np.array([[0.0, 1.0]]), np.ones((1, 2)), np.array([[1.0]]), np.zeros((0, 2)), lam=1.0)
    np.testing.assert_allclose(u, [[1 / 3, 2 / 3]], atol=1e-12)
    u = wls_solve(np.array([[0.0], [1.0]]), np.ones((2, 1)), np.zeros((2, 0)), np.array([[1.0]]), lam=1.0)
    np.testing.assert_allclose(u.ravel(), [1 / 3, 2 / 3], atol=1e-12)


def test_lambda_zero_returns_input_exactly(rng):
    raw = rng.integers(0, 64 * 16, (9, 13)).astype(np.int16)
    raw[2, 3] = -32768
    g = DisparityMap(raw, 0, 64)
    out = wls_filter(g, rng.random((9, 13)), WlsParams(lam=0))
    np.testing.assert_array_equal(out.raw, raw)


@given(st.floats(-50, 50), st.floats(0.01, 1e4))
@settings(max_examples=30, deadline=None)
def test_constant_is_fixed_point(c, lam):
    rng = np.random.default_rng(0)
    ax, ay = guide_affinities(rng.random((6, 7)), 1.3, 1e-4)
    u = wls_solve(np.full((6, 7), c), np.ones((6, 7)), ax, ay, lam)
    np.testing.assert_allclose(u, c, atol=1e-9 * max(1.0, abs(c)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_residual_and_maximum_principle(seed):
    g, w, ax, ay, lam = random_instance(seed)
    u = wls_solve(g, w, ax, ay, lam, tol=1e-6)
    A, b = wls_system(g, w, ax, ay, lam)
    assert relative_residual(A, u, b) <= 1e-6
    lo, hi = g[w > 0].min(), g[w > 0].max()
    slack = 1e-6 * max(1.0, abs(lo), abs(hi))
    assert u.min() >= lo - slack and u.max() <= hi + slack


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_energy_descent(seed):
    g, _, ax, ay, lam = random_instance(seed)
    w = np.ones_like(g)
    u = wls_solve(g, w, ax, ay, lam)
    assert wls_loss(u, g, w, ax, ay, lam) <= wls_loss(g, g, w, ax, ay, lam) + 1e-9
    # the minimizer beats random perturbations too
    rng = np.random.default_rng(seed)
    for _ in range(3):
        v = u + rng.normal(0, 1e-3, u.shape)
        assert wls_loss(u, g, w, ax, ay, lam) <= wls_loss(v, g, w, ax, ay, lam) + 1e-9


def test_cg_matches_direct():
    g, w, ax, ay, lam = random_instance(7, 20, 25)
    direct = wls_solve(g, w, ax, ay, lam, solver="direct")
    cg = wls_solve(g, w, ax, ay, lam, tol=1e-10, max_iters=20000, solver="cg")
    np.testing.assert_allclose(cg, direct, atol=1e-6 * np.abs(g).max())


def test_cg_nonconvergence_reports_residual():
    g, w, ax, ay, _ = random_instance(3, 30, 30)
    with pytest.raises(WlsSolveError) as info:
        wls_solve(g, w, ax, ay, 1e4, tol=1e-12, max_iters=2, solver="cg")
    assert info.value.residual > 1e-12


def test_step_total_variation_monotone_in_lambda():
    g = np.zeros((8, 16))
    g[:, 8:] = 10.0
    ax, ay = guide_affinities(np.full((8, 16), 0.5), 1.3, 1e-4)
    tvs = [total_variation(wls_solve(g, np.ones_like(g), ax, ay, lam)) for lam in (1e-4, 1e-3, 1e-2)]
    assert tvs[0] >= tvs[1] >= tvs[2]
    assert tvs[0] > tvs[2]


def test_guide_edge_preserves_step():
    g = np.zeros((8, 16))
    g[:, 8:] = 10.0
    flat = np.full((8, 16), 0.5)
    edged = flat.copy()
    edged[:, 8:] = 0.9
    lam = 1e-3
    sharp = wls_solve(g, np.ones_like(g), *guide_affinities(edged, 1.3, 1e-4), lam)
    blurred = wls_solve(g, np.ones_like(g), *guide_affinities(flat, 1.3, 1e-4), lam)
    assert np.abs(np.diff(sharp, axis=1)).max() > np.abs(np.diff(blurred, axis=1)).max()


def test_affinities_shapes_and_flat_value():
    ax, ay = guide_affinities(np.full((4, 5), 0.3), 1.3, 1e-4)
    assert ax.shape == (4, 4) and ay.shape == (3, 5)
    np.testing.assert_allclose(ax, 1e4)


def test_filter_inpaints_holes_and_requantizes(rng):
    disp = np.full((10, 20), 12.0)
    disp[4:6, 5:9] = np.nan
    g = DisparityMap.from_float(disp, 0, 64)
    out = wls_filter(g, rng.random((10, 20)), WlsParams(lam=50))
    assert out.valid.all()
    assert np.all(out.raw == 12 * 16)


def test_filter_size_mismatch():
    g = DisparityMap.from_float(np.ones((3, 4)), 0, 16)
    with pytest.raises(ValueError):
        wls_filter(g, np.zeros((4, 3)), WlsParams())


def test_filter_all_invalid_passthrough():
    g = DisparityMap.from_float(np.full((3, 4), np.nan), 0, 16)
    assert wls_filter(g, np.zeros((3, 4)), WlsParams()).identical(g)
