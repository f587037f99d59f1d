import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bayeswarp.exceptions import InvalidInputError
from bayeswarp.functions import (
    as_warping,
    compose_warps,
    compute_srsf,
    derivative,
    identity_warp,
    invert_warp,
    l2_distance,
    l2_norm,
    make_warping,
    srsf_to_function,
    uniform_grid,
    warp_function,
    warp_srsf,
)
from bayeswarp.sphere import fisher_rao_distance

from conftest import smooth_function, smooth_warp

T = uniform_grid(100)


# compute_srsf


def test_srsf_of_identity_function_is_one():
    np.testing.assert_allclose(compute_srsf(T), 1.0, atol=1e-12)


def test_srsf_of_constant_is_zero():
    np.testing.assert_array_equal(compute_srsf(np.full(100, 3.0)), 0.0)


def test_srsf_of_square_at_half():
    # analytic derivative 2t gives sqrt(2 * 0.5) = 1 at t = 0.5
    t = uniform_grid(101)
    q = compute_srsf(t**2)
    assert abs(q[50] - 1.0) < 1e-2
    # central differences are exact on quadratics
    np.testing.assert_allclose(derivative(t**2), 2 * t, atol=1e-10)


def test_srsf_rejects_non_finite():
    f = T.copy()
    f[3] = np.nan
    with pytest.raises(InvalidInputError):
        compute_srsf(f)


# srsf_to_function


def test_unit_srsf_integrates_to_identity():
    np.testing.assert_allclose(srsf_to_function(np.ones(100)), T, atol=1e-12)


def test_zero_srsf_gives_constant():
    f = srsf_to_function(np.zeros(100), f0=5.0)
    np.testing.assert_array_equal(f, 5.0)


def test_srsf_round_trip_sine():
    f = np.sin(2 * np.pi * T)
    back = srsf_to_function(compute_srsf(f), f[0])
    assert back[0] == f[0]
    assert np.max(np.abs(back - f)) < 1e-2


def test_srsf_round_trip_error_shrinks_with_n():
    errs = []
    for n in (50, 100, 200, 400):
        t = uniform_grid(n)
        f = np.sin(2 * np.pi * t) + 0.3 * t
        errs.append(np.max(np.abs(srsf_to_function(compute_srsf(f), f[0]) - f)))
    assert all(b < a for a, b in zip(errs, errs[1:]))


# warp_function


def test_warp_by_identity_is_exact():
    f = np.cos(3 * T) + T**3
    np.testing.assert_array_equal(warp_function(f, identity_warp(100)), f)


def test_warping_identity_function_returns_warp():
    gam = T**2
    np.testing.assert_allclose(warp_function(T, gam), gam, atol=1e-12)


def test_warp_square_by_square():
    t = uniform_grid(101)
    out = warp_function(t**2, t**2)
    assert abs(out[50] - 0.0625) < 1e-3


def test_warp_rejects_out_of_range():
    with pytest.raises(InvalidInputError):
        warp_function(T, T * 1.1)


# warp_srsf


def test_warp_srsf_identity():
    q = np.sin(2 * np.pi * T)
    np.testing.assert_allclose(warp_srsf(q, T), q, atol=1e-12)


def test_warp_srsf_constant_by_square():
    t = uniform_grid(101)
    out = warp_srsf(np.ones(101), t**2)
    assert abs(out[50] - 1.0) < 1e-2
    np.testing.assert_allclose(out[1:-1], np.sqrt(2 * t[1:-1]), atol=1e-2)


def test_warp_srsf_norm_preserved():
    rng = np.random.default_rng(0)
    q = smooth_function(rng)
    gam = smooth_warp(rng)
    assert abs(l2_norm(warp_srsf(q, gam)) - l2_norm(q)) < 1e-2


def test_warp_srsf_batch_matches_loop():
    rng = np.random.default_rng(1)
    q = smooth_function(rng)
    gams = np.array([smooth_warp(rng) for _ in range(4)])
    np.testing.assert_allclose(warp_srsf(q, gams), [warp_srsf(q, g) for g in gams])


def test_srsf_of_warped_function_matches_group_action():
    # (q, gamma) is the SRSF of f o gamma
    rng = np.random.default_rng(2)
    t = uniform_grid(400)
    f = smooth_function(rng, 400)
    gam = smooth_warp(rng, 400)
    lhs = compute_srsf(warp_function(f, gam))
    rhs = warp_srsf(compute_srsf(f), gam)
    assert l2_distance(lhs, rhs) < 5e-2 * max(l2_norm(rhs), 1.0)
    assert t.size == lhs.size


# l2_distance


def test_l2_distance_basics():
    q = np.sin(T)
    assert l2_distance(q, q) == 0.0
    assert abs(l2_distance(np.ones(100), np.zeros(100)) - 1.0) < 1e-12


def test_l2_distance_sine():
    # closed form: int sin^2(2 pi t) dt = 1/2
    assert abs(l2_distance(np.sin(2 * np.pi * T), np.zeros(100)) - 1 / np.sqrt(2)) < 1e-3


def test_l2_distance_length_mismatch():
    with pytest.raises(InvalidInputError):
        l2_distance(np.ones(10), np.ones(11))


arrays = st.lists(st.floats(-10, 10, allow_nan=False), min_size=20, max_size=20).map(np.array)


@given(arrays, arrays, arrays)
def test_l2_metric_axioms(a, b, c):
    assert abs(l2_distance(a, b) - l2_distance(b, a)) < 1e-12
    assert l2_distance(a, c) <= l2_distance(a, b) + l2_distance(b, c) + 1e-10


@given(st.integers(0, 2**32 - 1))
def test_group_action_isometry(seed):
    rng = np.random.default_rng(seed)
    q1, q2 = smooth_function(rng), smooth_function(rng)
    gam = smooth_warp(rng)
    d0 = l2_distance(q1, q2)
    d1 = l2_distance(warp_srsf(q1, gam), warp_srsf(q2, gam))
    assert abs(d1 - d0) < 5e-2


# warp utilities


def test_make_warping_clamps_and_counts():
    gam, n = make_warping(np.array([0.0, 0.5, 0.5, 0.4, 1.0]), return_clamps=True)
    assert n == 2
    assert gam[0] == 0.0 and gam[-1] == 1.0
    assert np.all(np.diff(gam) > 0)


def test_as_warping_validation():
    as_warping(T)
    with pytest.raises(InvalidInputError):
        as_warping(T * 0.9)
    bad = T.copy()
    bad[10] = bad[9]
    with pytest.raises(InvalidInputError):
        as_warping(bad)


def test_inverse_and_composition():
    gam = T + 0.3 * T * (1 - T)
    inv = invert_warp(gam)
    assert fisher_rao_distance(compose_warps(gam, inv), T) < 1e-2
    assert fisher_rao_distance(compose_warps(inv, gam), T) < 1e-2
