import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbswave import correlation as corr
from mbswave.baselines import matched_filter
from mbswave.linalg import DimensionError
from mbswave.model import Scenario, random_phase_init, synthesize


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def dense_xcorr(a, b):
    n = a.size
    return np.array([a.conj() @ corr.shift_matrix(n, lag) @ b for lag in range(-(n - 1), n)])


def test_direct_triangle():
    np.testing.assert_allclose(corr.xcorr_direct([1, 1], [1, 1]), [1, 2, 1])


def test_direct_pure_shift():
    np.testing.assert_allclose(corr.xcorr_direct([1, 0], [0, 1]), [1, 0, 0])


def test_direct_matches_shift_matrices():
    rng = np.random.default_rng(0)
    a, b = crandn(rng, 16), crandn(rng, 16)
    np.testing.assert_allclose(corr.xcorr_direct(a, b), dense_xcorr(a, b), atol=1e-12)


@pytest.mark.parametrize("n", [4, 16, 64])
def test_fast_matches_direct(n):
    rng = np.random.default_rng(n)
    for _ in range(100):
        a, b = crandn(rng, n), crandn(rng, n)
        np.testing.assert_allclose(corr.xcorr_fast(a, b), corr.xcorr_direct(a, b), atol=1e-10)


def test_fast_impulse_and_zero():
    imp = np.zeros(8)
    imp[0] = 1
    expected = np.zeros(15)
    expected[7] = 1
    np.testing.assert_allclose(corr.xcorr_fast(imp, imp), expected, atol=1e-15)
    assert np.all(corr.xcorr_fast(np.zeros(8), crandn(np.random.default_rng(1), 8)) == 0)


def test_length_mismatch():
    with pytest.raises(DimensionError):
        corr.xcorr_direct(np.ones(3), np.ones(4))
    with pytest.raises(DimensionError):
        corr.xcorr_fast(np.ones(3), np.ones(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 512), st.integers(0, 2**31))
def test_fast_direct_property(n, seed):
    rng = np.random.default_rng(seed)
    a, b = crandn(rng, n), crandn(rng, n)
    np.testing.assert_allclose(corr.xcorr_fast(a, b), corr.xcorr_direct(a, b), atol=1e-10 * n)


def test_profile_single_bs_matched():
    rng = np.random.default_rng(2)
    x = crandn(rng, 1, 12)
    p = corr.profile(x, x)
    assert p.values.shape == (1, 1, 23)
    assert p.zero_lag()[0] == pytest.approx(np.linalg.norm(x) ** 2)


def test_profile_duplicated_bs():
    rng = np.random.default_rng(3)
    x1 = crandn(rng, 10)
    x = np.stack([x1, x1])
    p = corr.profile(x, x)
    np.testing.assert_allclose(p.pair(0, 1), p.auto(0))


def test_profile_matches_dense_definition():
    rng = np.random.default_rng(4)
    x, h = crandn(rng, 2, 8), crandn(rng, 2, 8)
    p = corr.profile(x, h)
    for m1 in range(2):
        for m2 in range(2):
            np.testing.assert_allclose(p.pair(m1, m2), dense_xcorr(x[m1], h[m2]), atol=1e-12)


def test_matched_profile_is_conjugate_symmetric():
    rng = np.random.default_rng(5)
    x = crandn(rng, 3, 20)
    p = corr.profile(x, matched_filter(x))
    for m in range(3):
        r = p.auto(m)
        np.testing.assert_allclose(r[::-1], r.conj(), atol=1e-10)


def brute_isl_full(x, h):
    m, n = x.shape
    total = 0.0
    for a in range(m):
        for lag in range(-(n - 1), n):
            total += abs(sum(np.conj(x[a, k]) * h[a, k - lag] for k in range(n) if 0 <= k - lag < n)) ** 2
    for a in range(m):
        for b in range(m):
            for lag in range(-(n - 1), n):
                total += abs(sum(np.conj(x[a, k]) * h[b, k - lag] for k in range(n) if 0 <= k - lag < n)) ** 2
    return total


def test_isl_full_impulse_counts_auto_twice():
    p = corr.profile(np.array([[1.0, 0, 0]]), np.array([[1.0, 0, 0]]))
    assert corr.isl_full(p) == pytest.approx(2.0)


def test_isl_full_zero():
    p = corr.CorrelationProfile(np.zeros((2, 2, 7), dtype=complex))
    assert corr.isl_full(p) == 0


def test_isl_full_brute_force():
    rng = np.random.default_rng(6)
    x, h = crandn(rng, 2, 4), crandn(rng, 2, 4)
    assert corr.isl_full(corr.profile(x, h)) == pytest.approx(brute_isl_full(x, h), rel=1e-12)


def test_isl_objective_edges():
    rng = np.random.default_rng(7)
    x = crandn(rng, 1, 8)
    p = corr.profile(x, x)
    assert corr.isl_objective(p, 7) == pytest.approx(0.0, abs=1e-12)
    x2, h2 = crandn(rng, 2, 8), crandn(rng, 2, 8)
    p2 = corr.profile(x2, h2)
    peaks = sum(abs(p2.zero_lag()) ** 2)
    assert corr.isl_objective(p2, 0) == pytest.approx(corr.total_energy(p2) - peaks, rel=1e-12)


def test_isl_objective_term_by_term():
    rng = np.random.default_rng(8)
    x, h = crandn(rng, 2, 8), crandn(rng, 2, 8)
    i = 2
    expected = 0.0
    for m1 in range(2):
        for m2 in range(2):
            for lag in range(-7, 8):
                if m1 == m2 and abs(lag) <= i:
                    continue
                expected += abs(x[m1].conj() @ corr.shift_matrix(8, lag) @ h[m2]) ** 2
    assert corr.isl_objective(corr.profile(x, h), i) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(2, 40), st.integers(0, 2**31))
def test_frobenius_pairwise_and_partition(m, n, seed):
    rng = np.random.default_rng(seed)
    x, h = crandn(rng, m, n), crandn(rng, m, n)
    p = corr.profile(x, h)
    frob = sum(
        np.linalg.norm(x.conj() @ corr.shift_matrix(n, lag) @ h.T) ** 2 for lag in range(-(n - 1), n)
    )
    assert corr.total_energy(p) == pytest.approx(frob, rel=1e-9)
    i = int(rng.integers(0, n))
    assert corr.isl_objective(p, i) + corr.mainlobe_energy(p, i) == pytest.approx(
        corr.total_energy(p), rel=1e-12
    )
    assert corr.isl_objective(p, i) <= corr.isl_full(p)


def test_metrics_full_spectrum_matched():
    sc = Scenario(m_bs=2, n_sub=32, blocked=())
    x = synthesize(random_phase_init(sc))
    m = corr.metrics(x, x, sc)
    assert m.mainlobe_gain == pytest.approx(1.0)
    assert len(m.papr_per_bs) == 2
    assert m.psl_auto_db < 0 and m.psl_cross_db < 0


def test_metrics_hand_example():
    # x = (1, 0, 0), h = (1, 0.5, 0.25): r(0) = 1, r(-1) = 0.5, r(-2) = 0.25
    sc = Scenario(m_bs=1, n_sub=3, blocked=(), mainlobe_halfwidth=0)
    x = np.array([[1.0, 0.0, 0.0]])
    h = np.array([[1.0, 0.5, 0.25]])
    m = corr.metrics(x, h, sc)
    assert m.mainlobe_gain == pytest.approx(1.0)
    assert m.psl_auto_db == pytest.approx(20 * np.log10(0.5))
    assert m.psl_cross_db is None
    assert m.isl_objective == pytest.approx(0.25 + 0.0625)
    assert m.isl_full == pytest.approx(2 * (1 + 0.25 + 0.0625))
    # P = 3/9, so PAPR = 1 / (1/3)
    assert m.papr_per_bs == [pytest.approx(3.0)]
    assert m.mainlobe_width_3db == [1]


def test_metrics_zero_mainlobe_raises():
    sc = Scenario(m_bs=1, n_sub=4, blocked=())
    with pytest.raises(corr.NormalizationError):
        corr.metrics(np.ones((1, 4)), np.zeros((1, 4)), sc)


def test_masked_mainlobe_loss():
    full = Scenario(n_sub=256, blocked=())
    masked = Scenario(n_sub=256)
    xf = synthesize(random_phase_init(full))
    xm = synthesize(random_phase_init(masked))
    ratio = corr.metrics(xm, xm, masked).mainlobe_gain / corr.metrics(xf, xf, full).mainlobe_gain
    loss_db = -10 * np.log10(ratio)
    assert loss_db == pytest.approx(10 * np.log10(256 / 218), abs=1e-9)
    assert abs(loss_db - 1.0) <= 0.5


def test_csv_round_trip():
    rng = np.random.default_rng(9)
    p = corr.profile(crandn(rng, 2, 6), crandn(rng, 2, 6))
    back = corr.profile_from_csv(corr.profile_to_csv(p))
    np.testing.assert_array_equal(back.values, p.values)
    per_pair = [corr.profile_to_csv(p, pairs=[(a, b)]) for a in range(2) for b in range(2)]
    np.testing.assert_array_equal(corr.profile_from_csv(per_pair).values, p.values)


def test_json_round_trip():
    rng = np.random.default_rng(10)
    p = corr.profile(crandn(rng, 2, 5), crandn(rng, 2, 5))
    np.testing.assert_array_equal(corr.profile_from_json(corr.profile_to_json(p)).values, p.values)
