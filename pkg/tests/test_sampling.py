import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from robustdyn.errors import InvalidArgument
from robustdyn.metering import Meter
from robustdyn.sparsify import next_pow2, piece_sampling_prob, subset_sample


def test_p_zero_and_one():
    rng = np.random.default_rng(0)
    assert len(subset_sample(50, 0.0, rng)) == 0
    assert subset_sample(50, 1.0, rng).tolist() == list(range(50))
    assert len(subset_sample(0, 0.5, rng)) == 0


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_p_out_of_range(p):
    with pytest.raises(InvalidArgument):
        subset_sample(10, p, np.random.default_rng(0))


@given(st.integers(1, 400), st.floats(0.01, 0.99), st.integers(0, 2**32 - 1))
def test_output_sorted_unique_in_range(N, p, seed):
    meter = Meter()
    idx = subset_sample(N, p, np.random.default_rng(seed), meter)
    assert np.all(np.diff(idx) > 0)
    assert idx.size == 0 or (idx[0] >= 0 and idx[-1] < N)
    assert meter["touches"] == len(idx) + 1


def test_bernoulli_marginals_and_pairs():
    N, p, trials = 20, 0.3, 100_000
    rng = np.random.default_rng(7)
    X = np.zeros((trials, N), dtype=np.int8)
    for t in range(trials):
        X[t, subset_sample(N, p, rng)] = 1
    freq = X.mean(axis=0)
    sd = math.sqrt(p * (1 - p) / trials)
    assert np.all(np.abs(freq - p) < 4 * sd)
    joint = (X.T.astype(np.int32) @ X.astype(np.int32)) / trials
    sdj = math.sqrt(p * p * (1 - p * p) / trials)
    off = ~np.eye(N, dtype=bool)
    assert np.all(np.abs(joint[off] - p * p) < 4.5 * sdj)
    # kept-count distribution against Binomial(N, p)
    counts = np.bincount(X.sum(axis=1), minlength=N + 1)
    expected = stats.binom.pmf(np.arange(N + 1), N, p) * trials
    keep = expected >= 5
    obs, exp = counts[keep], expected[keep]
    exp = exp * obs.sum() / exp.sum()
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_touches_scale_with_pN():
    rng = np.random.default_rng(1)
    meter = Meter()
    N, p, reps = 1_000_000, 1e-4, 50
    for _ in range(reps):
        subset_sample(N, p, rng, meter)
    assert meter["touches"] / reps < 3 * (p * N + 1)


def test_next_pow2():
    assert [next_pow2(x) for x in (0, 1, 2, 3, 4, 5, 1023, 1024, 2.5)] == [0, 1, 2, 4, 4, 8, 1024, 1024, 4]


@given(st.floats(0.5, 1e9))
def test_next_pow2_sandwich(d):
    t = next_pow2(d)
    assert t >= d - 1e-9 and (t == 1 or t < 2 * d)


def test_sampling_prob_clamped_to_one():
    assert piece_sampling_prob(16, 0.5, 0.5, 4) == 1.0


def test_sampling_prob_formula_value():
    want = (24 * math.log(16) / (0.5 * 0.25)) ** 2 * 2 / 2**20
    assert piece_sampling_prob(16, 0.5, 0.5, 2**20) == pytest.approx(want, rel=1e-12)
    assert want == pytest.approx(0.540510, abs=1e-6)


def test_sampling_prob_override():
    assert piece_sampling_prob(100, 0.25, 0.1, 64, oversampling=4) == pytest.approx(0.125)


@given(st.floats(1, 1e12), st.floats(1, 1e12))
def test_sampling_prob_monotone(a, b):
    lo, hi = sorted((a, b))
    assert piece_sampling_prob(50, 0.3, 0.2, hi) <= piece_sampling_prob(50, 0.3, 0.2, lo)


def test_sampling_prob_rejects_nonpositive():
    with pytest.raises(InvalidArgument):
        piece_sampling_prob(16, 0.0, 0.5, 4)
