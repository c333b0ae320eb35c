import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from flamelet_ensemble.errors import InsufficientMembers
from flamelet_ensemble.uncertainty import (
    confidence_interval,
    coverage,
    posterior_mean,
    posterior_std,
    summarize,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)
member_stacks = st.integers(2, 9).flatmap(
    lambda n: arrays(np.float64, (n, 8), elements=finite))


def test_two_point_mean_and_std():
    preds = np.array([[1.0] * 8, [3.0] * 8])
    np.testing.assert_array_equal(posterior_mean(preds), np.full(8, 2.0))
    np.testing.assert_allclose(posterior_std(preds), math.sqrt(2), rtol=1e-15)


def test_two_point_interval():
    s = summarize(np.array([[1.0], [3.0]]))
    assert s.ci_low[0] == pytest.approx(-0.77186, abs=1e-5)
    assert s.ci_high[0] == pytest.approx(4.77186, abs=1e-5)
    assert s.ci_low[0] == pytest.approx(2 - 1.96 * math.sqrt(2), abs=1e-12)
    assert s.n_members == 2


def test_identical_rows():
    v = np.linspace(-3, 7, 8)
    preds = np.tile(v, (6, 1))
    np.testing.assert_array_equal(posterior_mean(preds), v)
    np.testing.assert_array_equal(posterior_std(preds), 0.0)
    s = summarize(preds)
    np.testing.assert_array_equal(s.ci_low, v)
    np.testing.assert_array_equal(s.ci_high, v)


def test_column_sum_oracle():
    preds = np.random.default_rng(0).normal(size=(5, 8))
    mean = np.array([math.fsum(preds[:, j]) / 5 for j in range(8)])
    var = np.array([math.fsum((preds[i, j] - mean[j]) ** 2 for i in range(5)) / 4 for j in range(8)])
    np.testing.assert_allclose(posterior_mean(preds), mean, rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(posterior_std(preds), np.sqrt(var), rtol=1e-14)


def test_single_member_rejected():
    with pytest.raises(InsufficientMembers):
        posterior_std(np.ones((1, 8)))
    with pytest.raises(InsufficientMembers):
        summarize(np.ones((1, 8)))
    with pytest.raises(InsufficientMembers):
        posterior_mean(np.empty((0, 8)))


def test_interval_multipliers():
    mean, std = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    zero = confidence_interval(mean, std, multiplier=0.0)
    np.testing.assert_array_equal(zero.ci_low, mean)
    np.testing.assert_array_equal(zero.ci_high, mean)
    flat = confidence_interval(mean, np.zeros(2))
    np.testing.assert_array_equal(flat.ci_high - flat.ci_low, 0.0)
    with pytest.raises(ValueError):
        confidence_interval(mean, std, multiplier=-1.0)


def test_batched_predictions_reduce_over_members():
    preds = np.random.default_rng(1).normal(size=(4, 10, 8))
    s = summarize(preds)
    assert s.mean.shape == s.std.shape == (10, 8)
    np.testing.assert_allclose(s.std[3], posterior_std(preds[:, 3]), rtol=1e-15)


def test_coverage_counts_inside_band():
    preds = np.array([[[0.0, 0.0]], [[2.0, 2.0]]])  # mean 1, std sqrt(2)
    s = summarize(preds)
    truth = np.array([[1.0, 10.0]])
    np.testing.assert_array_equal(coverage(s, truth), [1.0, 0.0])


@given(member_stacks, st.floats(-100, 100, allow_nan=False), st.floats(-100, 100, allow_nan=False))
def test_affine_equivariance(preds, a, b):
    s, t = summarize(preds), summarize(a * preds + b)
    scale = np.max(np.abs(preds)) * max(abs(a), 1) + abs(b) + 1
    np.testing.assert_allclose(t.mean, a * s.mean + b, rtol=1e-9, atol=1e-9 * scale)
    np.testing.assert_allclose(t.std, abs(a) * s.std, rtol=1e-9, atol=1e-9 * scale)


@given(member_stacks, st.randoms(use_true_random=False))
def test_permutation_invariance(preds, rnd):
    order = list(range(len(preds)))
    rnd.shuffle(order)
    s, t = summarize(preds), summarize(preds[order])
    scale = np.max(np.abs(preds)) + 1
    np.testing.assert_allclose(t.mean, s.mean, rtol=1e-12, atol=1e-12 * scale)
    np.testing.assert_allclose(t.std, s.std, rtol=1e-9, atol=1e-12 * scale)


@given(member_stacks)
def test_band_contains_mean(preds):
    s = summarize(preds)
    assert np.all(s.std >= 0)
    assert np.all(s.ci_low <= s.mean) and np.all(s.mean <= s.ci_high)
    np.testing.assert_allclose(s.ci_high - s.ci_low, 2 * s.half_width, rtol=1e-12, atol=1e-9)
