import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from sigconsensus.baselines import (
    threshold_confidence_interval,
    threshold_max,
    threshold_mean,
    threshold_min,
)
from sigconsensus.consensus import EnrollConfig, classify, enroll, score_probe
from sigconsensus.core import EmptyMatrix, Label, SignatureSample, SimilarityMatrix, SplitSpec

M = SimilarityMatrix([[0.9, 0.8], [0.7, 0.6]])


def test_examples():
    assert threshold_max(M) == 0.9
    assert threshold_min(M) == 0.6
    assert threshold_mean(M) == pytest.approx(0.75, abs=1e-15)
    assert threshold_confidence_interval(M, 0.99999) == pytest.approx(0.694099, abs=1e-6)
    assert threshold_confidence_interval(M, 0.99999) == pytest.approx(
        oracles.ci_threshold([[0.9, 0.8], [0.7, 0.6]], 0.99999), abs=1e-15)
    for fn in (threshold_max, threshold_min, threshold_mean):
        assert fn(SimilarityMatrix([[0.5, 0.5]])) == 0.5
        assert fn(SimilarityMatrix([[1.0]])) == 1.0
    assert threshold_confidence_interval(SimilarityMatrix([[0.5, 0.5]]), 3.0) == 0.5
    assert threshold_confidence_interval(SimilarityMatrix([[1.0]]), 0.99999) == 1.0


def test_empty():
    with pytest.raises(EmptyMatrix):
        threshold_max(np.empty((0, 0)))


matrices = st.integers(1, 10).flatmap(lambda r: st.integers(1, 10).flatmap(
    lambda c: arrays(np.float64, (r, c), elements=st.floats(-1, 1, allow_nan=False))))


@settings(max_examples=300, deadline=None)
@given(matrices, st.floats(0, 10))
def test_ordering(mat, alpha):
    m = SimilarityMatrix(mat)
    assert threshold_min(m) <= threshold_mean(m) <= threshold_max(m)
    assert threshold_confidence_interval(m, alpha) <= threshold_mean(m)


def test_max_value_on_identical_gallery_rejects_everything_imperfect():
    samples = [SignatureSample("w", f"g{i}", Label.GENUINE, [1.0, 2.0, 3.0]) for i in range(3)]
    model, _ = enroll(samples, EnrollConfig(split=SplitSpec(1, 1, 1)), strategy="max")
    assert model.consensus is None and model.strategy == "max"
    assert model.tau_c == pytest.approx(1.0, abs=1e-15)
    assert classify(score_probe([1.0, 2.0, 3.0], model), model.tau_c) == 1
    assert classify(score_probe([1.0, 2.0, 3.01], model), model.tau_c) == 0
