import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from sigconsensus.consensus import (
    DEFAULT_ALPHA,
    DEFAULT_E_CONSENSUS,
    DEFAULT_E_THRESHOLD,
    EnrollConfig,
    build_consensus,
    classify,
    compute_threshold,
    enroll,
    score_probe,
    split_gallery,
)
from sigconsensus.core import (
    Aggregation,
    ConsensusSet,
    EmptyMatrix,
    InsufficientSamples,
    InvalidParameter,
    Label,
    SignatureSample,
    SimilarityMatrix,
    SplitSpec,
    ThresholdModel,
    ModelParams,
)

E4 = math.exp(-4.0)
E45 = math.exp(-4.5)


def genuine(n, dim=4, writer="w1", seed=0):
    rng = np.random.default_rng(seed)
    return [SignatureSample(writer, f"g{i:02d}", Label.GENUINE, rng.normal(size=dim)) for i in range(n)]


def test_defaults():
    assert DEFAULT_ALPHA == 0.99999
    assert DEFAULT_E_CONSENSUS == pytest.approx(0.0183156, abs=1e-7)
    assert DEFAULT_E_THRESHOLD == pytest.approx(0.0111090, abs=1e-7)


# ------------------------------------------------------------------ split

@pytest.mark.parametrize("n, split", [
    (24, SplitSpec(14, 5, 5)),   # CEDAR / GPDS genuine count and gallery split
    (15, SplitSpec(5, 5, 5)),    # MCYT, uses every sample
    (2, SplitSpec(1, 1, 0)),
])
def test_split_sizes_disjoint(n, split):
    samples = genuine(n)
    a, b, p = split_gallery(samples, split, seed=7)
    assert (len(a), len(b), len(p)) == (split.n_gallery_a, split.n_gallery_b, split.n_probe_genuine)
    ids = [s.sample_id for s in a + b + p]
    assert len(set(ids)) == len(ids)


def test_split_deterministic_and_seed_sensitive():
    samples = genuine(24)
    first = split_gallery(samples, SplitSpec(14, 5, 5), 7)
    again = split_gallery(samples, SplitSpec(14, 5, 5), 7)
    other = split_gallery(samples, SplitSpec(14, 5, 5), 8)
    ids = lambda parts: [[s.sample_id for s in part] for part in parts]  # noqa: E731
    assert ids(first) == ids(again)
    assert ids(first) != ids(other)


def test_split_insufficient_names_writer_and_shortfall():
    with pytest.raises(InsufficientSamples) as exc:
        split_gallery(genuine(10, writer="cedar-3"), SplitSpec(14, 5, 5), 0)
    assert exc.value.writer_id == "cedar-3"
    assert exc.value.shortfall == 14
    assert "cedar-3" in str(exc.value)


def test_split_rejects_forgeries():
    s = genuine(3) + [SignatureSample("w1", "f1", Label.FORGED, [1, 2, 3, 4])]
    with pytest.raises(InvalidParameter):
        split_gallery(s, SplitSpec(1, 1, 1), 0)


# ------------------------------------------------------------------ consensus / threshold

def test_consensus_all_equal():
    c = build_consensus(SimilarityMatrix([[0.5, 0.5]]), 0.01)
    assert c.source_mean == 0.5
    assert c.filter_mean == pytest.approx(0.49)
    assert c.retained == (0.5, 0.5)


def test_consensus_two_by_two():
    c = build_consensus(SimilarityMatrix([[0.9, 0.8], [0.7, 0.6]]), E4)
    assert c.source_mean == pytest.approx(0.75, abs=1e-15)
    assert c.filter_mean == pytest.approx(0.731684, abs=1e-6)
    assert c.retained == (0.9, 0.8)


def test_consensus_singleton():
    assert build_consensus(SimilarityMatrix([[1.0]]), E4).retained == (1.0,)


def test_consensus_keeps_ties_row_major():
    # mu = 0.5, e = 0.1 -> mu' = 0.4 exactly representable tie is kept
    m = SimilarityMatrix([[0.25, 0.75], [0.75, 0.25]])
    c = build_consensus(m, 0.5)
    assert c.retained == (0.25, 0.75, 0.75, 0.25)
    c = build_consensus(SimilarityMatrix([[0.0, 1.0], [0.5, 0.5]]), 0.0625)
    assert c.retained == (1.0, 0.5, 0.5)


def test_consensus_empty():
    with pytest.raises(EmptyMatrix):
        build_consensus(np.empty((0, 3)), E4)


def test_threshold_examples():
    assert compute_threshold(ConsensusSet((0.5, 0.5), 0.4, 0.5), DEFAULT_ALPHA, E45) == pytest.approx(0.4888910, abs=1e-7)
    assert compute_threshold(ConsensusSet((1.0,), 0.9, 1.0), 123.0, E45) == pytest.approx(1 - E45, abs=1e-15)
    tau = compute_threshold(ConsensusSet((0.9, 0.8), 0.7, 0.75), DEFAULT_ALPHA, E45)
    assert tau == pytest.approx(0.8035360, abs=1e-7)
    assert tau == pytest.approx(oracles.threshold([0.9, 0.8], DEFAULT_ALPHA, E45), abs=1e-15)


matrices = st.integers(1, 10).flatmap(lambda r: st.integers(1, 10).flatmap(
    lambda c: arrays(np.float64, (r, c), elements=st.floats(-1, 1, allow_nan=False))))


@settings(max_examples=300, deadline=None)
@given(matrices, st.floats(1e-6, 0.5), st.floats(0, 5), st.floats(1e-6, 0.5))
def test_consensus_threshold_properties(mat, e_c, alpha, e_t):
    c = build_consensus(SimilarityMatrix(mat), e_c)
    mu = mat.mean()
    assert c.retained
    assert all(x >= c.filter_mean for x in c.retained)
    assert np.mean(c.retained) >= mu - e_c - 1e-15
    tau = compute_threshold(c, alpha, e_t)
    assert tau < np.mean(c.retained)
    kept, mu_prime, _ = oracles.consensus(mat.tolist(), e_c)
    assert list(c.retained) == kept
    assert abs(tau - oracles.threshold(kept, alpha, e_t)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 1), st.integers(1, 6), st.integers(1, 6))
def test_equal_value_degeneracy(v, r, c):
    m = SimilarityMatrix(np.full((r, c), v))
    assert compute_threshold(build_consensus(m, E4), DEFAULT_ALPHA, E45) == v - E45


# ------------------------------------------------------------------ enroll / score / classify

def test_enroll_identity_gallery():
    samples = [SignatureSample("w", f"g{i}", Label.GENUINE, [0.3, 0.4, 0.5]) for i in range(3)]
    model, probes = enroll(samples, EnrollConfig(split=SplitSpec(1, 1, 1)))
    assert model.consensus.retained == (pytest.approx(1.0, abs=1e-15),)
    assert model.tau_c == pytest.approx(1 - E45, abs=1e-12)
    assert model.gallery_refs.shape[0] == 2
    assert len(probes) == 1


def test_enroll_cedar_shape():
    model, probes = enroll(genuine(24, dim=32), EnrollConfig(split=SplitSpec(14, 5, 5), seed=3))
    # 5 x 14 = 70 candidate similarities
    assert model.gallery_refs.shape == (19, 32)
    assert 1 <= model.consensus.size <= 70
    assert len(probes) == 5


def test_enroll_matches_oracle_pipeline():
    samples = genuine(10, dim=12, seed=4)
    config = EnrollConfig(split=SplitSpec(6, 2, 2), seed=99)
    model, probes = enroll(samples, config)
    # replay: same permutation, then pure-Python pipeline
    order = np.random.default_rng(99).permutation(10)
    ga = [samples[i].feature.tolist() for i in order[:6]]
    gb = [samples[i].feature.tolist() for i in order[6:8]]
    kept, _, _ = oracles.consensus(oracles.matrix(gb, ga), config.e_consensus)
    tau = oracles.threshold(kept, config.alpha, config.e_threshold)
    assert abs(model.tau_c - tau) < 1e-12
    assert [p.sample_id for p in probes] == [samples[i].sample_id for i in order[8:10]]


def test_enroll_seed_determinism():
    samples = genuine(24, dim=64, seed=8)
    cfg = EnrollConfig(split=SplitSpec(14, 5, 5), seed=2024)
    assert enroll(samples, cfg)[0].tau_c == enroll(samples, cfg)[0].tau_c


def _model(refs, agg=Aggregation.MEAN):
    return ThresholdModel(0.5, None, ModelParams(1, 0.1, 0.1, agg), refs)


@pytest.mark.parametrize("agg", list(Aggregation))
def test_score_identity_and_orthogonal(agg):
    refs = [[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]]
    assert score_probe([0.5, 1.0, 0.0], _model(refs, agg)) == pytest.approx(1.0, abs=1e-12)
    assert score_probe([0.0, 0.0, 3.0], _model(refs, agg)) == 0.0


def test_score_mean_example():
    s = score_probe([1.0, 1.0], _model([[1.0, 0.0], [0.0, 1.0]]))
    assert s == pytest.approx(oracles.mean_score([1, 1], [[1, 0], [0, 1]]), abs=1e-15)
    assert s == pytest.approx(0.70710678, abs=1e-8)


def test_score_max_min():
    refs = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    assert score_probe([1.0, 0.0], _model(refs, Aggregation.MAX)) == 1.0
    assert score_probe([1.0, 0.0], _model(refs, Aggregation.MIN)) == 0.0


def test_classify():
    tau = 1 - E45
    assert classify(1.0, tau) == 1
    assert classify(0.0, tau) == 0
    assert classify(tau, tau) == 1
    assert classify(np.nextafter(tau, 0), tau) == 0


def test_config_validation():
    with pytest.raises(InvalidParameter):
        EnrollConfig(e_consensus=0)
    with pytest.raises(InvalidParameter):
        EnrollConfig(e_threshold=-1)
    with pytest.raises(InvalidParameter):
        EnrollConfig(alpha=-0.5)
    assert EnrollConfig(aggregation="max").aggregation is Aggregation.MAX
