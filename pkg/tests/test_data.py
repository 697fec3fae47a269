import numpy as np
import pytest

from evalbars.data import BinaryEvalVector, ClusteredEvalData, ConfusionCounts, PairedEvalData
from evalbars.errors import DomainError
from evalbars.interval import Interval, PosteriorSamples, effective_sample_size, empirical_quantiles


def test_binary_vector_basics():
    y = BinaryEvalVector([1, 0, 1, 1])
    assert (y.N, y.S, y.mean) == (4, 3, 0.75)
    assert y == BinaryEvalVector.from_counts(3, 4) or sorted(y.outcomes) == sorted(BinaryEvalVector.from_counts(3, 4).outcomes)
    with pytest.raises(ValueError):
        y.outcomes[0] = 0


@pytest.mark.parametrize("bad", [[0, 2], [0.5], [[0, 1]]])
def test_binary_vector_rejects(bad):
    with pytest.raises(DomainError):
        BinaryEvalVector(bad)


def test_paired_counts_consistent():
    d = PairedEvalData.from_counts(4, 3, 1, 2)
    assert d.counts == (4, 3, 1, 2)
    assert d.N == 10
    assert sorted(d.differences.tolist()) == [-1] + [0] * 6 + [1] * 3
    with pytest.raises(DomainError):
        PairedEvalData([1, 0], [1])


def test_clustered_validation_and_grouping():
    c = ClusteredEvalData.from_pairs([(4, 3), (2, 0), (4, 3)])
    assert (c.T, c.N, c.S) == (3, 10, 6)
    n, y, m = c.grouped()
    assert list(zip(n, y, m)) == [(2, 0, 1), (4, 3, 2)]
    assert c.flatten().S == 6
    for pairs in ([(3, 4)], [(0, 0)], [], [(2, -1)]):
        with pytest.raises(DomainError):
            ClusteredEvalData.from_pairs(pairs)


def test_confusion_validation():
    c = ConfusionCounts(1, 2, 3, 4)
    assert c.N == 10 and c.as_array().tolist() == [1, 2, 3, 4]
    with pytest.raises(DomainError):
        ConfusionCounts(-1, 0, 0, 0)
    with pytest.raises(DomainError):
        ConfusionCounts(1.5, 0, 0, 0)


def test_interval_invariants():
    iv = Interval(-0.1, 0.4, 0.95, "clt")
    assert iv.width == pytest.approx(0.5)
    c = iv.clamped()
    assert (c.lower, c.upper, c.diagnostics["clamped"]) == (0.0, 0.4, True)
    assert Interval(0.1, 0.4, 0.95, "x").clamped().diagnostics["clamped"] is False
    with pytest.raises(DomainError):
        Interval(0.5, 0.4, 0.95, "x")
    with pytest.raises(DomainError):
        Interval(0.1, 0.4, 1.0, "x")


def test_posterior_samples_invariants():
    s = PosteriorSamples(np.arange(4.0), np.full(4, 0.25))
    assert s.ess == pytest.approx(4.0)
    assert s.mean() == pytest.approx(1.5)
    with pytest.raises(DomainError):
        PosteriorSamples(np.arange(3.0), np.array([0.5, 0.5, 0.5]))
    assert effective_sample_size(np.array([1.0, 0, 0])) == 1.0


def test_empirical_quantiles_with_infinities():
    q = empirical_quantiles(np.array([1.0, 2.0, np.inf, np.inf]), [0.0, 0.5, 1.0])
    assert q[0] == 1.0 and np.isinf(q[2])
    np.testing.assert_allclose(empirical_quantiles(np.arange(11.0), [0.25, 0.33]), np.quantile(np.arange(11.0), [0.25, 0.33]))
