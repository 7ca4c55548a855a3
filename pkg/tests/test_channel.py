from collections import Counter

import numpy as np
import pytest

from idsrecon.channel import (
    DATASET_PARAMS,
    ChannelParams,
    random_source,
    sample_cluster,
    trace_seeds,
    transmit,
)
from idsrecon.core import DNA, Alphabet
from idsrecon.errors import ContractError
from idsrecon.oracle import trace_likelihood


def test_noiseless_identity():
    assert DNA.decode(transmit(DNA.encode("ACGT"), ChannelParams(), seed=3)) == "ACGT"


def test_substitution_only_keeps_length(rng):
    x = random_source(200, rng)
    y = transmit(x, ChannelParams(0.0, 0.0, 0.3), rng)
    assert y.size == 200
    assert np.all((y == x) | (y != x))
    assert 0 < np.sum(y != x) < 200


def test_substitutions_never_copy(rng):
    x = np.zeros(5000, dtype=np.int64)
    log = []
    y = transmit(x, ChannelParams(0.0, 0.0, 0.5), rng, DNA, log)
    subs = np.array([t == "S" for t in log])
    assert np.all(y[subs] != 0)
    assert set(np.unique(y[subs])) == {1, 2, 3}


@pytest.mark.parametrize("bad", [(-0.1, 0, 0), (1.0, 0, 0), (0.5, 0.3, 0.2), (0.4, 0.4, 0.3)])
def test_params_validated(bad):
    with pytest.raises(ContractError):
        ChannelParams(*bad)


def test_dataset_params():
    assert DATASET_PARAMS.pi_c == pytest.approx(0.941)


def test_mean_output_length():
    """E|y| = N (1 - pi_d) / (1 - pi_i) since insertions are geometric per input symbol."""
    p = ChannelParams(0.1, 0.05, 0.02)
    N, trials = 50, 4000
    rng = np.random.default_rng(8)
    x = random_source(N, rng)
    lengths = np.array([transmit(x, p, rng).size for _ in range(trials)])
    expected = N * (1 - p.pi_d) / (1 - p.pi_i)
    sigma = lengths.std(ddof=1) / np.sqrt(trials)
    assert abs(lengths.mean() - expected) < 3 * sigma


def test_event_log_consistent_with_output(rng):
    x = random_source(300, rng)
    log = []
    y = transmit(x, ChannelParams(0.05, 0.05, 0.05), rng, DNA, log)
    c = Counter(log)
    assert c["C"] + c["S"] + c["D"] == x.size
    assert y.size == c["I"] + c["C"] + c["S"]


def test_cluster_determinism_and_K_independence():
    x = DNA.encode("ACGTACGTAC")
    p = ChannelParams.uniform(0.1)
    a = sample_cluster(x, 4, p, seed=99)
    b = sample_cluster(x, 4, p, seed=99)
    c = sample_cluster(x, 6, p, seed=99)
    for k in range(4):
        assert np.array_equal(a.traces[k], b.traces[k])
        assert np.array_equal(a.traces[k], c.traces[k])
    assert np.array_equal(a.reference, x)


def test_single_trace_cluster_is_transmit():
    x = DNA.encode("ACGTTGCA")
    p = ChannelParams.uniform(0.1)
    cl = sample_cluster(x, 1, p, seed=5)
    direct = transmit(x, p, np.random.default_rng(trace_seeds(5, 1)[0]))
    assert np.array_equal(cl.traces[0], direct)


def test_trace_lengths_uncorrelated_within_cluster():
    p = ChannelParams.uniform(0.08)
    rng = np.random.default_rng(4)
    x = random_source(40, rng)
    pairs = np.array([[t.size for t in sample_cluster(x, 2, p, seed=s).traces] for s in range(3000)], dtype=float)
    r = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
    assert abs(r) < 3 / np.sqrt(len(pairs))


@pytest.mark.slow
def test_output_frequencies_match_likelihood():
    """Monte-Carlo frequency of every short trace agrees with the exact likelihood."""
    alphabet = Alphabet.of_size(2)
    p = ChannelParams(0.1, 0.1, 0.1)
    x = np.array([0, 1, 1])
    rng = np.random.default_rng(21)
    n = 10**6
    counts = Counter(alphabet.decode(transmit(x, p, rng, alphabet)) for _ in range(n))
    for text, c in counts.most_common(12):
        prob = trace_likelihood(x, alphabet.encode(text), p, q=2)
        sigma = np.sqrt(n * prob * (1 - prob))
        assert abs(c - n * prob) < 3 * sigma + 1, text
