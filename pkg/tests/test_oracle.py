import numpy as np
import pytest

from idsrecon.channel import ChannelParams, random_source, sample_cluster
from idsrecon.core import DNA, Alphabet, Cluster
from idsrecon.errors import InstanceTooLarge
from idsrecon.oracle import (
    enumerate_all,
    enumerate_app,
    enumerate_map_sequence,
    joint_edge_count,
    joint_trellis_app,
    trace_likelihood,
)
from idsrecon.trellis import build_spec, edge_count


def test_noiseless_likelihood():
    x = DNA.encode("ACGT")
    assert trace_likelihood(x, x, ChannelParams()) == 1.0
    assert trace_likelihood(x, DNA.encode("ACGA"), ChannelParams()) == 0.0
    assert trace_likelihood(x, DNA.encode("ACG"), ChannelParams()) == 0.0


def test_likelihood_sums_to_one_over_outputs():
    """Pr(y | x) is a distribution over all outputs (truncated at a generous length)."""
    p = ChannelParams(0.05, 0.1, 0.1)
    x = np.array([0, 1, 1])
    total = sum(trace_likelihood(x, y, p, q=2) for M in range(0, 12)
                for y in (enumerate_all(M, 2) if M else [np.array([], dtype=np.int64)]))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_hand_computed_single_symbol():
    """x = (A), y = (A): copy, or insert A then delete, etc."""
    p = ChannelParams(0.1, 0.2, 0.3)
    q = 4
    # zero insertions then copy, or one insertion of A then delete
    expected = p.pi_c + (p.pi_i / q) * p.pi_d
    assert trace_likelihood([0], [0], p, q) == pytest.approx(expected)


def test_identical_noiseless_traces_give_delta():
    x = DNA.encode("GATC")
    cl = Cluster([x, x.copy()], x)
    app = enumerate_app(cl, ChannelParams(), 4)
    assert np.array_equal(app.argmax(1), x)
    assert np.allclose(app.max(1), 1.0)


def test_permutation_is_bit_identical():
    cl = sample_cluster(DNA.encode("ACGTA"), 3, ChannelParams.uniform(0.1), seed=3)
    a = enumerate_app(cl, ChannelParams.uniform(0.1), 5)
    b = enumerate_app(cl.permuted([2, 0, 1]), ChannelParams.uniform(0.1), 5)
    assert np.array_equal(a, b)


def test_enumeration_budget():
    cl = Cluster([DNA.encode("ACGT" * 3)], None)
    with pytest.raises(InstanceTooLarge):
        enumerate_app(cl, ChannelParams.uniform(0.01), 12)


@pytest.mark.parametrize("K", [1, 2, 3])
def test_joint_trellis_matches_enumeration(K):
    alphabet = Alphabet.of_size(2)
    p = ChannelParams.uniform(0.08)
    rng = np.random.default_rng(K)
    for _ in range(8):
        x = random_source(5, rng, alphabet)
        cl = sample_cluster(x, K, p, int(rng.integers(1 << 30)), alphabet)
        exact = enumerate_app(cl, p, 5)
        joint = joint_trellis_app(cl, p, None, 5)
        assert np.abs(joint - exact).max() < 1e-9


def test_joint_trellis_dna():
    p = ChannelParams(0.017, 0.02, 0.022)
    cl = sample_cluster(DNA.encode("ACGTTG"), 2, p, seed=11)
    assert np.abs(joint_trellis_app(cl, p, None, 6) - enumerate_app(cl, p, 6)).max() < 1e-9


def test_joint_trellis_refuses_large_K():
    cl = sample_cluster(DNA.encode("ACGT"), 4, ChannelParams.uniform(0.01), seed=1)
    with pytest.raises(InstanceTooLarge):
        joint_trellis_app(cl, ChannelParams.uniform(0.01), None, 4)


def test_joint_edges_single_trace_equal_trellis_edges():
    p = ChannelParams(0.017, 0.02, 0.022)
    cl = sample_cluster(DNA.encode("ACGTACGTACGT"), 1, p, seed=2)
    assert joint_edge_count(cl, p, 12, 3) == edge_count(build_spec(12, cl.traces[0], 3, DNA, p))


def test_block_map_is_a_valid_sequence():
    p = ChannelParams.uniform(0.05)
    cl = sample_cluster(DNA.encode("ACGTA"), 2, p, seed=7)
    seq = enumerate_map_sequence(cl, p, 5)
    assert seq.shape == (5,) and seq.max() < 4
