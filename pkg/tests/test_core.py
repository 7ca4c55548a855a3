import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idsrecon.core import (
    DNA,
    Alphabet,
    Cluster,
    argmax_symbol,
    as_sequence,
    floor_and_normalize,
    is_normalized,
    map_sequence,
    normalize,
    tv_distance,
)
from idsrecon.errors import ContractError, ZeroMassError

positive_vectors = st.lists(st.floats(0.01, 100.0), min_size=2, max_size=6).map(np.array)


def dist(size):
    return st.lists(st.floats(0.0, 1.0), min_size=size, max_size=size).filter(lambda v: sum(v) > 1e-3).map(
        lambda v: normalize(np.array(v))
    )


class TestNormalize:
    def test_uniform(self):
        assert np.allclose(normalize([1, 1, 1, 1]), [0.25] * 4)

    def test_delta_preserved(self):
        assert np.array_equal(normalize([2, 0, 0, 0]), [1.0, 0, 0, 0])

    def test_already_normalized(self):
        d = np.array([0.3, 0.1, 0.1, 0.5])
        assert np.allclose(normalize(d), d, atol=1e-15)

    def test_zero_mass(self):
        with pytest.raises(ZeroMassError):
            normalize([0, 0, 0, 0])

    def test_rows_of_a_table(self):
        t = normalize(np.array([[1.0, 3.0], [2.0, 2.0]]))
        assert np.allclose(t, [[0.25, 0.75], [0.5, 0.5]])

    @given(positive_vectors, st.floats(1e-3, 1e3))
    def test_idempotent_and_scale_free(self, v, c):
        n = normalize(v)
        assert np.allclose(normalize(n), n, atol=1e-12)
        assert np.allclose(normalize(c * v), n, atol=1e-12)
        assert is_normalized(n)


class TestTV:
    def test_examples(self):
        assert tv_distance([1, 0, 0, 0], [1, 0, 0, 0]) == 0
        assert tv_distance([1, 0, 0, 0], [0, 1, 0, 0]) == 1
        # half the sum of four absolute differences of 0.25 each
        assert tv_distance([0.5, 0.5, 0, 0], [0.25] * 4) == pytest.approx(0.5)

    def test_rejects_unnormalized(self):
        with pytest.raises(ContractError):
            tv_distance([1, 1, 0, 0], [0.25] * 4)

    @settings(max_examples=60)
    @given(dist(4), dist(4), dist(4))
    def test_metric(self, a, b, c):
        assert tv_distance(a, b) == pytest.approx(tv_distance(b, a))
        assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-12
        assert 0.0 <= tv_distance(a, b) <= 1.0 + 1e-12


class TestArgmax:
    @pytest.mark.parametrize(
        "d, expected",
        [((0.1, 0.7, 0.1, 0.1), 1), ((0.25, 0.25, 0.25, 0.25), 0), ((0.4, 0.4, 0.1, 0.1), 0)],
    )
    def test_examples(self, d, expected):
        assert argmax_symbol(d) == expected

    @given(positive_vectors, st.floats(1e-3, 1e3))
    def test_scaling_invariance(self, v, c):
        assert argmax_symbol(normalize(c * v)) == argmax_symbol(v)

    def test_map_sequence_breaks_ties_low(self):
        table = np.array([[0.5, 0.5], [0.2, 0.8]])
        assert list(map_sequence(table)) == [0, 1]


def test_alphabet_roundtrip():
    x = DNA.encode("GATTACA")
    assert DNA.decode(x) == "GATTACA"
    assert not DNA.is_valid("GATN")
    with pytest.raises(ContractError):
        DNA.encode("GATN")


def test_alphabet_of_size():
    assert "".join(Alphabet.of_size(2).symbols) == "AC"
    with pytest.raises(ContractError):
        Alphabet.of_size(1)


def test_as_sequence_bounds():
    assert list(as_sequence([0, 1], Alphabet.of_size(2))) == [0, 1]
    with pytest.raises(ContractError):
        as_sequence([0, 2], Alphabet.of_size(2))
    with pytest.raises(ContractError):
        as_sequence([], DNA, allow_empty=False)


def test_cluster_needs_a_trace():
    with pytest.raises(ContractError):
        Cluster([], None)
    cl = Cluster([DNA.encode("AC"), DNA.encode("AG")], DNA.encode("AC"))
    assert cl.K == 2
    assert DNA.decode(cl.permuted([1, 0]).traces[0]) == "AG"


def test_floor_keeps_support():
    d = floor_and_normalize(np.array([1.0, 0.0]), 1e-30)
    assert d[1] > 0 and np.isclose(d.sum(), 1.0)
