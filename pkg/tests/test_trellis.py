from pathlib import Path

import numpy as np
import pytest
from helpers import one_hot, path_sum

from idsrecon.channel import DATASET_PARAMS, ChannelParams, random_source, transmit
from idsrecon.core import DNA, Alphabet
from idsrecon.errors import ContractError, UnreachableTerminal
from idsrecon.oracle import enumerate_all, trace_likelihood
from idsrecon.trellis import (
    BRANCH_KINDS,
    StageIndex,
    TrellisState,
    branches_into,
    build_spec,
    default_delta,
    edge_count,
    export_section,
    states_at,
)

GOLDEN = Path(__file__).parent / "data" / "section_n3_m3_delta1_t2.txt"


def test_stage_index_map():
    assert [(StageIndex(i).t, StageIndex(i).kind) for i in range(6)] == [
        (1, "A"), (1, "B"), (1, "C"), (1, "D"), (2, "A"), (2, "B")]


def test_state_bound_unpruned():
    spec = build_spec(4, DNA.encode("ACG"), None, DNA, DATASET_PARAMS)
    for i in range(spec.n_stages):
        bound = (spec.M + 1) * (spec.q if StageIndex(i).kind in "BC" else 1)
        assert len(states_at(spec, i)) <= bound
    # stage C of the last section holds every pointer up to M for every symbol
    assert len(states_at(spec, 4 * 4 - 2)) <= 16


def test_boundaries():
    spec = build_spec(5, DNA.encode("ACGTAC"), 2, DNA, DATASET_PARAMS)
    assert states_at(spec, 0) == [TrellisState(0)]
    assert TrellisState(spec.M) in states_at(spec, spec.n_stages - 1)


def test_interior_window_width():
    N = 30
    rng = np.random.default_rng(2)
    y = transmit(random_source(N, rng), DATASET_PARAMS, rng)
    spec = build_spec(N, y, 3, DNA, DATASET_PARAMS)
    for i in range(spec.n_stages):
        assert len(states_at(spec, i)) <= (2 * 3 + 1) * 4


def test_zero_drift():
    spec = build_spec(4, DNA.encode("ACGT"), 0, DNA, ChannelParams(0, 0, 0.1))
    kinds = {b.kind for i in range(spec.n_stages) for b in branches_into(spec, i)}
    assert "insert" not in kinds and "delete" not in kinds
    with pytest.raises(UnreachableTerminal):
        build_spec(4, DNA.encode("ACG"), 0, DNA, ChannelParams(0, 0, 0.1))


def test_delta_at_least_n_is_unrestricted():
    spec = build_spec(4, DNA.encode("AC"), 10, DNA, DATASET_PARAMS)
    assert spec.delta is None


def test_reject_bad_inputs():
    with pytest.raises(ContractError):
        build_spec(0, DNA.encode("A"), None)
    with pytest.raises(ContractError):
        build_spec(3, DNA.encode("A"), -1)
    with pytest.raises(ContractError):
        states_at(build_spec(2, DNA.encode("AC"), None), 8)


def test_default_delta():
    assert default_delta(110, DATASET_PARAMS) == 9
    assert default_delta(8, DATASET_PARAMS) is None


def test_branch_classes():
    spec = build_spec(3, DNA.encode("ACG"), None, DNA, DATASET_PARAMS)
    kinds = {b.kind for i in range(4, 8) for b in branches_into(spec, i)}
    assert set(BRANCH_KINDS) <= kinds
    assert kinds - set(BRANCH_KINDS) == {"carry"}


def test_substitution_branch_weight():
    spec = build_spec(3, DNA.encode("ACG"), None, DNA, DATASET_PARAMS)
    subs = [b for b in branches_into(spec, 2) if b.kind == "trans_or_sub" and b.emission != b.to_state.symbol]
    assert subs and all(b.transition_prob == pytest.approx(0.022 / 3) for b in subs)


def test_acyclic_stage_order():
    spec = build_spec(3, DNA.encode("ACGA"), None, DNA, DATASET_PARAMS)
    for i in range(spec.n_stages):
        for b in branches_into(spec, i):
            assert b.to_stage == i
            assert b.from_stage == i - 1 or (b.from_stage == i and b.to_state.pointer == b.from_state.pointer + 1)


def test_edge_count_matches_listing():
    """edge_count counts distinct state pairs; listings repeat parallel emissions."""
    spec = build_spec(3, DNA.encode("ACG"), None, DNA, DATASET_PARAMS)
    expected = 0
    for i in range(1, spec.n_stages):
        if StageIndex(i).kind == "A":
            continue  # carries are identities, not evaluated
        expected += len({(b.from_state, b.to_state) for b in branches_into(spec, i)})
    assert edge_count(spec) == expected


def test_outgoing_mass_is_one():
    """Delete + transmit (all emissions) + insert mass leaving each B state sums to one."""
    p = ChannelParams(0.1, 0.07, 0.05)
    spec = build_spec(6, DNA.encode("ACGTAC"), 2, DNA, p)
    for t in range(1, spec.N + 1):
        out = {}
        for i in (4 * t - 3, 4 * t - 2):
            for b in branches_into(spec, i):
                if b.kind in ("insert", "delete", "trans_or_sub"):
                    w = b.transition_prob / (spec.q if b.kind == "insert" else 1)
                    out[b.from_state] = out.get(b.from_state, 0.0) + w
        for st, mass in out.items():
            c_lo, c_hi = int(spec.d_lo[t]), int(spec.d_hi[t])
            if c_lo <= st.pointer and st.pointer + 1 <= c_hi:
                assert mass == pytest.approx(1.0), (t, st)


def test_paths_reproduce_channel_likelihood():
    """Sum over paths with a one-hot prior equals Pr(y | x) from the edit lattice."""
    alphabet = Alphabet.of_size(2)
    p = ChannelParams(0.1, 0.15, 0.05)
    for N in (1, 2, 3):
        for M in range(0, 5):
            for y in enumerate_all(M, 2) if M else [np.array([], dtype=np.int64)]:
                spec = build_spec(N, y, None, alphabet, p)
                for x in enumerate_all(N, 2):
                    got = path_sum(spec, one_hot(x, 2))
                    assert got == pytest.approx(trace_likelihood(x, y, p, q=2), rel=1e-12, abs=1e-300)


def test_golden_section_export():
    spec = build_spec(3, DNA.encode("ACG"), 1, DNA, DATASET_PARAMS)
    assert export_section(spec, 2) == GOLDEN.read_text()
