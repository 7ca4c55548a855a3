"""Insertion/deletion/substitution channel sampler."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DNA, Alphabet, Cluster, as_sequence
from .errors import ContractError

INSERT, DELETE, SUBSTITUTE, CORRECT = "I", "D", "S", "C"


@dataclass(frozen=True)
class ChannelParams:
    pi_i: float = 0.0
    pi_d: float = 0.0
    pi_s: float = 0.0

    def __post_init__(self):
        for name in ("pi_i", "pi_d", "pi_s"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ContractError(f"{name}={v} must lie in [0, 1)")
        if self.pi_i + self.pi_d + self.pi_s >= 1.0:
            raise ContractError("pi_i + pi_d + pi_s must be < 1")

    @property
    def pi_c(self) -> float:
        """Probability of a correct transmission."""
        return 1.0 - self.pi_i - self.pi_d - self.pi_s

    @classmethod
    def uniform(cls, rate: float) -> "ChannelParams":
        return cls(rate, rate, rate)


# Error rates estimated for the clustered nanopore read set (N=110).
DATASET_PARAMS = ChannelParams(0.017, 0.02, 0.022)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def transmit(
    x,
    params: ChannelParams,
    seed=None,
    alphabet: Alphabet = DNA,
    event_log: Optional[list] = None,
) -> np.ndarray:
    """Send ``x`` through one IDS channel and return the trace.

    Each on-deck input symbol first suffers a Geometric(pi_i) number of
    uniform insertions, then is deleted, substituted (uniform over the other
    symbols) or copied.  Nothing is inserted after the last input symbol.
    When ``event_log`` is a list, one tag from ``I/D/S/C`` is appended per
    channel event.
    """
    x = as_sequence(x, alphabet)
    rng = _rng(seed)
    q = len(alphabet)
    cut_i = params.pi_i
    cut_d = cut_i + params.pi_d
    cut_s = cut_d + params.pi_s
    out: list[int] = []
    for sym in x:
        while True:
            u = rng.random()
            if u < cut_i:
                out.append(int(rng.integers(q)))
                if event_log is not None:
                    event_log.append(INSERT)
                continue
            if u < cut_d:
                tag = DELETE
            elif u < cut_s:
                # uniform over the q-1 other symbols
                other = int(rng.integers(q - 1))
                out.append(other + (other >= sym))
                tag = SUBSTITUTE
            else:
                out.append(int(sym))
                tag = CORRECT
            if event_log is not None:
                event_log.append(tag)
            break
    return np.array(out, dtype=np.int64)


def trace_seeds(seed, K: int) -> list[np.random.SeedSequence]:
    """Per-trace seeds; trace k's seed does not depend on K."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    # spawn() advances the parent's counter, so rebuild it for repeatability
    ss = np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key)
    return ss.spawn(K)


def sample_cluster(
    x,
    K: int,
    params: ChannelParams,
    seed=None,
    alphabet: Alphabet = DNA,
) -> Cluster:
    if K < 1:
        raise ContractError("K must be at least 1")
    x = as_sequence(x, alphabet, allow_empty=False)
    traces = [transmit(x, params, np.random.default_rng(s), alphabet) for s in trace_seeds(seed, K)]
    return Cluster(traces, reference=x, alphabet=alphabet)


def random_source(N: int, rng, alphabet: Alphabet = DNA) -> np.ndarray:
    return _rng(rng).integers(len(alphabet), size=N).astype(np.int64)
