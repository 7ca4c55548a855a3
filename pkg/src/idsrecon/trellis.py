"""Pointer-based trellis for one trace of the IDS channel.

Every input position ``t`` owns a four-stage section::

    A  (i = 4t-4)   pointer p                 before x_t is imported
    B  (i = 4t-3)   (pointer, x_t)            x_t buffered, insertions move p up
    C  (i = 4t-2)   (pointer, x_t)            after delete / transmit / substitute
    D  (i = 4t-1)   pointer                   buffer flushed

The pointer counts how many trace symbols have been emitted so far.  Stage D
of section t and stage A of section t+1 describe the same variable and are
joined by identity ("carry") edges.

Only a drift window of pointers is kept at each stage: after ``c`` input
symbols have been consumed the pointer must lie in ``[c - delta, c + delta]``.
``delta=None`` keeps every pointer in ``[0, M]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import ChannelParams
from .core import DNA, Alphabet, as_sequence
from .errors import ContractError, UnreachableTerminal

STAGE_KINDS = "ABCD"
BRANCH_KINDS = ("import", "insert", "delete", "trans_or_sub", "flush")


def default_delta(N: int, params: ChannelParams) -> Optional[int]:
    """Drift bound used when the caller does not pick one.

    Returns ``None`` (unrestricted) when the heuristic bound would not prune
    anything anyway, i.e. when it reaches ``N``.
    """
    d = max(8, math.ceil(4.0 * math.sqrt(N * (params.pi_i + params.pi_d))))
    return None if d >= N else d


@dataclass(frozen=True)
class StageIndex:
    i: int

    @property
    def t(self) -> int:
        return self.i // 4 + 1

    @property
    def kind(self) -> str:
        return STAGE_KINDS[self.i % 4]


@dataclass(frozen=True, order=True)
class TrellisState:
    pointer: int
    symbol: Optional[int] = None


@dataclass(frozen=True)
class Branch:
    from_stage: int
    to_stage: int
    from_state: TrellisState
    to_state: TrellisState
    emission: Optional[int]
    kind: str
    transition_prob: float


@dataclass(frozen=True, eq=False)
class TrellisSpec:
    N: int
    y: np.ndarray
    alphabet: Alphabet
    params: ChannelParams
    delta: Optional[int]
    renormalize_edges: bool = True
    # pointer window after c consumed symbols, c = 0..N
    d_lo: np.ndarray = field(repr=False, default=None)
    d_hi: np.ndarray = field(repr=False, default=None)
    # top of the insertion chain in section t (index t-1)
    b_hi: np.ndarray = field(repr=False, default=None)

    @property
    def M(self) -> int:
        return int(self.y.size)

    @property
    def q(self) -> int:
        return len(self.alphabet)

    @property
    def n_stages(self) -> int:
        return 4 * self.N

    def weights(self) -> tuple[float, float, float, float]:
        """(insert, delete, match, mismatch) branch weights, emission included."""
        p = self.params
        q = self.q
        return (p.pi_i / q, p.pi_d, p.pi_c, p.pi_s / (q - 1))

    def edge_scale(self, t: int, p: int) -> float:
        """Renormalization of delete/transmit mass at a window-truncated B state."""
        if self.renormalize_edges and p == self.b_hi[t - 1] < self.M and self.params.pi_i > 0:
            return 1.0 / (1.0 - self.params.pi_i)
        return 1.0


def build_spec(
    N: int,
    trace,
    delta: Optional[int],
    alphabet: Alphabet = DNA,
    params: ChannelParams = ChannelParams(),
    renormalize_edges: bool = True,
) -> TrellisSpec:
    y = as_sequence(trace, alphabet)
    M = int(y.size)
    if N < 1:
        raise ContractError("N must be positive")
    if delta is not None:
        if delta < 0:
            raise ContractError("delta must be non-negative")
        if delta >= N:
            delta = None
    if delta is None:
        reach = M + N
    else:
        reach = delta
    if abs(M - N) > reach:
        raise UnreachableTerminal(f"trace length {M} unreachable from N={N} with delta={delta}")
    c = np.arange(N + 1)
    d_lo = np.maximum(0, c - reach)
    d_hi = np.minimum(M, c + reach)
    d_lo[0] = d_hi[0] = 0
    b_hi = np.minimum(M, c[:-1] + reach)
    # pointers after a transmit cannot exceed the insertion ceiling plus one
    d_hi[1:] = np.minimum(d_hi[1:], b_hi + 1)
    return TrellisSpec(N, y, alphabet, params, delta, renormalize_edges, d_lo, d_hi, b_hi)


def _window(spec: TrellisSpec, i: int) -> tuple[int, int]:
    s = StageIndex(i)
    t = s.t
    if s.kind == "A":
        return int(spec.d_lo[t - 1]), int(spec.d_hi[t - 1])
    if s.kind == "B":
        return int(spec.d_lo[t - 1]), int(spec.b_hi[t - 1])
    return int(spec.d_lo[t]), int(spec.d_hi[t])


def states_at(spec: TrellisSpec, i: int) -> list[TrellisState]:
    if not 0 <= i < spec.n_stages:
        raise ContractError(f"stage {i} outside [0, {spec.n_stages - 1}]")
    lo, hi = _window(spec, i)
    if StageIndex(i).kind in "BC":
        return [TrellisState(p, x) for x in range(spec.q) for p in range(lo, hi + 1)]
    return [TrellisState(p) for p in range(lo, hi + 1)]


def branches_into(spec: TrellisSpec, i: int) -> list[Branch]:
    """All branches terminating at stage ``i``, including within-stage insertions.

    Parallel branches are listed separately, one per emitted symbol, so
    insertions and transmissions appear ``|alphabet|`` times per state pair.
    """
    if not 0 <= i < spec.n_stages:
        raise ContractError(f"stage {i} outside [0, {spec.n_stages - 1}]")
    s = StageIndex(i)
    t, q = s.t, spec.q
    p_i, p_d, p_s = spec.params.pi_i, spec.params.pi_d, spec.params.pi_s
    out: list[Branch] = []
    if s.kind == "A":
        if t > 1:
            lo, hi = _window(spec, i)
            for p in range(lo, hi + 1):
                st = TrellisState(p)
                out.append(Branch(i - 1, i, st, st, None, "carry", 1.0))
        return out
    if s.kind == "B":
        a_lo, a_hi = _window(spec, i - 1)
        lo, hi = _window(spec, i)
        for x in range(q):
            for p in range(a_lo, a_hi + 1):
                out.append(Branch(i - 1, i, TrellisState(p), TrellisState(p, x), None, "import", 1.0))
            for p in range(lo, hi):
                for e in range(q):
                    out.append(Branch(i, i, TrellisState(p, x), TrellisState(p + 1, x), e, "insert", p_i))
        return out
    if s.kind == "C":
        b_lo, b_hi = _window(spec, i - 1)
        lo, hi = _window(spec, i)
        for x in range(q):
            for p in range(b_lo, b_hi + 1):
                scale = spec.edge_scale(t, p)
                if lo <= p <= hi:
                    out.append(Branch(i - 1, i, TrellisState(p, x), TrellisState(p, x), None, "delete", p_d * scale))
                if lo <= p + 1 <= hi:
                    for e in range(q):
                        prob = spec.params.pi_c if e == x else p_s / (q - 1)
                        out.append(Branch(i - 1, i, TrellisState(p, x), TrellisState(p + 1, x), e,
                                          "trans_or_sub", prob * scale))
        return out
    lo, hi = _window(spec, i)
    for x in range(q):
        for p in range(lo, hi + 1):
            out.append(Branch(i - 1, i, TrellisState(p, x), TrellisState(p), None, "flush", 1.0))
    return out


def edge_count(spec: TrellisSpec) -> int:
    """Number of supported state-pair transitions in the whole trellis.

    Parallel emission branches between the same state pair count once, since
    the observed symbol selects exactly one of them.  This is the number of
    branch metrics one forward (or backward) sweep evaluates.
    """
    q = spec.q
    total = 0
    for t in range(1, spec.N + 1):
        a_lo, a_hi = int(spec.d_lo[t - 1]), int(spec.d_hi[t - 1])
        bh = int(spec.b_hi[t - 1])
        c_lo, c_hi = int(spec.d_lo[t]), int(spec.d_hi[t])
        n_a = a_hi - a_lo + 1
        n_ins = max(0, bh - a_lo)
        n_del = max(0, min(bh, c_hi) - max(a_lo, c_lo) + 1)
        n_tr = max(0, min(bh, c_hi - 1) - max(a_lo, c_lo - 1) + 1)
        n_c = c_hi - c_lo + 1
        total += q * (n_a + n_ins + n_del + n_tr + n_c)
    return total


def export_section(spec: TrellisSpec, t: int) -> str:
    """Line-oriented dump of section ``t``: ``from emission to prob`` per branch."""
    if not 1 <= t <= spec.N:
        raise ContractError(f"section {t} outside [1, {spec.N}]")
    lines = []
    syms = spec.alphabet.symbols

    def fmt(st: TrellisState) -> str:
        return f"{st.pointer}" if st.symbol is None else f"{st.pointer}:{syms[st.symbol]}"

    for i in range(4 * t - 3, 4 * t):
        for b in branches_into(spec, i):
            em = "-" if b.emission is None else syms[b.emission]
            lines.append(f"{b.kind} {b.from_stage}/{fmt(b.from_state)} {em} "
                         f"{b.to_stage}/{fmt(b.to_state)} {b.transition_prob:.6g}")
    return "\n".join(lines) + "\n"
