"""Forward-backward decoding of one trace with per-position symbol priors.

Metrics are kept in the linear domain.  Each stage is divided by its maximum
after it is computed and the log of that factor is recorded, so magnitudes
stay in ``(0, 1]`` while the true likelihood remains recoverable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .channel import ChannelParams
from .core import DNA, Alphabet, as_sequence, normalize, uniform_table
from .errors import ContractError, DecodeCollapse, UnreachableTerminal
from .trellis import Branch, TrellisSpec, build_spec, default_delta, edge_count


@dataclass
class MetricMatrix:
    """Scaled forward or backward metrics of one decode.

    ``D[c, p]`` holds the pointer stage after ``c`` consumed symbols (stage D
    of section c, equivalently stage A of section c+1).  ``B[t-1, x, p]`` and
    ``C[t-1, x, p]`` hold the buffered stages of section t (C only for the
    forward direction).  ``log_scale[c]`` is the log of the factor removed
    from stage-D row ``c``.
    """

    D: np.ndarray
    B: np.ndarray
    log_scale: np.ndarray
    C: Optional[np.ndarray] = None

    def log_offset(self, c: int, direction: str) -> float:
        """Log factor that restores the true magnitude of D-row ``c``."""
        if direction == "forward":
            return float(self.log_scale[: c + 1].sum())
        return float(self.log_scale[c:].sum())


@dataclass
class StateAPP:
    """Per-stage state posteriors, keyed like :class:`MetricMatrix`.

    ``D`` rows sum to one, as do ``C[t]`` and ``B_entry[t]`` for every t.
    ``B_entry`` is the buffered state right after import (before insertions),
    which every path crosses exactly once.
    """

    D: np.ndarray
    B_entry: np.ndarray
    C: np.ndarray


@dataclass
class TraceDecode:
    app: np.ndarray  # (N, q) symbol posteriors read at stage C
    loglik: float  # log Pr(trace | priors)
    gamma_evals: int
    delta: Optional[int]


def _kernel_args(spec: TrellisSpec, priors: np.ndarray):
    priors = np.ascontiguousarray(priors, dtype=np.float64)
    if priors.shape != (spec.N, spec.q):
        raise ContractError(f"priors must have shape {(spec.N, spec.q)}, got {priors.shape}")
    bscale = np.array([spec.edge_scale(t, int(spec.b_hi[t - 1])) for t in range(1, spec.N + 1)])
    w_ins, w_del, w_match, w_mis = spec.weights()
    return (np.ascontiguousarray(spec.y, dtype=np.int64), priors,
            np.ascontiguousarray(spec.d_lo, dtype=np.int64),
            np.ascontiguousarray(spec.d_hi, dtype=np.int64),
            np.ascontiguousarray(spec.b_hi, dtype=np.int64),
            bscale, w_ins, w_del, w_match, w_mis)


def gamma(branch: Branch, prior_t, spec: TrellisSpec) -> float:
    """Branch metric: transition probability times emission likelihood.

    Imports carry the symbol prior; emitting branches are supported only when
    their emitted symbol equals the trace symbol at the advanced pointer.
    """
    prior_t = np.asarray(prior_t)
    if branch.kind == "import":
        return float(prior_t[branch.to_state.symbol])
    if branch.kind in ("flush", "carry"):
        return 1.0
    if branch.kind == "delete":
        return branch.transition_prob
    target = branch.to_state.pointer
    if not 1 <= target <= spec.M:
        return 0.0
    if spec.y[target - 1] != branch.emission:
        return 0.0
    if branch.kind == "insert":
        return branch.transition_prob / spec.q
    return branch.transition_prob


def forward(spec: TrellisSpec, priors, backend=None) -> MetricMatrix:
    impl = backend or kernels
    D, B, C, logs, status = impl.forward(*_kernel_args(spec, priors))
    if status:
        raise DecodeCollapse(f"forward mass vanished at section {status}")
    return MetricMatrix(D, B, logs, C)


def backward(spec: TrellisSpec, priors, backend=None) -> MetricMatrix:
    impl = backend or kernels
    D, B, logs, status = impl.backward(*_kernel_args(spec, priors))
    if status:
        raise DecodeCollapse(f"backward mass vanished at section {status}")
    return MetricMatrix(D, B, logs)


def log_likelihood(alpha: MetricMatrix, spec: TrellisSpec) -> float:
    return alpha.log_offset(spec.N, "forward") + math.log(alpha.D[spec.N, spec.M])


def state_posteriors(alpha: MetricMatrix, beta: MetricMatrix, spec: TrellisSpec, priors) -> StateAPP:
    priors = np.asarray(priors, dtype=np.float64)
    D = alpha.D * beta.D
    B_entry = priors[:, :, None] * alpha.D[:-1, None, :] * beta.B
    C = alpha.C * beta.D[1:, None, :]
    try:
        return StateAPP(normalize(D), _normalize_blocks(B_entry), _normalize_blocks(C))
    except ValueError as exc:
        raise DecodeCollapse("state posterior normalizer is zero") from exc


def _normalize_blocks(a: np.ndarray) -> np.ndarray:
    z = a.sum(axis=(1, 2), keepdims=True)
    if (z <= 0).any():
        raise ValueError("zero block")
    return a / z


def symbol_app(states: StateAPP, readout: str = "C") -> np.ndarray:
    """Symbol posteriors from buffered-state posteriors, one row per position."""
    block = states.C if readout == "C" else states.B_entry
    return normalize(block.sum(axis=2))


def decode(spec: TrellisSpec, priors=None, backend=None) -> TraceDecode:
    """Full forward-backward pass returning stage-C symbol posteriors."""
    if priors is None:
        priors = uniform_table(spec.N, spec.q)
    impl = backend or kernels
    lam, loglik, fstatus, bstatus = impl.decode_app(*_kernel_args(spec, priors))
    if bstatus:
        raise DecodeCollapse(f"backward mass vanished at section {bstatus}")
    if fstatus:
        raise DecodeCollapse(f"forward mass vanished at section {fstatus}")
    z = lam.sum(axis=1, keepdims=True)
    if (z <= 0).any():
        raise DecodeCollapse("symbol posterior normalizer is zero")
    return TraceDecode(lam / z, loglik, 2 * edge_count(spec), spec.delta)


class TraceDecoder:
    """Decoder bound to one trace; rebuilds its trellis on collapse.

    When a decode collapses (or the trace is out of reach) the drift bound
    is doubled until it stops pruning anything.
    """

    def __init__(self, trace, N: int, params: ChannelParams, delta="auto",
                 alphabet: Alphabet = DNA, renormalize_edges: bool = True, backend=None):
        self.trace = as_sequence(trace, alphabet)
        self.N = N
        self.params = params
        self.alphabet = alphabet
        self.renormalize_edges = renormalize_edges
        self.backend = backend
        if delta == "auto":
            delta = default_delta(N, params)
        self.spec = self._build(delta)

    def _build(self, delta):
        while True:
            try:
                return build_spec(self.N, self.trace, delta, self.alphabet, self.params,
                                  self.renormalize_edges)
            except UnreachableTerminal:
                delta = self._widen(delta)

    def _widen(self, delta):
        if delta is None:
            raise DecodeCollapse("trace cannot be decoded even without a drift bound")
        delta = max(1, 2 * delta)
        return None if delta >= self.N else delta

    def decode(self, priors=None) -> TraceDecode:
        while True:
            try:
                return decode(self.spec, priors, self.backend)
            except DecodeCollapse:
                self.spec = self._build(self._widen(self.spec.delta))

    def sequence_loglik(self, priors) -> float:
        """log Pr(trace | priors) from a forward pass alone; -inf if impossible."""
        impl = self.backend or kernels
        _, loglik, status, _ = impl.decode_app(*_kernel_args(self.spec, priors), want_app=False)
        return -math.inf if status else loglik
