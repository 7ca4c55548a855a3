"""Iterative belief combining across per-trace decoders.

Every trace is decoded on its own trellis.  Decoders sit on a ring (or a
chain when ``ring_closure`` is off) and, once per iteration, each one fuses
the messages it received into a symbol prior, runs forward-backward with that
prior and sends its neighbours new messages.

Two message rules are available.  ``"divide"`` sends each neighbour the new
belief with that neighbour's last message divided out.  ``"windowed"`` (the
default) sends the decoder's extrinsic belief multiplied into what it heard
from the far side, and each decoder listens only as far as needed to hear
every other trace once.  On a chain the two rules coincide; on a ring the
windowed rule keeps evidence from travelling all the way round and being
counted twice.

All decoders read the messages of iteration l and write those of l+1, so the
schedule is synchronous.  Iteration stops once every pair of per-trace
beliefs agrees to within ``epsilon_consensus`` in total variation.  Without
consensus, the per-trace MAP sequence that best explains all traces is
reported instead of the (alignment-blurring) mean belief.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bcjr import TraceDecoder
from .channel import ChannelParams
from .core import DNA, MASS_FLOOR, Alphabet, Cluster, map_sequence, row_tv, uniform_table
from .errors import ContractError
from .trellis import edge_count

log = logging.getLogger(__name__)


MESSAGE_RULES = ("windowed", "divide")


@dataclass
class FusionConfig:
    epsilon_consensus: float = 1e-6
    max_iters: Optional[int] = None  # None -> max(5, 2K)
    mass_floor: float = MASS_FLOOR
    ring_closure: bool = True
    damping: float = 0.0
    stall_damping: float = 0.0  # damping switched on once the gap stops shrinking
    delta: object = "auto"  # drift bound; "auto" picks trellis.default_delta
    message_rule: str = "windowed"  # or "divide"
    fallback_readout: str = "best-trace"  # or "mean" when consensus is not reached

    def __post_init__(self):
        if not self.epsilon_consensus > 0:
            raise ContractError("epsilon_consensus must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise ContractError("max_iters must be at least 1")
        if not 0.0 <= self.damping < 1.0:
            raise ContractError("damping must lie in [0, 1)")
        if not 0.0 <= self.stall_damping < 1.0:
            raise ContractError("stall_damping must lie in [0, 1)")
        if self.fallback_readout not in ("best-trace", "mean"):
            raise ContractError("fallback_readout must be 'best-trace' or 'mean'")
        if self.message_rule not in MESSAGE_RULES:
            raise ContractError(f"message_rule must be one of {MESSAGE_RULES}")

    def iteration_cap(self, K: int) -> int:
        return self.max_iters if self.max_iters is not None else max(5, 2 * K)


@dataclass
class DecodeReport:
    consensus_beliefs: np.ndarray
    map_sequence: np.ndarray
    iterations_used: int
    max_consensus_gap: float
    converged: bool
    per_iteration_gaps: list[float] = field(default_factory=list)
    per_trace_beliefs: list[np.ndarray] = field(default_factory=list, repr=False)
    gamma_evals: int = 0
    flagged_positions: int = 0

    def write_app_csv(self, fh, alphabet: Alphabet = DNA) -> None:
        """One CSV row per position: t, then the posterior of each symbol."""
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *alphabet.symbols])
        for t, row in enumerate(self.consensus_beliefs):
            w.writerow([t, *(f"{v:.6g}" for v in row)])


def fuse_priors(left, right, source_prior=None, floor: float = MASS_FLOOR) -> np.ndarray:
    """Combine two incoming beliefs into a prior: left * right / source_prior.

    Works on single distributions or whole (N, q) tables.  Rows where every
    entry falls below the floor (contradictory inputs) come back uniform.
    """
    prod = np.asarray(left, dtype=np.float64) * np.asarray(right, dtype=np.float64)
    if source_prior is not None:
        prod = prod / np.asarray(source_prior, dtype=np.float64)
    return _floored(prod, floor)[0]


def fuse_messages(messages, source_prior=None, floor: float = MASS_FLOOR):
    """Generalization of :func:`fuse_priors` to any number of messages.

    Returns ``(prior, flagged)`` where ``flagged`` marks rows that collapsed.
    """
    prod = None
    for m in messages:
        prod = np.array(m, dtype=np.float64) if prod is None else prod * m
    if source_prior is not None and len(messages) > 1:
        prod = prod / np.asarray(source_prior) ** (len(messages) - 1)
    return _floored(prod, floor)


def extrinsic_out(current, received, floor: float = MASS_FLOOR) -> np.ndarray:
    """Belief to send back toward the side that sent ``received``."""
    ratio = np.asarray(current, dtype=np.float64) / np.maximum(np.asarray(received, dtype=np.float64), floor)
    return _floored(ratio, floor)[0]


def _floored(d: np.ndarray, floor: float):
    flagged = np.max(d, axis=-1) <= floor
    d = np.maximum(d, floor)
    d = d / d.sum(axis=-1, keepdims=True)
    if np.any(flagged):
        d[flagged] = 1.0 / d.shape[-1]
    return d, flagged


def check_consensus(per_trace_beliefs) -> float:
    """Largest total-variation distance between any two traces at any position."""
    tables = list(per_trace_beliefs)
    if len(tables) < 2:
        return 0.0
    gap = 0.0
    for a in range(len(tables)):
        for b in range(a + 1, len(tables)):
            gap = max(gap, float(row_tv(tables[a], tables[b]).max()))
    return gap


class MessageBoard:
    """Double-buffered directed messages between neighbouring decoders.

    Each directed edge carries a stack of ``depth + 1`` belief tables.  Level
    ``h`` of the message ``k -> j`` is the product of the extrinsic beliefs of
    the ``h`` nearest traces behind ``k`` (``k`` included), looking away from
    ``j``.  Level 0 is uniform.  With ``depth == 1`` the stack degenerates to a
    single message per edge.

    Decoders read the current buffer and write the next one; :meth:`swap`
    publishes the writes at the iteration barrier.
    """

    def __init__(self, K: int, ring_closure: bool = True, depth: int = 1):
        self.K = K
        self.ring = bool(ring_closure and K >= 3)
        self.depth = depth
        edges = set()
        for k in range(K - 1):
            edges |= {(k, k + 1), (k + 1, k)}
        if self.ring:
            edges |= {(K - 1, 0), (0, K - 1)}
        self.edges = sorted(edges)
        self._current: dict[tuple[int, int], np.ndarray] = {}
        self._next: dict[tuple[int, int], np.ndarray] = {}

    def neighbors(self, k: int) -> list[int]:
        return sorted(src for src, dst in self.edges if dst == k)

    def sides(self, k: int) -> tuple[Optional[int], Optional[int]]:
        """(left, right) neighbour of ``k``; None past the end of a chain."""
        left, right = (k - 1) % self.K, (k + 1) % self.K
        return ((left if (left, k) in self.edges else None),
                (right if (right, k) in self.edges else None))

    def reach(self, k: int) -> tuple[int, int]:
        """How many traces ``k`` should hear from on its left and right.

        On a ring the K-1 other traces are split between the two sides so
        that none of them is heard twice; on a chain each side hears
        everything up to its end.
        """
        if self.ring:
            return self.K // 2, (self.K - 1) // 2
        return k, self.K - 1 - k

    def read(self, src: int, dst: int, level: Optional[int] = None) -> np.ndarray:
        stack = self._current[(src, dst)]
        return stack[-1] if level is None else stack[level]

    def incoming(self, k: int) -> list[np.ndarray]:
        return [self.read(j, k) for j in self.neighbors(k)]

    def write(self, src: int, dst: int, msg: np.ndarray) -> None:
        """Store ``msg``, either one (N, q) table or a full (depth+1, N, q) stack."""
        if (src, dst) not in self.edges:
            raise ContractError(f"no edge {src}->{dst}")
        msg = np.asarray(msg)
        if msg.ndim == 2:
            stack = np.empty((self.depth + 1,) + msg.shape)
            stack[0] = 1.0 / msg.shape[-1]
            stack[1:] = msg
            msg = stack
        self._next[(src, dst)] = msg

    def swap(self) -> None:
        missing = set(self.edges) - set(self._next)
        if missing:
            raise ContractError(f"messages missing for edges {sorted(missing)}")
        self._current, self._next = self._next, {}


def _damp(old: np.ndarray, new: np.ndarray, damping: float, floor: float) -> np.ndarray:
    if not damping:
        return new
    # geometric mixing keeps messages on the same scale as products of beliefs
    mixed = np.exp(damping * np.log(np.maximum(old, floor)) + (1.0 - damping) * np.log(np.maximum(new, floor)))
    return _floored(mixed, floor)[0]


def _decoders(cluster: Cluster, params: ChannelParams, N: int, delta, backend=None):
    return [TraceDecoder(y, N, params, delta, cluster.alphabet, backend=backend) for y in cluster.traces]


def _source_length(cluster: Cluster, N: Optional[int]) -> int:
    if N is not None:
        return N
    if cluster.reference is None:
        raise ContractError("source length N must be given when the cluster has no reference")
    return int(cluster.reference.size)


def _windowed_prior(board: MessageBoard, k: int, uniform: np.ndarray, floor: float):
    left, right = board.sides(k)
    n_left, n_right = board.reach(k)
    parts = []
    if left is not None and n_left:
        parts.append(board.read(left, k, n_left))
    if right is not None and n_right:
        parts.append(board.read(right, k, n_right))
    if not parts:
        return uniform, np.zeros(uniform.shape[0], dtype=bool)
    return fuse_messages(parts, None, floor)


def _windowed_send(board: MessageBoard, k: int, extrinsic: np.ndarray, damping: float, floor: float):
    left, right = board.sides(k)
    for src, dst in ((left, right), (right, left)):
        # the message toward dst extends what arrived from the opposite side
        if dst is None:
            continue
        old = board.read(k, dst, 0)  # shape donor only
        stack = np.empty((board.depth + 1,) + old.shape)
        stack[0] = 1.0 / old.shape[-1]
        for h in range(1, board.depth + 1):
            behind = board.read(src, k, h - 1) if src is not None else stack[0]
            fresh = _floored(extrinsic * behind, floor)[0]
            stack[h] = _damp(board.read(k, dst, h), fresh, damping, floor)
        board.write(k, dst, stack)


def iterate(cluster: Cluster, params: ChannelParams, config: Optional[FusionConfig] = None,
            N: Optional[int] = None, backend=None) -> DecodeReport:
    """Run belief combining on one cluster until consensus or the iteration cap."""
    config = config or FusionConfig()
    N = _source_length(cluster, N)
    K = cluster.K
    q = len(cluster.alphabet)
    floor = config.mass_floor
    decoders = _decoders(cluster, params, N, config.delta, backend)
    uniform = uniform_table(N, q)

    gamma_evals = 0
    beliefs = []
    for dec in decoders:
        r = dec.decode(uniform)
        gamma_evals += r.gamma_evals
        beliefs.append(r.app)

    gap = check_consensus(beliefs)
    gaps = [gap]
    if K == 1:
        return _report(beliefs, 0, gap, True, gaps, gamma_evals, 0)

    windowed = config.message_rule == "windowed"
    board = MessageBoard(K, config.ring_closure, depth=K - 1 if windowed else 1)
    for src, dst in board.edges:
        board.write(src, dst, beliefs[src])
    board.swap()
    # agreement only counts once every trace has heard from every other one
    settle = max(max(board.reach(k)) for k in range(K))

    flagged_total = 0
    damping = config.damping
    cap = max(config.iteration_cap(K), settle)
    converged = False
    it = 0
    for it in range(1, cap + 1):
        new_beliefs, extrinsics = [], []
        for k, dec in enumerate(decoders):
            if windowed:
                prior, flagged = _windowed_prior(board, k, uniform, floor)
            else:
                prior, flagged = fuse_messages(board.incoming(k), None, floor)
            flagged_total += int(flagged.sum())
            r = dec.decode(prior)
            gamma_evals += r.gamma_evals
            new_beliefs.append(r.app)
            extrinsics.append(extrinsic_out(r.app, prior, floor))
            if windowed:
                _windowed_send(board, k, extrinsics[-1], damping, floor)
            else:
                for j in board.neighbors(k):
                    msg = extrinsic_out(r.app, board.read(j, k), floor)
                    board.write(k, j, _damp(board.read(k, j), msg, damping, floor))
        board.swap()
        beliefs = new_beliefs
        gap = check_consensus(beliefs)
        gaps.append(gap)
        if gap <= config.epsilon_consensus and it >= settle:
            converged = True
            break
        if config.stall_damping and len(gaps) >= 3 and gap >= 0.5 * gaps[-3]:
            damping = max(damping, config.stall_damping)
    if not converged:
        log.debug("no consensus after %d iterations (gap %.3g)", it, gap)
    report = _report(beliefs, it, gap, converged, gaps, gamma_evals, flagged_total)
    if not converged and config.fallback_readout == "best-trace":
        pick, evals = best_supported_trace(decoders, beliefs)
        report.gamma_evals += evals
        report.consensus_beliefs = beliefs[pick]
        report.map_sequence = map_sequence(beliefs[pick])
    return report


def best_supported_trace(decoders, beliefs) -> tuple[int, int]:
    """Index of the per-trace MAP sequence that best explains all traces.

    Returns ``(index, branch_evaluations_spent)``.

    Each distinct candidate is scored by the sum over traces of
    log Pr(trace | candidate), evaluated on that trace's own trellis.
    Ties go to the lowest trace index, so the choice ignores trace order only
    up to exact ties.
    """
    q = beliefs[0].shape[1]
    scores: dict[bytes, float] = {}
    best, best_score = 0, -math.inf
    evals = 0
    for k, b in enumerate(beliefs):
        cand = map_sequence(b)
        key = cand.tobytes()
        if key not in scores:
            onehot = np.eye(q)[cand]
            total = 0.0
            for dec in decoders:
                total += dec.sequence_loglik(onehot)
                evals += edge_count(dec.spec)
                if total == -math.inf:
                    break
            scores[key] = total
        if scores[key] > best_score:
            best, best_score = k, scores[key]
    return best, evals


def _report(beliefs, iterations, gap, converged, gaps, gamma_evals, flagged) -> DecodeReport:
    consensus = np.mean(beliefs, axis=0)
    consensus = consensus / consensus.sum(axis=1, keepdims=True)
    return DecodeReport(consensus, map_sequence(consensus), iterations, gap, converged,
                        gaps, beliefs, gamma_evals, flagged)


def single_trace(cluster: Cluster, params: ChannelParams, config: Optional[FusionConfig] = None,
                 N: Optional[int] = None, backend=None) -> DecodeReport:
    """Decode only the first trace of the cluster (no combining)."""
    config = config or FusionConfig()
    N = _source_length(cluster, N)
    dec = TraceDecoder(cluster.traces[0], N, params, config.delta, cluster.alphabet, backend=backend)
    r = dec.decode()
    return _report([r.app], 0, 0.0, True, [0.0], r.gamma_evals, 0)


def forward_soft_baseline(cluster: Cluster, params: ChannelParams, config: Optional[FusionConfig] = None,
                          N: Optional[int] = None, backend=None) -> DecodeReport:
    """One sequential pass: decoder k uses decoder k-1's posterior as its prior."""
    config = config or FusionConfig()
    N = _source_length(cluster, N)
    q = len(cluster.alphabet)
    prior = uniform_table(N, q)
    gamma_evals = 0
    app = prior
    for dec in _decoders(cluster, params, N, config.delta, backend):
        r = dec.decode(prior)
        gamma_evals += r.gamma_evals
        app = r.app
        prior = _floored(app, config.mass_floor)[0]
    return _report([app], 0, 0.0, True, [0.0], gamma_evals, 0)


DECODERS = {
    "belief-combine": iterate,
    "forward-soft": forward_soft_baseline,
    "single-trace": single_trace,
}
