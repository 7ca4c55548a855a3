"""Exact reference decoders.

``trace_likelihood`` and ``enumerate_app`` work directly on the channel law
through an edit lattice over (consumed inputs, emitted outputs) and do not
touch the trellis or bcjr modules.  ``joint_trellis_app`` runs forward-backward
over the product of K pointer trellises, which is exact and exponential in K.
"""

from __future__ import annotations

import itertools
import math
from typing import Optional

import numpy as np

from .channel import ChannelParams
from .core import Cluster, normalize
from .errors import ContractError, InstanceTooLarge
from .trellis import build_spec

ENUM_LIMIT = 10**7
JOINT_MAX_K = 3
JOINT_STATE_LIMIT = 2 * 10**6


def _event_weights(params: ChannelParams, q: int):
    return params.pi_i / q, params.pi_d, params.pi_c, params.pi_s / (q - 1)


def trace_likelihood(x, y, params: ChannelParams, q: int = 4) -> float:
    """Pr(y | x) under the IDS channel (no insertions after the last input)."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    return float(batch_likelihood(x[None, :], y, params, q)[0])


def batch_likelihood(xs: np.ndarray, y: np.ndarray, params: ChannelParams, q: int) -> np.ndarray:
    """Pr(y | x) for every row of ``xs`` (shape (B, N)) at once.

    ``F[p]`` is the probability of having emitted ``y[:p]`` after consuming
    the first t inputs, with input t+1 on deck.
    """
    w_ins, w_del, w_cor, w_sub = _event_weights(params, q)
    B, N = xs.shape
    M = y.size
    F = np.zeros((M + 1, B))
    F[0] = 1.0
    for t in range(N):
        for p in range(1, M + 1):
            F[p] += F[p - 1] * w_ins
        G = F * w_del
        match = xs[:, t][None, :] == y[:, None]  # (M, B)
        G[1:] += F[:-1] * np.where(match, w_cor, w_sub)
        F = G
    return F[M]


def _check_enum(N: int, q: int):
    if q ** N > ENUM_LIMIT:
        raise InstanceTooLarge(f"|alphabet|^N = {q}^{N} exceeds {ENUM_LIMIT}")


def enumerate_posterior(cluster: Cluster, params: ChannelParams, N: Optional[int] = None,
                        chunk: int = 1 << 16):
    """Yield (sequences, unnormalized posterior) chunks over all of Sigma^N."""
    q = len(cluster.alphabet)
    if N is None:
        if cluster.reference is None:
            raise ContractError("N is required when the cluster has no reference")
        N = int(cluster.reference.size)
    _check_enum(N, q)
    total = q ** N
    powers = q ** np.arange(N - 1, -1, -1)
    # a canonical product order makes the result bit-identical under trace permutation
    traces = sorted(cluster.traces, key=lambda y: (y.size, tuple(y.tolist())))
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        xs = (idx[:, None] // powers[None, :]) % q
        w = np.ones(idx.size)
        for y in traces:
            w *= batch_likelihood(xs, y, params, q)
        yield xs, w


def enumerate_app(cluster: Cluster, params: ChannelParams, N: Optional[int] = None) -> np.ndarray:
    """Exact symbol posteriors under a uniform source prior, by enumeration."""
    q = len(cluster.alphabet)
    table = None
    for xs, w in enumerate_posterior(cluster, params, N):
        if table is None:
            table = np.zeros((xs.shape[1], q))
        for t in range(xs.shape[1]):
            table[t] += np.bincount(xs[:, t], weights=w, minlength=q)
    if table.sum() <= 0:
        raise ContractError("traces are impossible under the channel parameters")
    return normalize(table)


def enumerate_map_sequence(cluster: Cluster, params: ChannelParams, N: Optional[int] = None) -> np.ndarray:
    """Jointly most likely source sequence (block MAP), for diagnostics."""
    best, best_w = None, -1.0
    for xs, w in enumerate_posterior(cluster, params, N):
        j = int(np.argmax(w))
        if w[j] > best_w:
            best, best_w = xs[j].copy(), w[j]
    return best


# ----------------------------------------------------------------------------
# joint product trellis


class _JointGeometry:
    """Per-trace windows for the product trellis (shared with single traces)."""

    def __init__(self, cluster: Cluster, params: ChannelParams, N: int, delta):
        self.q = len(cluster.alphabet)
        self.specs = [build_spec(N, y, delta, cluster.alphabet, params) for y in cluster.traces]
        self.shape = tuple(s.M + 1 for s in self.specs)
        self.N = N

    def mask(self, c: int, stage: str) -> np.ndarray:
        m = np.ones(self.shape, dtype=bool)
        for k, s in enumerate(self.specs):
            ptr = np.arange(s.M + 1)
            if stage == "B":
                ok = (ptr >= s.d_lo[c]) & (ptr <= s.b_hi[c])
            else:
                ok = (ptr >= s.d_lo[c]) & (ptr <= s.d_hi[c])
            view = [1] * len(self.shape)
            view[k] = -1
            m &= ok.reshape(view)
        return m

    def edge_scale(self, k: int, t: int) -> np.ndarray:
        s = self.specs[k]
        out = np.ones(s.M + 1)
        bh = int(s.b_hi[t - 1])
        out[bh] = s.edge_scale(t, bh)
        return out


def _along(arr: np.ndarray, k: int) -> np.ndarray:
    return np.moveaxis(arr, k, 0)


def joint_edge_count(cluster: Cluster, params: ChannelParams, N: int, delta) -> int:
    """Supported state-pair transitions in the sequenced product trellis.

    Insertions and delete/transmit moves are applied one trace at a time
    within a section so every joint edit history maps to exactly one path.
    """
    specs = [build_spec(N, y, delta, cluster.alphabet, params) for y in cluster.traces]
    q = len(cluster.alphabet)
    total = 0
    for t in range(1, N + 1):
        nA, nB, nC, nIns, nMove = [], [], [], [], []
        for s in specs:
            a_lo, a_hi, bh = int(s.d_lo[t - 1]), int(s.d_hi[t - 1]), int(s.b_hi[t - 1])
            c_lo, c_hi = int(s.d_lo[t]), int(s.d_hi[t])
            nA.append(a_hi - a_lo + 1)
            nB.append(bh - a_lo + 1)
            nC.append(c_hi - c_lo + 1)
            nIns.append(max(0, bh - a_lo))
            n_del = max(0, min(bh, c_hi) - max(a_lo, c_lo) + 1)
            n_tr = max(0, min(bh, c_hi - 1) - max(a_lo, c_lo - 1) + 1)
            nMove.append(n_del + n_tr)
        K = len(specs)
        sec = math.prod(nA) + math.prod(nC)
        for k in range(K):
            sec += nIns[k] * math.prod(nB[j] for j in range(K) if j != k)
            sec += nMove[k] * math.prod(nC[:k]) * math.prod(nB[k + 1:])
        total += q * sec
    return total


def joint_trellis_app(cluster: Cluster, params: ChannelParams, delta=None,
                      N: Optional[int] = None, priors: Optional[np.ndarray] = None) -> np.ndarray:
    """Symbol posteriors from forward-backward over the K-fold product trellis."""
    if cluster.K > JOINT_MAX_K:
        raise InstanceTooLarge(f"joint trellis limited to K <= {JOINT_MAX_K}")
    if N is None:
        if cluster.reference is None:
            raise ContractError("N is required when the cluster has no reference")
        N = int(cluster.reference.size)
    geo = _JointGeometry(cluster, params, N, delta)
    if math.prod(geo.shape) > JOINT_STATE_LIMIT:
        raise InstanceTooLarge(f"product state space {geo.shape} too large")
    q, K = geo.q, cluster.K
    if priors is None:
        priors = np.full((N, q), 1.0 / q)
    w_ins, w_del, w_cor, w_sub = _event_weights(params, q)
    emit = []
    for y in cluster.traces:
        e = np.where(np.arange(q)[:, None] == y[None, :], w_cor, w_sub)  # (q, M)
        emit.append(e)

    # forward
    D = np.zeros(geo.shape)
    D[(0,) * K] = 1.0
    alpha_D = [D]
    alpha_C = []
    for t in range(1, N + 1):
        bmask = geo.mask(t - 1, "B")
        cmask = geo.mask(t, "C")
        Cx = np.zeros((q,) + geo.shape)
        for x in range(q):
            B = alpha_D[-1] * priors[t - 1, x]
            for k in range(K):
                Bk = _along(B, k)
                for p in range(1, Bk.shape[0]):
                    Bk[p] += Bk[p - 1] * w_ins
                B *= bmask
            for k in range(K):
                scale = geo.edge_scale(k, t)
                src = _along(B, k) * scale.reshape((-1,) + (1,) * (K - 1))
                new = w_del * src
                new[1:] += src[:-1] * emit[k][x].reshape((-1,) + (1,) * (K - 1))
                B = np.moveaxis(new, 0, k)
                B *= _stage_mask(geo, t, k)
            Cx[x] = B * cmask
        s = Cx.max()
        if s <= 0:
            raise ContractError("joint forward mass vanished")
        Cx /= s
        alpha_C.append(Cx)
        alpha_D.append(Cx.sum(axis=0))

    # backward
    beta_D = [None] * (N + 1)
    bd = np.zeros(geo.shape)
    bd[tuple(s.M for s in geo.specs)] = 1.0
    beta_D[N] = bd
    for t in range(N, 0, -1):
        bmask = geo.mask(t - 1, "B")
        cmask = geo.mask(t, "C")
        acc = np.zeros(geo.shape)
        for x in range(q):
            Bb = beta_D[t] * cmask
            for k in range(K - 1, -1, -1):
                Bb = Bb * _stage_mask(geo, t, k)
                scale = geo.edge_scale(k, t)
                dst = _along(Bb, k)
                new = w_del * dst
                new[:-1] += dst[1:] * emit[k][x].reshape((-1,) + (1,) * (K - 1))
                new *= scale.reshape((-1,) + (1,) * (K - 1))
                Bb = np.moveaxis(new, 0, k)
            Bb = Bb * bmask
            for k in range(K - 1, -1, -1):
                Bk = _along(Bb, k)
                for p in range(Bk.shape[0] - 2, -1, -1):
                    Bk[p] += Bk[p + 1] * w_ins
                Bb *= bmask
            acc += priors[t - 1, x] * Bb
        acc *= geo.mask(t - 1, "D")
        s = acc.max()
        if s <= 0:
            raise ContractError("joint backward mass vanished")
        beta_D[t - 1] = acc / s

    app = np.zeros((N, q))
    for t in range(1, N + 1):
        app[t - 1] = (alpha_C[t - 1] * beta_D[t][None]).reshape(q, -1).sum(axis=1)
    return normalize(app)


def _stage_mask(geo: _JointGeometry, t: int, k: int) -> np.ndarray:
    """Mask after trace k has moved in section t: traces <= k in C windows, others in B."""
    m = np.ones(geo.shape, dtype=bool)
    for j, s in enumerate(geo.specs):
        ptr = np.arange(s.M + 1)
        if j <= k:
            ok = (ptr >= s.d_lo[t]) & (ptr <= s.d_hi[t])
        else:
            ok = (ptr >= s.d_lo[t - 1]) & (ptr <= s.b_hi[t - 1])
        view = [1] * len(geo.shape)
        view[j] = -1
        m &= ok.reshape(view)
    return m


def enumerate_all(N: int, q: int) -> np.ndarray:
    """All of Sigma^N in lexicographic order (small N only)."""
    _check_enum(N, q)
    return np.array(list(itertools.product(range(q), repeat=N)), dtype=np.int64)
