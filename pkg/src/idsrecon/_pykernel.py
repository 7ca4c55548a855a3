"""Reference forward/backward sweeps in numpy (vectorized over the alphabet).

Same signatures and outputs as the compiled ``_ckernel`` module.  Arrays are
indexed by absolute pointer value (width ``M+1``); only the drift window of
each stage is touched.

Return status is 0 on success, otherwise ``1 + index`` of the stage whose
total mass vanished.
"""

import math

import numpy as np


def emission_table(y, q, w_match, w_mis):
    """``emit[x, p]``: weight of transmitting x while emitting trace symbol p."""
    emit = np.full((q, y.size), w_mis)
    emit[y, np.arange(y.size)] = w_match
    return emit


def forward(y, prior, d_lo, d_hi, b_hi, bscale, w_ins, w_del, w_match, w_mis):
    N, q = prior.shape
    M = y.size
    emit = emission_table(y, q, w_match, w_mis)
    aD = np.zeros((N + 1, M + 1))
    aB = np.zeros((N, q, M + 1))
    aC = np.zeros((N, q, M + 1))
    logs = np.zeros(N + 1)
    aD[0, 0] = 1.0
    for t in range(N):
        lo, hi, bh = d_lo[t], d_hi[t], b_hi[t]
        clo, chi = d_lo[t + 1], d_hi[t + 1]
        B = aB[t]
        B[:, lo:hi + 1] = prior[t][:, None] * aD[t, lo:hi + 1]
        for p in range(lo + 1, bh + 1):
            B[:, p] += B[:, p - 1] * w_ins
        Bs = B[:, lo:bh + 1].copy()
        Bs[:, -1] *= bscale[t]
        C = aC[t]
        a, b = max(lo, clo), min(bh, chi)
        if a <= b:
            C[:, a:b + 1] += w_del * Bs[:, a - lo:b - lo + 1]
        a, b = max(lo, clo - 1), min(bh, chi - 1)
        if a <= b:
            C[:, a + 1:b + 2] += Bs[:, a - lo:b - lo + 1] * emit[:, a:b + 1]
        D = C.sum(axis=0)
        s = D.max()
        if not s > 0.0:
            return aD, aB, aC, logs, t + 1
        C /= s
        aD[t + 1] = D / s
        logs[t + 1] = math.log(s)
    if not aD[N, M] > 0.0:
        return aD, aB, aC, logs, N + 1
    return aD, aB, aC, logs, 0


def backward(y, prior, d_lo, d_hi, b_hi, bscale, w_ins, w_del, w_match, w_mis):
    N, q = prior.shape
    M = y.size
    emit = emission_table(y, q, w_match, w_mis)
    bD = np.zeros((N + 1, M + 1))
    bB = np.zeros((N, q, M + 1))
    logs = np.zeros(N + 1)
    if not d_lo[N] <= M <= d_hi[N]:
        return bD, bB, logs, N + 1
    bD[N, M] = 1.0
    for t in range(N - 1, -1, -1):
        lo, hi, bh = d_lo[t], d_hi[t], b_hi[t]
        clo, chi = d_lo[t + 1], d_hi[t + 1]
        nxt = bD[t + 1]
        B = bB[t]
        a, b = max(lo, clo), min(bh, chi)
        if a <= b:
            B[:, a:b + 1] += w_del * nxt[a:b + 1]
        a, b = max(lo, clo - 1), min(bh, chi - 1)
        if a <= b:
            B[:, a:b + 1] += emit[:, a:b + 1] * nxt[a + 1:b + 2]
        B[:, bh] *= bscale[t]
        for p in range(bh - 1, lo - 1, -1):
            B[:, p] += w_ins * B[:, p + 1]
        D = (prior[t][:, None] * B[:, lo:hi + 1]).sum(axis=0)
        s = D.max()
        if not s > 0.0:
            return bD, bB, logs, t + 1
        B /= s
        bD[t, lo:hi + 1] = D / s
        logs[t] = math.log(s)
    return bD, bB, logs, 0


def decode_app(y, prior, d_lo, d_hi, b_hi, bscale, w_ins, w_del, w_match, w_mis, want_app=True):
    """``(app, loglik, forward_status, backward_status)``; see the compiled twin."""
    args = (y, prior, d_lo, d_hi, b_hi, bscale, w_ins, w_del, w_match, w_mis)
    bD = None
    if want_app:
        bD, _, _, status = backward(*args)
        if status:
            return None, 0.0, 0, status
    aD, _, aC, logs, status = forward(*args)
    if status:
        return None, 0.0, status, 0
    N, M = prior.shape[0], y.size
    loglik = float(logs.sum() + math.log(aD[N, M]))
    app = np.einsum("txp,tp->tx", aC, bD[1:]) if want_app else None
    return app, loglik, 0, 0
