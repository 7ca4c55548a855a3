# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled forward/backward sweeps; drop-in replacement for ``_pykernel``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log

cnp.import_array()


def forward(const long[::1] y, const double[:, ::1] prior,
            const long[::1] d_lo, const long[::1] d_hi, const long[::1] b_hi,
            const double[::1] bscale,
            double w_ins, double w_del, double w_match, double w_mis):
    cdef Py_ssize_t N = prior.shape[0], q = prior.shape[1], M = y.shape[0]
    aD_arr = np.zeros((N + 1, M + 1))
    aB_arr = np.zeros((N, q, M + 1))
    aC_arr = np.zeros((N, q, M + 1))
    logs_arr = np.zeros(N + 1)
    cdef double[:, ::1] aD = aD_arr
    cdef double[:, :, ::1] aB = aB_arr
    cdef double[:, :, ::1] aC = aC_arr
    cdef double[::1] logs = logs_arr
    cdef Py_ssize_t t, x, p, lo, hi, bh, clo, chi
    cdef double v, s, pr, inv, sc
    aD[0, 0] = 1.0
    for t in range(N):
        lo = d_lo[t]; hi = d_hi[t]; bh = b_hi[t]
        clo = d_lo[t + 1]; chi = d_hi[t + 1]
        for x in range(q):
            pr = prior[t, x]
            v = 0.0
            for p in range(lo, bh + 1):
                v = v * w_ins
                if p <= hi:
                    v = v + aD[t, p] * pr
                aB[t, x, p] = v
            for p in range(lo, bh + 1):
                v = aB[t, x, p]
                if v == 0.0:
                    continue
                sc = bscale[t] if p == bh else 1.0
                if clo <= p <= chi:
                    aC[t, x, p] += v * w_del * sc
                if clo <= p + 1 <= chi:
                    if y[p] == x:
                        aC[t, x, p + 1] += v * w_match * sc
                    else:
                        aC[t, x, p + 1] += v * w_mis * sc
        s = 0.0
        for p in range(clo, chi + 1):
            v = 0.0
            for x in range(q):
                v += aC[t, x, p]
            aD[t + 1, p] = v
            if v > s:
                s = v
        if not s > 0.0:
            return aD_arr, aB_arr, aC_arr, logs_arr, t + 1
        inv = 1.0 / s
        for p in range(clo, chi + 1):
            aD[t + 1, p] *= inv
            for x in range(q):
                aC[t, x, p] *= inv
        logs[t + 1] = log(s)
    if not aD[N, M] > 0.0:
        return aD_arr, aB_arr, aC_arr, logs_arr, N + 1
    return aD_arr, aB_arr, aC_arr, logs_arr, 0


def backward(const long[::1] y, const double[:, ::1] prior,
             const long[::1] d_lo, const long[::1] d_hi, const long[::1] b_hi,
             const double[::1] bscale,
             double w_ins, double w_del, double w_match, double w_mis):
    cdef Py_ssize_t N = prior.shape[0], q = prior.shape[1], M = y.shape[0]
    bD_arr = np.zeros((N + 1, M + 1))
    bB_arr = np.zeros((N, q, M + 1))
    logs_arr = np.zeros(N + 1)
    cdef double[:, ::1] bD = bD_arr
    cdef double[:, :, ::1] bB = bB_arr
    cdef double[::1] logs = logs_arr
    cdef Py_ssize_t t, x, p, lo, hi, bh, clo, chi
    cdef double v, s, inv, sc, nb
    if not (d_lo[N] <= M <= d_hi[N]):
        return bD_arr, bB_arr, logs_arr, N + 1
    bD[N, M] = 1.0
    for t in range(N - 1, -1, -1):
        lo = d_lo[t]; hi = d_hi[t]; bh = b_hi[t]
        clo = d_lo[t + 1]; chi = d_hi[t + 1]
        for x in range(q):
            nb = 0.0
            for p in range(bh, lo - 1, -1):
                v = 0.0
                if clo <= p <= chi:
                    v += w_del * bD[t + 1, p]
                if clo <= p + 1 <= chi:
                    if y[p] == x:
                        v += w_match * bD[t + 1, p + 1]
                    else:
                        v += w_mis * bD[t + 1, p + 1]
                if p == bh:
                    v *= bscale[t]
                else:
                    v += w_ins * nb
                bB[t, x, p] = v
                nb = v
        s = 0.0
        for p in range(lo, hi + 1):
            v = 0.0
            for x in range(q):
                v += prior[t, x] * bB[t, x, p]
            bD[t, p] = v
            if v > s:
                s = v
        if not s > 0.0:
            return bD_arr, bB_arr, logs_arr, t + 1
        inv = 1.0 / s
        for p in range(lo, hi + 1):
            bD[t, p] *= inv
        for x in range(q):
            for p in range(lo, bh + 1):
                bB[t, x, p] *= inv
        logs[t] = log(s)
    return bD_arr, bB_arr, logs_arr, 0


def decode_app(const long[::1] y, const double[:, ::1] prior,
               const long[::1] d_lo, const long[::1] d_hi, const long[::1] b_hi,
               const double[::1] bscale,
               double w_ins, double w_del, double w_match, double w_mis,
               bint want_app=True):
    """Fused backward+forward pass on banded storage.

    Returns ``(app, loglik, forward_status, backward_status)`` where ``app``
    holds unnormalized stage-C symbol weights (None when ``want_app`` is
    false, in which case only the forward pass runs).
    """
    cdef Py_ssize_t N = prior.shape[0], q = prior.shape[1], M = y.shape[0]
    cdef Py_ssize_t t, x, p, lo, hi, bh, clo, chi, W = 2
    cdef double v, s, inv, sc, nb, loglik = 0.0
    for t in range(N):
        W = max(W, b_hi[t] - d_lo[t] + 2)
    for t in range(N + 1):
        W = max(W, d_hi[t] - d_lo[t] + 2)

    app_arr = None
    bD_arr = np.zeros((N + 1, W))
    scratch_arr = np.zeros((3, q, W))
    rowD_arr = np.zeros((2, W))
    cdef double[:, ::1] bD = bD_arr
    cdef double[:, :, ::1] S = scratch_arr
    cdef double[:, ::1] rowD = rowD_arr
    cdef double[:, ::1] app

    if want_app:
        app_arr = np.zeros((N, q))
        app = app_arr
        if not (d_lo[N] <= M <= d_hi[N]):
            return None, 0.0, 0, N + 1
        bD[N, M - d_lo[N]] = 1.0
        for t in range(N - 1, -1, -1):
            lo = d_lo[t]; hi = d_hi[t]; bh = b_hi[t]
            clo = d_lo[t + 1]; chi = d_hi[t + 1]
            for x in range(q):
                nb = 0.0
                for p in range(bh, lo - 1, -1):
                    v = 0.0
                    if clo <= p <= chi:
                        v += w_del * bD[t + 1, p - clo]
                    if clo <= p + 1 <= chi:
                        if y[p] == x:
                            v += w_match * bD[t + 1, p + 1 - clo]
                        else:
                            v += w_mis * bD[t + 1, p + 1 - clo]
                    if p == bh:
                        v *= bscale[t]
                    else:
                        v += w_ins * nb
                    S[0, x, p - lo] = v
                    nb = v
            s = 0.0
            for p in range(lo, hi + 1):
                v = 0.0
                for x in range(q):
                    v += prior[t, x] * S[0, x, p - lo]
                bD[t, p - lo] = v
                if v > s:
                    s = v
            if not s > 0.0:
                return None, 0.0, 0, t + 1
            inv = 1.0 / s
            for p in range(lo, hi + 1):
                bD[t, p - lo] *= inv

    # forward: rowD[0] holds the current D row, S[1] the B stage, S[2] the C stage
    rowD[0, 0] = 1.0
    for t in range(N):
        lo = d_lo[t]; hi = d_hi[t]; bh = b_hi[t]
        clo = d_lo[t + 1]; chi = d_hi[t + 1]
        for x in range(q):
            for p in range(clo, chi + 1):
                S[2, x, p - clo] = 0.0
        for x in range(q):
            v = 0.0
            for p in range(lo, bh + 1):
                v = v * w_ins
                if p <= hi:
                    v = v + rowD[0, p - lo] * prior[t, x]
                S[1, x, p - lo] = v
            for p in range(lo, bh + 1):
                v = S[1, x, p - lo]
                if v == 0.0:
                    continue
                sc = bscale[t] if p == bh else 1.0
                if clo <= p <= chi:
                    S[2, x, p - clo] += v * w_del * sc
                if clo <= p + 1 <= chi:
                    if y[p] == x:
                        S[2, x, p + 1 - clo] += v * w_match * sc
                    else:
                        S[2, x, p + 1 - clo] += v * w_mis * sc
        s = 0.0
        for p in range(clo, chi + 1):
            v = 0.0
            for x in range(q):
                v += S[2, x, p - clo]
            rowD[1, p - clo] = v
            if v > s:
                s = v
        if not s > 0.0:
            return None, 0.0, t + 1, 0
        inv = 1.0 / s
        for p in range(clo, chi + 1):
            rowD[0, p - clo] = rowD[1, p - clo] * inv
        loglik += log(s)
        if want_app:
            for x in range(q):
                v = 0.0
                for p in range(clo, chi + 1):
                    v += S[2, x, p - clo] * bD[t + 1, p - clo]
                app[t, x] = v
    if not (d_lo[N] <= M <= d_hi[N]) or not rowD[0, M - d_lo[N]] > 0.0:
        return None, 0.0, N + 1, 0
    loglik += log(rowD[0, M - d_lo[N]])
    return app_arr, loglik, 0, 0
