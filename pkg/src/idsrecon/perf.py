"""Timing helpers for comparing the compiled and numpy kernels."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _pykernel
from .bcjr import _kernel_args
from .channel import DATASET_PARAMS, ChannelParams, random_source, transmit
from .core import DNA, uniform_table
from .trellis import build_spec, default_delta


@dataclass
class KernelTiming:
    backend: str
    N: int
    delta: object
    seconds_per_decode: float
    repeats: int


def available_backends() -> dict:
    out = {"python": _pykernel}
    try:
        from . import _ckernel
    except ImportError:
        return out
    out["cython"] = _ckernel
    return out


def time_kernels(N: int = 110, params: ChannelParams = DATASET_PARAMS, repeats: int = 20,
                 seed: int = 0, delta="auto") -> list[KernelTiming]:
    """Seconds per symbol-posterior decode for every importable backend.

    All backends run on the same trellis and prior, and their posteriors
    are checked against each other before timing.
    """
    rng = np.random.default_rng(seed)
    x = random_source(N, rng, DNA)
    y = transmit(x, params, rng, DNA)
    if delta == "auto":
        delta = default_delta(N, params)
    spec = build_spec(N, y, delta, DNA, params)
    args = _kernel_args(spec, uniform_table(N, len(DNA)))
    backends = available_backends()

    reference = None
    for name, impl in backends.items():
        app = impl.decode_app(*args)[0]
        app = app / app.sum(axis=1, keepdims=True)
        if reference is None:
            reference = app
        elif not np.allclose(app, reference, rtol=1e-10, atol=0.0):
            raise AssertionError(f"backend {name} disagrees with the reference kernel")

    out = []
    for name, impl in backends.items():
        impl.decode_app(*args)  # warm-up
        t0 = time.perf_counter()
        for _ in range(repeats):
            impl.decode_app(*args)
        out.append(KernelTiming(name, N, delta, (time.perf_counter() - t0) / repeats, repeats))
    return out


def format_timings(timings: list[KernelTiming]) -> str:
    base = next((t.seconds_per_decode for t in timings if t.backend == "python"), None)
    lines = ["backend  N     delta  ms/decode  speedup"]
    for t in timings:
        speed = base / t.seconds_per_decode if base else float("nan")
        lines.append(f"{t.backend:<8} {t.N:<5} {str(t.delta):<6} {1e3 * t.seconds_per_decode:9.3f}  {speed:6.1f}x")
    return "\n".join(lines)
