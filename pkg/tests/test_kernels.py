import os
import subprocess
import sys

import numpy as np
import pytest

import idsrecon
from idsrecon.kernels import get_backend
from idsrecon.perf import available_backends, format_timings, time_kernels


def _backend_in_subprocess(flag):
    env = {**os.environ, "IDSRECON_PURE_PYTHON": flag}
    res = subprocess.run([sys.executable, "-c", "import idsrecon; print(idsrecon.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    return res.stdout.strip()


def test_pure_python_switch():
    assert _backend_in_subprocess("1") == "python"


def test_compiled_backend_preferred_when_built():
    expected = "cython" if "cython" in available_backends() else "python"
    assert _backend_in_subprocess("0") == expected
    assert idsrecon.BACKEND in ("python", "cython")


def test_get_backend():
    assert get_backend("python").forward is not None
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_timing_smoke():
    timings = time_kernels(N=20, repeats=2)
    assert {t.backend for t in timings} == set(available_backends())
    assert all(t.seconds_per_decode > 0 for t in timings)
    text = format_timings(timings)
    assert text.splitlines()[0].startswith("backend")
    assert np.isfinite(timings[0].seconds_per_decode)
