"""Kernel backend selection.

The hot inner loops in :mod:`arcgossip.kernels` are written once as plain
Python functions and compiled with numba's ``@njit`` when the "numba" lane
is active.  The lane is chosen per process, at first import, from the
``ARCGOSSIP_BACKEND`` environment variable:

* ``numba`` -- require numba, fail loudly if it is missing (default when
  numba imports cleanly);
* ``numpy`` -- leave the kernels as interpreted Python/NumPy.  Slow, but
  dependency-free and bit-for-bit identical to the compiled lane.

Both lanes execute the same statements in the same order with plain IEEE
double arithmetic (no fastmath), so trajectories, event logs and CSV output
are byte-identical across lanes.  ``benchmarks/bench_backends.py`` compares
their throughput.
"""

import os

_ENV_VAR = "ARCGOSSIP_BACKEND"
_VALID = ("numba", "numpy")


def _resolve():
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if requested and requested not in _VALID:
        raise RuntimeError(
            f"{_ENV_VAR}={requested!r} is not a valid backend; choose one of {_VALID}"
        )
    if requested == "numpy":
        return "numpy", None
    try:
        from numba import njit
    except ImportError:
        if requested == "numba":
            raise RuntimeError(
                f"{_ENV_VAR}=numba was requested but numba is not importable"
            )
        return "numpy", None
    return "numba", njit


BACKEND, _njit = _resolve()


def jit_kernel(func):
    """Compile ``func`` on the numba lane; return it unchanged on the numpy lane."""
    if BACKEND == "numba":
        return _njit(cache=True)(func)
    return func


def backend_name():
    return BACKEND
