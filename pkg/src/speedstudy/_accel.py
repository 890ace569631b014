"""Backend selection for the hot numeric kernels.

Kernels in ``_kernels`` exist twice: a loop form compiled with numba and a
vectorized numpy form. The numba path is used when numba imports cleanly and
the ``SPEEDSTUDY_DISABLE_NUMBA`` environment variable is unset (or "0");
otherwise everything falls back to numpy. ``benchmarks/bench_kernels.py``
compares the two.
"""

import os

DISABLE_ENV = "SPEEDSTUDY_DISABLE_NUMBA"

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag instead
    _njit = None
    _HAVE_NUMBA = False


def _env_disabled() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip() not in ("", "0")


NUMBA_ENABLED = _HAVE_NUMBA and not _env_disabled()


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


def compile_kernel(fn):
    """JIT-compile a loop kernel, or return it unchanged on the numpy path."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn
