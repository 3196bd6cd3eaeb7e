"""Numba acceleration shim.

Hot inner loops live in `_kernels`; each carries an ``@maybe_jit`` decorator.
Set ``SPINMETRO_NO_NUMBA=1`` (or ``NUMBA_DISABLE_JIT=1``) to select the pure
numpy/Python fallback path, e.g. for debugging or on platforms without a
working numba install.  `benchmarks/bench_kernels.py` compares the two paths.
"""

import os


def _env_flag(name):
    return os.environ.get(name, "").strip() not in ("", "0")


NUMBA_DISABLED = _env_flag("SPINMETRO_NO_NUMBA") or _env_flag("NUMBA_DISABLE_JIT")

HAS_NUMBA = False
if not NUMBA_DISABLED:
    try:
        import numba

        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA and not NUMBA_DISABLED


def maybe_jit(*args, **kwargs):
    """Apply ``numba.njit`` when enabled, otherwise return the function as-is.

    Usable both bare (``@maybe_jit``) and with options
    (``@maybe_jit(cache=True)``).
    """
    if args and callable(args[0]) and not kwargs:
        func = args[0]
        if USING_NUMBA:
            return numba.njit(func)
        return func

    def wrap(func):
        if USING_NUMBA:
            return numba.njit(*args, **kwargs)(func)
        return func

    return wrap


def set_threads(n):
    """Cap numba's worker threads; no-op on the fallback path."""
    if USING_NUMBA and n is not None and n >= 1:
        numba.set_num_threads(int(n))


def backend_name():
    return "numba" if USING_NUMBA else "numpy"
