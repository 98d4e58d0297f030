"""Numba switch.

Hot kernels are compiled with numba when it is importable and the
``OUBL_NUMBA`` environment variable is not set to ``0``.  Every kernel
has a pure-numpy twin; :func:`use_numba` decides which one runs.
"""
import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    NUMBA_AVAILABLE = False


def _env_enabled():
    return os.environ.get("OUBL_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


def use_numba():
    """True when the compiled kernels should be used."""
    return NUMBA_AVAILABLE and _env_enabled()


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if NUMBA_AVAILABLE:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def n_threads():
    """Worker count for thread-parallel maps (``OUBL_THREADS``, default 1)."""
    try:
        return max(1, int(os.environ.get("OUBL_THREADS", "1")))
    except ValueError:
        return 1
