"""Backend selection for the hot kernels.

Kernels come in two flavours: a numba ``@njit`` version and a pure
numpy/Python fallback. Set ``VBQ_DISABLE_NUMBA=1`` to force the fallback at
import time, or switch at runtime with :func:`use_backend`. Both backends
must produce bit-identical results.
"""
import contextlib
import os

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is optional
    _numba = None

NUMBA_AVAILABLE = _numba is not None

_state = {
    "backend": "numba"
    if NUMBA_AVAILABLE and os.environ.get("VBQ_DISABLE_NUMBA", "0") in ("", "0")
    else "numpy"
}


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise."""
    if NUMBA_AVAILABLE:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend():
    return _state["backend"]


def set_backend(name):
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba is not installed")
    _state["backend"] = name


@contextlib.contextmanager
def use_backend(name):
    old = _state["backend"]
    set_backend(name)
    try:
        yield
    finally:
        _state["backend"] = old
