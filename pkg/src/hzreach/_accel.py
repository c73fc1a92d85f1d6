"""Optional numba acceleration.

Hot kernels are decorated with :func:`njit`.  When numba is missing, or the
environment variable ``HZREACH_DISABLE_NUMBA`` is set to a truthy value, the
decorator returns the plain Python/numpy function unchanged.
"""
import os

_DISABLED = os.environ.get("HZREACH_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba as _nb

    USING_NUMBA = True

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _nb.njit(*args, **kwargs)

except ImportError:
    USING_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


__all__ = ["USING_NUMBA", "njit"]
