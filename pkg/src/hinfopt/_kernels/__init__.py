"""Numerical kernels: compiled fast path with a pure-NumPy fallback.

The compiled extension is preferred when importable.  Set the environment
variable ``HINFOPT_BACKEND`` to ``python`` to force the fallback or to
``cython`` to require the extension (raising if it is missing).
"""

import os

from . import pure

_requested = os.environ.get("HINFOPT_BACKEND", "auto").lower()

if _requested in ("auto", "cython"):
    try:
        from . import _speedups as _impl

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = pure
        BACKEND = "python"
elif _requested == "python":
    _impl = pure
    BACKEND = "python"
else:
    raise ValueError(f"unrecognized HINFOPT_BACKEND={_requested!r}")

sweep = _impl.sweep
clarke_at = _impl.clarke_at
riccati = _impl.riccati


def get_backend(name: str):
    """Return a kernel module by name ('python' or 'cython'); for benchmarks."""
    if name == "python":
        return pure
    if name == "cython":
        from . import _speedups

        return _speedups
    raise ValueError(f"unknown backend {name!r}")
