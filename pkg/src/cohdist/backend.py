"""Kernel backend selection: compiled extension if built, numpy otherwise.

The environment variable ``COHDIST_BACKEND`` (``cython`` or ``python``)
forces a choice at import time; ``set_backend`` switches at run time,
which is what the benchmark harness and the parity tests use.
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None

_BACKENDS = {"python": _kernels_py}
if _kernels_cy is not None:
    _BACKENDS["cython"] = _kernels_cy


def _initial_backend():
    forced = os.environ.get("COHDIST_BACKEND")
    if forced:
        if forced not in _BACKENDS:
            raise RuntimeError(
                f"COHDIST_BACKEND={forced!r} requested but only "
                f"{sorted(_BACKENDS)} are available"
            )
        return forced
    return "cython" if "cython" in _BACKENDS else "python"


_active = _initial_backend()


def active_backend() -> str:
    return _active


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def set_backend(name: str) -> None:
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(_BACKENDS)}")
    global _active
    _active = name


def jacobi_sweeps(a, v, tol, max_sweeps):
    return _BACKENDS[_active].jacobi_sweeps(a, v, tol, max_sweeps)
