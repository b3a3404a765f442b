"""Kernel backend selection.

Callers go through attribute access (``kernels.reward(...)``) so a switch
takes effect everywhere.

The compiled extension is used when it imports; otherwise the pure-Python
module. ``use_backend`` switches explicitly (tests and the benchmark use it).
"""
from __future__ import annotations

import sys

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_NAMES = ("near_field", "reward", "masked_argmax", "random_walk", "gauss_newton")

GN_OK = _kernels_py.GN_OK
GN_DEGENERATE = _kernels_py.GN_DEGENERATE

BACKEND = ""


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _ckernels is not None else [])


def get_module(name: str):
    if name == "compiled":
        if _ckernels is None:
            raise ImportError("compiled kernels not built; run `pip install -e .`")
        return _ckernels
    if name == "python":
        return _kernels_py
    raise ValueError(f"unknown backend {name!r}")


def use_backend(name: str) -> None:
    """Rebind the module-level kernel functions to ``name``'s implementations."""
    global BACKEND
    mod = get_module(name)
    this = sys.modules[__name__]
    for fn in _NAMES:
        setattr(this, fn, getattr(mod, fn))
    BACKEND = name


use_backend("compiled" if _ckernels is not None else "python")

__all__ = ["BACKEND", "available_backends", "get_module", "use_backend", *_NAMES]
