"""Backend selection for the pairwise intersection kernel.

The compiled extension is used when it imported cleanly; otherwise the
numpy fallback takes over.  Set RANDINF_KERNEL=c or =py to force a
backend (forcing "c" when the extension is missing raises at import).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernel_py

try:
    from . import _kernel_c
except ImportError:
    _kernel_c = None

_BACKENDS = {"py": _kernel_py}
if _kernel_c is not None:
    _BACKENDS["c"] = _kernel_c


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def _initial_backend() -> str:
    choice = os.environ.get("RANDINF_KERNEL", "auto").lower()
    if choice == "auto":
        return "c" if "c" in _BACKENDS else "py"
    if choice not in _BACKENDS:
        raise ImportError(
            f"RANDINF_KERNEL={choice!r} but available backends are "
            f"{available_backends()}"
        )
    return choice


_active = _initial_backend()


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    """Switch the kernel backend (used by tests and benchmarks)."""
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}, have {available_backends()}")
    global _active
    _active = name


def cross_roots_indexed(num, den, ia, ib, **tols):
    """Real intersection points for the function pairs (ia[r], ib[r]).

    Dispatches to the active backend; see ``_kernel_py`` for the contract.
    """
    mod = _BACKENDS[_active]
    if mod is _kernel_py:
        return _kernel_py.cross_roots_indexed(num, den, ia, ib, **tols)
    num = np.ascontiguousarray(num, dtype=np.float64)
    den = np.ascontiguousarray(den, dtype=np.float64)
    ia = np.ascontiguousarray(ia, dtype=np.int64)
    ib = np.ascontiguousarray(ib, dtype=np.int64)
    return mod.cross_roots_indexed(num, den, ia, ib, **tols)


poly_real_roots_batch = _kernel_py.poly_real_roots_batch
