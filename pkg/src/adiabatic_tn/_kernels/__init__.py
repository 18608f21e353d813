"""Hot kernels with a compiled backend and a pure-numpy fallback.

The compiled extension is used when it imports; otherwise the numpy
implementation is selected. ``use_backend`` switches explicitly, which the
benchmarks and the backend-equivalence tests rely on.
"""

from __future__ import annotations

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

__all__ = ["available_backends", "backend", "two_site_update", "use_backend"]

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_active = "cython" if _ckernels is not None else "python"


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend() -> str:
    """Name of the backend currently serving kernel calls."""
    return _active


def use_backend(name: str) -> str:
    """Select a backend by name and return the previous one."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; have {available_backends()}")
    previous, _active = _active, name
    return previous


def two_site_update(a, b, gate, cutoff, max_bond, absorb_right):
    """Dispatch to the active backend; see ``_pykernels.two_site_update``."""
    return _BACKENDS[_active].two_site_update(a, b, gate, float(cutoff), int(max_bond), bool(absorb_right))
