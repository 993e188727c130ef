"""Kernel backend selection.

The compiled extension (``bagid._kernels._native``) is preferred when it
imported cleanly; otherwise the pure NumPy kernels are used. Set
``BAGID_KERNEL=pure`` or ``BAGID_KERNEL=native`` to force a backend.
"""

from __future__ import annotations

import os

from . import pure as _pure

try:
    from . import _native as _native_mod
except ImportError:
    _native_mod = None


def available_backends() -> tuple[str, ...]:
    return ("pure", "native") if _native_mod is not None else ("pure",)


def get_backend(name: str | None = None):
    """Return a kernel module by name; None resolves the default."""
    if name is None:
        name = os.environ.get("BAGID_KERNEL") or (
            "native" if _native_mod is not None else "pure"
        )
    if name == "pure":
        return _pure
    if name == "native":
        if _native_mod is None:
            raise RuntimeError(
                "native kernel backend requested via BAGID_KERNEL but the "
                "compiled extension is not available"
            )
        return _native_mod
    raise ValueError(f"unknown kernel backend {name!r}")


_impl = get_backend()

BACKEND_NAME: str = _impl.BACKEND_NAME
bag_forward = _impl.bag_forward
bag_backward = _impl.bag_backward
