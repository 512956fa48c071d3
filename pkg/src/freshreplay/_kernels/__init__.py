"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
functionally identical.  ``FRESHREPLAY_KERNELS=python|compiled`` forces a
backend (``compiled`` raises if the extension is missing), which the
benchmark uses to compare the two.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _py


def _load_compiled() -> ModuleType:
    from . import _ct

    return _ct


def get_backend(name: str) -> ModuleType:
    if name == "python":
        return _py
    if name == "compiled":
        return _load_compiled()
    raise ValueError(f"unknown kernel backend: {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    try:
        _load_compiled()
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


_forced = os.environ.get("FRESHREPLAY_KERNELS", "").strip().lower()
if _forced:
    kernels = get_backend(_forced)
else:
    try:
        kernels = _load_compiled()
    except ImportError:
        kernels = _py

BACKEND = kernels.BACKEND_NAME
DECAY_FLOOR = _py.DECAY_FLOOR
