"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python ``_kernels_py`` module. Setting ``AUTOZIGZAG_PURE_PYTHON=1``
forces the fallback.
"""

import importlib
import os

from . import _kernels_py


def load(name: str):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        return importlib.import_module("autozigzag._kernels")
    raise ValueError(f"unknown backend {name!r}")


def available() -> list:
    names = ["python"]
    try:
        load("compiled")
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


if os.environ.get("AUTOZIGZAG_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        kernels = load("compiled")
        BACKEND = "compiled"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"
