"""Pick the walk kernels: compiled extension if it imports, numpy otherwise.

Set ``BOXTRANSPORT_PURE_PYTHON=1`` to force the numpy kernels.
"""

from __future__ import annotations

import os

from . import _walk_py

try:
    from . import _walk as _compiled
except ImportError:  # extension not built
    _compiled = None

if os.environ.get("BOXTRANSPORT_PURE_PYTHON") == "1" or _compiled is None:
    default = _walk_py
else:
    default = _compiled

NAME = "compiled" if default is _compiled else "python"


def get(name: str = "auto"):
    """Kernel module by name: ``auto``, ``compiled`` or ``python``."""
    if name == "auto":
        return default
    if name == "python":
        return _walk_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled walk kernels are not available; rebuild the package")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def compiled_available() -> bool:
    return _compiled is not None
