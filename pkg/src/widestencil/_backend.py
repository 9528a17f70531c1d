"""Select the iteration-kernel backend at import time.

The compiled Cython extension is preferred; the NumPy/SciPy module is the
fallback.  Set WIDESTENCIL_BACKEND=python (or =cython) to force a choice;
forcing cython raises if the extension was not built.
"""

from __future__ import annotations

import os

_forced = os.environ.get("WIDESTENCIL_BACKEND", "").strip().lower()

if _forced in ("python", "py"):
    from . import _kernels_py as kernels

    BACKEND = "python"
elif _forced == "cython":
    from . import _kernels as kernels  # type: ignore[no-redef]

    BACKEND = "cython"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels

        BACKEND = "python"


def backend_name() -> str:
    """Name of the active kernel backend: 'cython' or 'python'."""
    return BACKEND
