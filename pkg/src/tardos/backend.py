"""Kernel backend selection: compiled extension if available, NumPy otherwise.

``TARDOS_BACKEND=py`` or ``TARDOS_BACKEND=c`` forces a choice (the latter
raises if the extension is missing).  The active module is exported as ``K``;
both backends implement the same functions with bit-identical results.
"""
from __future__ import annotations

import os

from . import _kernels_py

_forced = os.environ.get("TARDOS_BACKEND", "").lower()

if _forced in ("py", "python", "numpy"):
    K = _kernels_py
else:
    try:
        from . import _ckernels as K  # type: ignore[no-redef]
    except ImportError:
        if _forced in ("c", "cython", "compiled"):
            raise ImportError(
                "TARDOS_BACKEND=c requested but the compiled extension "
                "tardos._ckernels is not built"
            )
        K = _kernels_py

BACKEND: str = K.BACKEND


def available_backends():
    """Names of importable kernel backends (for benchmarks and tests)."""
    out = {"numpy": _kernels_py}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
