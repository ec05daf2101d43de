"""Backend selection: compiled Cython kernels with a pure-numpy fallback.

Set ``NOISYLAB_BACKEND`` to ``cython``, ``python``, or ``auto`` (default)
before import to control the choice. The active backend name is recorded in
every run manifest, since the two backends agree only to floating-point
round-off, not bit for bit.
"""

from __future__ import annotations

import os

_requested = os.environ.get("NOISYLAB_BACKEND", "auto").lower()

if _requested not in ("auto", "cython", "python"):
    raise RuntimeError(
        f"NOISYLAB_BACKEND={_requested!r} not understood "
        "(expected auto, cython, or python)"
    )

if _requested == "python":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        if _requested == "cython":
            raise RuntimeError(
                "NOISYLAB_BACKEND=cython but the compiled extension is not "
                "available; reinstall with a C compiler or use auto/python"
            ) from None
        from . import _kernels_py as kernels  # type: ignore[no-redef]

BACKEND: str = kernels.NAME

PROB_FLOOR: float = kernels.PROB_FLOOR
