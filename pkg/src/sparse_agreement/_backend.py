"""Select the trial-kernel backend at import time.

The compiled extension is preferred when present; the pure-numpy fallback
is always available. ``SPA_BACKEND`` (``compiled`` / ``python`` / ``auto``)
forces the choice.
"""

from __future__ import annotations

import os


def _select():
    choice = os.environ.get("SPA_BACKEND", "auto").strip().lower() or "auto"
    if choice in ("python", "numpy", "pure"):
        from . import _kernels_py as impl
    elif choice in ("compiled", "cython", "c"):
        from . import _kernels as impl  # type: ignore[attr-defined]
    elif choice == "auto":
        try:
            from . import _kernels as impl  # type: ignore[attr-defined]
        except ImportError:
            from . import _kernels_py as impl
    else:
        raise ValueError(f"SPA_BACKEND={choice!r}; expected compiled, python, or auto")
    return impl


_impl = _select()
TrialKernel = _impl.TrialKernel
BACKEND_NAME: str = _impl.NAME


def available_backends() -> tuple[str, ...]:
    names = []
    try:
        from . import _kernels  # noqa: F401

        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return tuple(names)
