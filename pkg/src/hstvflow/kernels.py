"""Backend selection for the inner dual loop.

The compiled Cython extension is used when it imports; otherwise, or when
``HSTVFLOW_PURE_PYTHON`` is set to a non-empty value other than ``0``, the
numpy fallback is used.  Both expose ``run_dual`` with identical semantics.
"""

import os

from . import _fallback

BACKENDS = {"python": _fallback.run_dual}

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None
else:
    BACKENDS["cython"] = _kernels.run_dual

if os.environ.get("HSTVFLOW_PURE_PYTHON", "") not in ("", "0"):
    DEFAULT_BACKEND = "python"
else:
    DEFAULT_BACKEND = "cython" if "cython" in BACKENDS else "python"


def get_backend(name=None):
    """Return the ``run_dual`` implementation for `name` (default: best available)."""
    name = DEFAULT_BACKEND if name is None else name
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown or unavailable backend {name!r}; available: {sorted(BACKENDS)}"
        ) from None
