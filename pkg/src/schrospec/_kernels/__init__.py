"""Kernel backend selection.

The hot kernels (jet/value MLP passes and the Sturm-count scan) exist
twice: a compiled Cython extension (``schrospec._kernels._core``) and a
pure-NumPy fallback (``numpy_core``).  The compiled one is used when it
imported successfully; set ``SCHROSPEC_BACKEND=python`` to force the
fallback or ``SCHROSPEC_BACKEND=compiled`` to fail loudly when the
extension is missing.
"""

from __future__ import annotations

import os

from . import numpy_core

_choice = os.environ.get("SCHROSPEC_BACKEND", "auto").lower()
if _choice not in ("auto", "compiled", "python"):
    raise ValueError(f"SCHROSPEC_BACKEND must be auto|compiled|python, got {_choice!r}")

if _choice == "python":
    _impl = numpy_core
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = numpy_core

BACKEND = _impl.BACKEND
jet_forward = _impl.jet_forward
jet_backward = _impl.jet_backward
value_forward = _impl.value_forward
value_backward = _impl.value_backward
sturm_counts = _impl.sturm_counts

__all__ = [
    "BACKEND",
    "numpy_core",
    "jet_forward",
    "jet_backward",
    "value_forward",
    "value_backward",
    "sturm_counts",
]
