"""Kernel selection: compiled extension when available, numpy fallback otherwise.

Set ``STRUTFORGE_PURE=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("STRUTFORGE_PURE") != "1":
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

clip_halfplane = _impl.clip_halfplane
envelope_cell = _impl.envelope_cell
pivot = _impl.pivot

__all__ = ["BACKEND", "clip_halfplane", "envelope_cell", "pivot"]
