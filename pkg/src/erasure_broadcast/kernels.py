"""Kernel dispatch: the compiled extension when importable, else pure Python.

Set ``ERASURE_BROADCAST_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("ERASURE_BROADCAST_PURE", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _ext as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "compiled" if _impl is not _fallback else "python"

nearest_codewords = _impl.nearest_codewords
rref_mod_prime = _impl.rref_mod_prime
