"""Batch kernels with a compiled core and a pure NumPy fallback.

The compiled extension is selected at import time when available; set the
environment variable ``STEINPAIRS_FORCE_PURE=1`` to force the fallback.
"""

import os

from . import _pure

if os.environ.get("STEINPAIRS_FORCE_PURE"):
    _impl = _pure
else:
    try:
        from . import _ext as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND
circular_run_counts = _impl.circular_run_counts
window_replace_deltas = _impl.window_replace_deltas


def available_backends():
    """Return the importable kernel backends keyed by name."""
    backends = {"pure": _pure}
    try:
        from . import _ext

        backends["compiled"] = _ext
    except ImportError:
        pass
    return backends
