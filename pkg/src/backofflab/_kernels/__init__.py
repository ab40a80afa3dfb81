"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the pure
Python twin takes over.  Set BACKOFFLAB_KERNEL=pure to force the fallback
(useful for benchmarking and cross-checking).
"""

import os

from . import pure as _pure

if os.environ.get("BACKOFFLAB_KERNEL", "") == "pure":
    _impl = _pure
else:
    try:
        from . import speed as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND_NAME


def kpoint_run(*args, record_events=False, **kwargs):
    """Dispatch to the selected backend; event recording always runs pure."""
    if record_events:
        return _pure.kpoint_run(*args, record_events=True, **kwargs)
    return _impl.kpoint_run(*args, **kwargs)


def backends():
    """Return the available kernel modules, keyed by backend name."""
    out = {_pure.BACKEND_NAME: _pure}
    try:
        from . import speed
        out[speed.BACKEND_NAME] = speed
    except ImportError:
        pass
    return out
