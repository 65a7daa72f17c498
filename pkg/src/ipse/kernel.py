"""Backend selection for the simulation kernel.

The compiled extension is used when importable; set ``IPSE_PURE_PYTHON=1``
to force the pure-Python kernel.
"""

import os

from . import _kernel_py

if os.environ.get("IPSE_PURE_PYTHON"):
    _impl = _kernel_py
else:
    try:
        from . import _kernel as _impl
    except ImportError:
        _impl = _kernel_py

BACKEND = "compiled" if _impl is not _kernel_py else "python"

legal_placements = _impl.legal_placements
place = _impl.place
board_features = _impl.board_features
enumerate_actions = _impl.enumerate_actions
rollout_values = _impl.rollout_values
play_games = _impl.play_games


def backends():
    """Map of available backend name -> module (for tests and benchmarks)."""
    out = {"python": _kernel_py}
    try:
        from . import _kernel
    except ImportError:
        pass
    else:
        out["compiled"] = _kernel
    return out
