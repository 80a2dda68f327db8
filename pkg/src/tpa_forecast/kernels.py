"""Kernel backend selection.

The compiled extension is used when it imports cleanly; set
``TPA_FORECAST_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _lstm_py

try:
    if os.environ.get("TPA_FORECAST_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _lstm_ext as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _lstm_py
    BACKEND = "python"

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
