"""Selects the greedy-merge kernel implementation at import time.

The compiled Cython extension is preferred; the pure-numpy fallback is used
when the extension is unavailable or when ``CORRSLOT_PURE_PYTHON=1`` is set
in the environment. Both implementations are semantically identical.
"""
import os

from . import _merge_py

if os.environ.get("CORRSLOT_PURE_PYTHON") == "1":
    _impl = _merge_py
    BACKEND = "python"
else:
    try:
        from . import _merge_core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _merge_py
        BACKEND = "python"

RULE_MAX = _merge_py.RULE_MAX
RULE_SUM = _merge_py.RULE_SUM
RULE_CROSS_SUM = _merge_py.RULE_CROSS_SUM

merge_groups = _impl.merge_groups
