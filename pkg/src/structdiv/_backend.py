"""Selects the compiled kernels when importable, else the pure-Python paths.

Set ``STRUCTDIV_PURE_PYTHON=1`` to force the fallback.
"""

import os

compiled = None
if not os.environ.get("STRUCTDIV_PURE_PYTHON"):
    try:
        from . import _kernels as compiled  # type: ignore[no-redef]
    except ImportError:
        compiled = None

HAVE_COMPILED = compiled is not None
NAME = "compiled" if HAVE_COMPILED else "python"
