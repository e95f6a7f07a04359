"""Backend selection for the hot loops.

The compiled extension is used when importable; set the environment
variable ``UDTRANSFER_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("UDTRANSFER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

wordpiece = _impl.wordpiece
mst = _impl.mst

BACKENDS = {"python": _pykernels}
if BACKEND == "cython":
    BACKENDS["cython"] = _impl
