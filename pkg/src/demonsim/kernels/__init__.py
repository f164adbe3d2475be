"""Hot-loop kernels with a compiled fast path and a pure-python fallback.

The compiled Cython extension is preferred when it imported cleanly; setting
the environment variable DEMONSIM_FORCE_PYTHON to any non-empty value forces
the numpy implementation instead. Both implement the identical update (see
qubit_np.py) and the test suite pins them together numerically.
"""

import os

from . import qubit_np

_forced = bool(os.environ.get("DEMONSIM_FORCE_PYTHON"))
if _forced:
    _impl = qubit_np
    BACKEND = "numpy"
else:
    try:
        from . import _qubit_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = qubit_np
        BACKEND = "numpy"

run_qubit_sme = _impl.run_qubit_sme

__all__ = ["BACKEND", "run_qubit_sme", "qubit_np"]
