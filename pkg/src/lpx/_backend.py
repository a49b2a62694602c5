"""Select the compiled kernels when available.

Set ``LPX_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("LPX_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _ck
    except ImportError:  # extension not built
        pass
    else:
        kernels = _ck
        BACKEND = "cython"

gauss_jordan_int = kernels.gauss_jordan_int
gauss_jordan_gauss = kernels.gauss_jordan_gauss
rk4_quadratic = kernels.rk4_quadratic
