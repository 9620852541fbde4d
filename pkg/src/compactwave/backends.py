"""Selection of the numerical backend for the hot kernels.

Two implementations of every hot kernel exist: a numba ``@njit`` version
(parallel over grid lines) and a pure-numpy fallback.  The active one is
chosen once at import time from the environment variable
``COMPACTWAVE_BACKEND``:

* ``auto`` (default) -- numba if it imports, numpy otherwise;
* ``numba``          -- require numba, raise if unavailable;
* ``numpy``          -- force the pure-numpy path.

Both paths execute the same arithmetic in the same order, so results are
bit-identical; ``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import os
import warnings

_ENV_VAR = "COMPACTWAVE_BACKEND"
_choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"{_ENV_VAR} must be one of auto|numba|numpy, got {_choice!r}")

USE_NUMBA = False
if _choice in ("auto", "numba"):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # TBB version chatter on some hosts
            import numba  # noqa: F401

        USE_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")

BACKEND = "numba" if USE_NUMBA else "numpy"


def set_workers(workers: int | None) -> int:
    """Pin the worker-thread count for parallel kernels.

    Returns the count actually in effect.  On the numpy backend kernels are
    single-threaded and the request is ignored.
    """
    if not USE_NUMBA:
        return 1
    import numba

    if workers is not None:
        numba.set_num_threads(max(1, int(workers)))
    return numba.get_num_threads()


def max_workers() -> int:
    if not USE_NUMBA:
        return 1
    import numba

    return numba.config.NUMBA_NUM_THREADS
