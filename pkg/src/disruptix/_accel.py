"""Kernel backend selection.

Hot loops are written once and compiled with numba when it is importable.
Setting ``DISRUPTIX_JIT=0`` forces the pure numpy / pure Python path, which
is also what runs when numba is missing.  ``DISRUPTIX_THREADS`` caps the
number of numba worker threads.
"""
import os
import warnings

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # tbb probing warns on older system TBB builds
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            fn = args[0]
            fn.py_func = fn
            return fn

        def wrapper(fn):
            fn.py_func = fn
            return fn

        return wrapper


def jit_enabled() -> bool:
    """True when compiled kernels should be used (read at call time)."""
    if not HAVE_NUMBA:
        return False
    return os.environ.get("DISRUPTIX_JIT", "1").strip().lower() not in ("0", "false", "no", "off")


def backend() -> str:
    return "numba" if jit_enabled() else "numpy"


def resolve_backend(name: str | None) -> str:
    if name is None:
        return backend()
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba" and not HAVE_NUMBA:
        warnings.warn("numba is not importable; using the numpy backend")
        return "numpy"
    return name


def worker_count() -> int:
    """Worker cap from DISRUPTIX_THREADS, bounded by the CPU count."""
    ncpu = os.cpu_count() or 1
    raw = os.environ.get("DISRUPTIX_THREADS")
    if not raw:
        return ncpu
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"DISRUPTIX_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"DISRUPTIX_THREADS must be a positive integer, got {raw!r}")
    return min(n, ncpu)


def apply_thread_cap() -> int:
    n = worker_count()
    if HAVE_NUMBA:
        n = min(n, numba.config.NUMBA_NUM_THREADS)
        numba.set_num_threads(n)
    return n
