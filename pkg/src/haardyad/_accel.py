"""Numba acceleration toggle.

Hot numeric kernels ship in two builds: a numba ``@njit`` build and a pure
numpy build. The environment variable ``HAARDYAD_NUMBA`` selects the path:
``0``/``false``/``no`` forces numpy, anything else (or unset) uses numba
when it imports cleanly. The flag is read once at import time.

Both builds of every kernel are importable regardless of the flag so the
benchmark and the equivalence tests can compare them directly.
"""

import os


def _detect() -> bool:
    flag = os.environ.get("HAARDYAD_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "no", "off"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _detect()

if NUMBA_ENABLED:
    from numba import njit
else:  # pragma: no cover - exercised via HAARDYAD_NUMBA=0 runs

    def njit(*args, **kwargs):
        """No-op stand-in so jit builds still define plain functions."""

        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap
