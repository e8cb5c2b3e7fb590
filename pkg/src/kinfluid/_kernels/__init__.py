"""Kernel backend dispatch.

The hot inner loops (phase-space upwind sweeps, batched tridiagonal
solves) run as numba @njit compilations of the loop kernels by default.
Set KINFLUID_KERNELS=numpy to force the vectorized pure-numpy fallback,
or KINFLUID_KERNELS=numba to fail hard if numba is unavailable.
"""
import os

_choice = os.environ.get("KINFLUID_KERNELS", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"KINFLUID_KERNELS must be one of auto|numba|numpy, got {_choice!r}"
    )

USING_NUMBA = False
if _choice in ("auto", "numba"):
    try:
        from numba import njit

        from . import loops as _loops

        upwind_transport = njit(cache=True)(_loops.upwind_transport)
        upwind_drag = njit(cache=True)(_loops.upwind_drag)
        thomas_batch = njit(cache=True)(_loops.thomas_batch)
        USING_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise

if not USING_NUMBA:
    from .numpy_impl import thomas_batch, upwind_drag, upwind_transport

BACKEND = "numba" if USING_NUMBA else "numpy"

__all__ = ["BACKEND", "USING_NUMBA", "upwind_transport", "upwind_drag", "thomas_batch"]
