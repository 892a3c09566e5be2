"""Kernel selection: compiled extension if importable, numpy fallback otherwise."""
import os

from . import _fallback

kernels = _fallback
COMPILED = False

if not os.environ.get("NLOCAL_PURE_PYTHON"):
    try:
        from . import _kernels as kernels  # noqa: F811
        COMPILED = True
    except ImportError:
        pass

jacobi_eigh = kernels.jacobi_eigh
linear_lhs_batch = kernels.linear_lhs_batch
star_lhs_batch = kernels.star_lhs_batch
