"""Hot-kernel dispatch: compiled extension when available, pure Python otherwise.

Set ``QDDLAB_PURE_PYTHON=1`` to force the pure kernels (used by the test
suite and the benchmark to compare both implementations).
"""
import os

if os.environ.get("QDDLAB_PURE_PYTHON") == "1":
    from . import pure as _impl
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pure as _impl

BACKEND = _impl.BACKEND
matmul = _impl.matmul
kron = _impl.kron
frob_sq = _impl.frob_sq
rot_cols = _impl.rot_cols
rot_rows = _impl.rot_rows

__all__ = ["BACKEND", "matmul", "kron", "frob_sq", "rot_cols", "rot_rows"]
