"""Hot-kernel backend selection.

The compiled extension is preferred; the pure-numpy module is used when the
extension is missing (source checkout without build_ext) or when the
environment variable QMMPC_PURE_PYTHON is set to a truthy value.
"""

import os

_force_pure = os.environ.get("QMMPC_PURE_PYTHON", "").lower() not in ("", "0", "false", "no")

if _force_pure:
    from . import _py as _impl
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _py as _impl

BACKEND = _impl.NAME
eval_affine = _impl.eval_affine
block_logdet = _impl.block_logdet
block_grad_hess = _impl.block_grad_hess

__all__ = ["BACKEND", "eval_affine", "block_logdet", "block_grad_hess"]
