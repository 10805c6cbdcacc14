"""Pure-numpy fallback for the barrier hot kernels.

Same call signatures as the compiled module; selected at import time by
qmmpc._kernels when the extension is unavailable or disabled.
"""

import math

import numpy as np

NAME = "numpy"


def eval_affine(f0, coeffs, ids, z, out):
    """out <- f0 + sum_k z[ids[k]] * coeffs[k]."""
    np.copyto(out, f0)
    if ids.size:
        out += np.tensordot(z[ids], coeffs, axes=1)


def block_logdet(f0, coeffs, ids, z, fwork):
    """log det of the evaluated block, or NaN when it is not PD."""
    eval_affine(f0, coeffs, ids, z, fwork)
    try:
        chol = np.linalg.cholesky(fwork)
    except np.linalg.LinAlgError:
        return math.nan
    diag = np.diagonal(chol)
    if not np.all(diag > 0.0):
        return math.nan
    return float(2.0 * np.sum(np.log(diag)))


def block_grad_hess(f0, coeffs, ids, z, grad, hess, fwork, gwork):
    """Accumulate the log-det barrier gradient and Hessian of one block.

    grad[i] -= tr(F^-1 F_i), hess[i, j] += tr(F^-1 F_i F^-1 F_j) for the
    global variable ids appearing in the block. Returns log det F, or NaN
    (with grad/hess untouched) when F is not PD.
    """
    eval_affine(f0, coeffs, ids, z, fwork)
    try:
        chol = np.linalg.cholesky(fwork)
    except np.linalg.LinAlgError:
        return math.nan
    diag = np.diagonal(chol)
    if not np.all(diag > 0.0):
        return math.nan
    if ids.size:
        gmats = np.linalg.solve(fwork[None, :, :], coeffs)
        grad[ids] -= np.trace(gmats, axis1=1, axis2=2)
        hess[np.ix_(ids, ids)] += np.einsum("iab,jba->ij", gmats, gmats)
    return float(2.0 * np.sum(np.log(diag)))
