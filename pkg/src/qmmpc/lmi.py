"""Semidefinite programs as data: a linear objective over a decision vector
subject to symmetric matrix-valued affine constraints.

Symmetric-matrix decision variables are registered entrywise over the upper
triangle; an off-diagonal entry owns both mirrored matrix positions, so its
coefficient blocks carry the basis E_ij + E_ji (the usual svec-style
convention, applied everywhere). One-sided scalar bounds are stored apart
from the block constraints and expanded to order-1 blocks on demand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from ._kernels import eval_affine
from .errors import DimensionMismatch

SCALAR = "scalar"
SYM_ENTRY = "sym-entry"
RECT_ENTRY = "rect-entry"


@dataclass(frozen=True)
class DecisionVar:
    id: int
    kind: str
    owner: str
    index: tuple


class AffineLmi:
    """F(z) = F0 + sum_i z[ids[i]] * coeffs[i], every block exactly symmetric."""

    __slots__ = ("order", "f0", "ids", "coeffs", "label")

    def __init__(self, f0, coeffs_by_id: dict, label: str):
        f0 = np.ascontiguousarray(linalg.require_symmetric(f0, f"{label}: F0"))
        order = f0.shape[0]
        ids = np.array(sorted(coeffs_by_id), dtype=np.int64)
        coeffs = np.empty((ids.size, order, order), dtype=float)
        for pos, vid in enumerate(ids):
            blk = linalg.require_symmetric(coeffs_by_id[vid], f"{label}: coeff[{vid}]")
            if blk.shape != (order, order):
                raise DimensionMismatch(
                    f"{label}: coefficient block for id {vid} has order {blk.shape[0]}, expected {order}"
                )
            coeffs[pos] = blk
        self.order = order
        self.f0 = f0
        self.ids = ids
        self.coeffs = np.ascontiguousarray(coeffs)
        self.label = str(label)

    def __repr__(self):
        return f"AffineLmi({self.label!r}, order={self.order}, nvars={self.ids.size})"


class BlockBuilder:
    """Assembles one AffineLmi from sub-blocks laid out on a block grid.

    ``dims`` gives the row/column sizes of the grid. Placing a matrix at
    grid position (i, j) with i != j also places its transpose at (j, i),
    which is how the shorthand "*" blocks are realized; diagonal placements
    are symmetrized.
    """

    def __init__(self, label: str, dims):
        self.label = label
        self.dims = [int(d) for d in dims]
        self.offsets = np.concatenate(([0], np.cumsum(self.dims)))
        self.order = int(self.offsets[-1])
        self._f0 = np.zeros((self.order, self.order))
        self._coeffs: dict[int, np.ndarray] = {}

    def const(self, i: int, j: int, mat) -> "BlockBuilder":
        self._place(self._f0, i, j, mat)
        return self

    def coeff(self, var_id: int, i: int, j: int, mat) -> "BlockBuilder":
        buf = self._coeffs.setdefault(int(var_id), np.zeros((self.order, self.order)))
        self._place(buf, i, j, mat)
        return self

    def _place(self, target, i, j, mat):
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        r0, r1 = int(self.offsets[i]), int(self.offsets[i + 1])
        c0, c1 = int(self.offsets[j]), int(self.offsets[j + 1])
        if mat.shape != (r1 - r0, c1 - c0):
            raise DimensionMismatch(
                f"{self.label}: block ({i},{j}) expects shape {(r1 - r0, c1 - c0)}, got {mat.shape}"
            )
        if i == j:
            target[r0:r1, c0:c1] += (mat + mat.T) / 2.0
        else:
            target[r0:r1, c0:c1] += mat
            target[c0:c1, r0:r1] += mat.T

    def build(self) -> AffineLmi:
        return AffineLmi(self._f0, self._coeffs, self.label)


@dataclass(frozen=True)
class LmiProgram:
    """Immutable program: variables, linear objective, constraints, box bounds."""

    variables: tuple
    objective: np.ndarray
    constraints: tuple
    bounds: dict  # id -> (lo | None, hi | None)

    @property
    def var_count(self) -> int:
        return len(self.variables)

    def all_blocks(self):
        """Constraints plus order-1 blocks synthesized from the bounds."""
        blocks = list(self.constraints)
        for vid in sorted(self.bounds):
            lo, hi = self.bounds[vid]
            owner = self.variables[vid].owner
            if lo is not None:
                blocks.append(AffineLmi([[-lo]], {vid: np.array([[1.0]])}, f"bound:{owner}>{lo:g}"))
            if hi is not None:
                blocks.append(AffineLmi([[hi]], {vid: np.array([[-1.0]])}, f"bound:{owner}<{hi:g}"))
        return blocks


class LmiProgramBuilder:
    def __init__(self):
        self._vars: list[DecisionVar] = []
        self._constraints: list[AffineLmi] = []
        self._objective: dict[int, float] = {}
        self._bounds: dict[int, tuple] = {}

    # -- variable registration ------------------------------------------

    def scalar(self, owner: str) -> int:
        vid = len(self._vars)
        self._vars.append(DecisionVar(vid, SCALAR, owner, ()))
        return vid

    def scalars(self, owner: str, n: int) -> np.ndarray:
        ids = np.empty(n, dtype=np.int64)
        for i in range(n):
            vid = len(self._vars)
            self._vars.append(DecisionVar(vid, SCALAR, owner, (i,)))
            ids[i] = vid
        return ids

    def symmetric(self, owner: str, n: int) -> np.ndarray:
        """Register the upper triangle of an n x n symmetric matrix.

        Returns an (n, n) id array with ids[i, j] == ids[j, i].
        """
        ids = np.empty((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i, n):
                vid = len(self._vars)
                self._vars.append(DecisionVar(vid, SYM_ENTRY, owner, (i, j)))
                ids[i, j] = ids[j, i] = vid
        return ids

    def rect(self, owner: str, rows: int, cols: int) -> np.ndarray:
        ids = np.empty((rows, cols), dtype=np.int64)
        for i in range(rows):
            for j in range(cols):
                vid = len(self._vars)
                self._vars.append(DecisionVar(vid, RECT_ENTRY, owner, (i, j)))
                ids[i, j] = vid
        return ids

    # -- program assembly -------------------------------------------------

    def constraint(self, lmi: AffineLmi):
        if lmi.ids.size and lmi.ids.max() >= len(self._vars):
            raise DimensionMismatch(f"{lmi.label}: references unregistered variable ids")
        self._constraints.append(lmi)
        return self

    def objective_coeff(self, var_id: int, coeff: float):
        self._objective[int(var_id)] = float(coeff)
        return self

    def bound(self, var_id: int, lo=None, hi=None):
        if lo is not None and hi is not None and lo >= hi:
            raise ValueError(f"empty bound interval for id {var_id}")
        self._bounds[int(var_id)] = (lo, hi)
        return self

    def build(self) -> LmiProgram:
        if not self._constraints:
            raise ValueError("a program needs at least one constraint")
        n = len(self._vars)
        for vid in list(self._objective) + list(self._bounds):
            if not 0 <= vid < n:
                raise DimensionMismatch(f"objective/bound references unregistered id {vid}")
        c = np.zeros(n)
        for vid, coeff in self._objective.items():
            c[vid] = coeff
        return LmiProgram(
            variables=tuple(self._vars),
            objective=c,
            constraints=tuple(self._constraints),
            bounds=dict(self._bounds),
        )


# -- evaluation -----------------------------------------------------------


def eval_constraint(lmi: AffineLmi, z) -> np.ndarray:
    """F0 + sum z_i F_i, exactly symmetric."""
    z = np.ascontiguousarray(z, dtype=float)
    if z.ndim != 1 or (lmi.ids.size and int(lmi.ids.max()) >= z.size):
        raise DimensionMismatch(
            f"{lmi.label}: decision vector of length {z.size} does not cover the block's ids"
        )
    out = np.empty((lmi.order, lmi.order))
    eval_affine(lmi.f0, lmi.coeffs, lmi.ids, z, out)
    return out


def feasibility_margin(program: LmiProgram, z) -> float:
    """min over all blocks (bounds included) of lambda_min(F(z)).

    Positive iff z is strictly feasible. This path goes through the
    eigenvalue routine, independent of the solver's Cholesky tests.
    """
    z = np.ascontiguousarray(z, dtype=float)
    if z.ndim != 1 or z.size != program.var_count:
        raise DimensionMismatch(
            f"decision vector has length {z.size}, program has {program.var_count} variables"
        )
    return min(linalg.min_eigenvalue(eval_constraint(blk, z)) for blk in program.all_blocks())


def block_margins(program: LmiProgram, z) -> list:
    """Per-block (label, lambda_min) pairs; used in diagnostics."""
    z = np.ascontiguousarray(z, dtype=float)
    return [
        (blk.label, linalg.min_eigenvalue(eval_constraint(blk, z)))
        for blk in program.all_blocks()
    ]


def dump_program(program: LmiProgram) -> str:
    """Plain-text listing for diffing: variables, objective, blocks row-major."""
    out = [f"variables {program.var_count}"]
    for v in program.variables:
        idx = "" if not v.index else "[" + ",".join(str(i) for i in v.index) + "]"
        out.append(f"  z{v.id} {v.kind} {v.owner}{idx}")
    out.append("objective")
    for vid, coeff in enumerate(program.objective):
        if coeff != 0.0:
            out.append(f"  z{vid} {coeff:.17g}")
    if program.bounds:
        out.append("bounds")
        for vid in sorted(program.bounds):
            lo, hi = program.bounds[vid]
            lo_s = "-inf" if lo is None else f"{lo:.17g}"
            hi_s = "+inf" if hi is None else f"{hi:.17g}"
            out.append(f"  z{vid} in ({lo_s}, {hi_s})")
    for blk in program.constraints:
        out.append(f"constraint {blk.label} order {blk.order}")
        out.append("  F0 " + " ".join(f"{v:.17g}" for v in blk.f0.ravel()))
        for pos, vid in enumerate(blk.ids):
            row = " ".join(f"{v:.17g}" for v in blk.coeffs[pos].ravel())
            out.append(f"  dF/dz{vid} {row}")
    return "\n".join(out) + "\n"
