"""Gauss generators, the physical subspace, and constraint-compatibility.

The physical subspace is the joint numerical kernel of all ``G(x)``: the
generators are stacked and the right singular vectors with singular value
at most ``kernel_tolerance`` are kept. Because every ``G(x)`` is diagonal
in the fermion occupations, the stack splits into small blocks (one per
connected component of its sparsity pattern) that are decomposed separately.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .fields import FieldSet, lattice_div
from .linalg import block_partition
from .space import QOperator, op_norm

KERNEL_TOL = 1e-8


class GaussError(ValueError):
    pass


def gauss_generators(fields: FieldSet) -> list[QOperator]:
    """``G(x) = (div E)(x) - rho(x)`` for every site."""
    div_e = lattice_div(fields.space, list(fields.e_field))
    return [d - r for d, r in zip(div_e, fields.charge_density)]


@dataclass(frozen=True)
class GaussSet:
    generators: tuple[QOperator, ...]
    # orthonormal columns spanning the physical subspace, shape (dim, physical_dim)
    basis: np.ndarray
    kernel_tolerance: float = KERNEL_TOL
    # smallest joint singular values; diagnostic when the kernel is empty
    nearest: tuple[float, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def physical_dim(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def physical_projector(self) -> QOperator:
        q = self.basis
        return QOperator(q @ q.conj().T)

    def project(self, m: np.ndarray) -> np.ndarray:
        """``P @ m`` without forming ``P``."""
        q = self.basis
        return q @ (q.conj().T @ m)


def joint_kernel(generators, tol: float = KERNEL_TOL):
    """Joint kernel of hermitian operators via blockwise stacked SVD."""
    mats = [g.sparse() for g in generators]
    n = mats[0].shape[0]
    cols, smallest = [], []
    for idx in block_partition(*mats):
        stack = np.vstack([m[idx][:, idx].toarray() for m in mats])
        _, s, vh = np.linalg.svd(stack, full_matrices=False)
        s_full = np.zeros(len(idx))
        s_full[: s.size] = s
        smallest.extend(s_full.tolist())
        null = vh[s_full <= tol]
        if null.shape[0]:
            c = np.zeros((n, null.shape[0]), dtype=complex)
            c[idx] = null.conj().T
            cols.append(c)
    basis = np.hstack(cols) if cols else np.zeros((n, 0), dtype=complex)
    return basis, tuple(sorted(smallest)[:8])


def build_gauss(fields: FieldSet, kernel_tolerance: float = KERNEL_TOL) -> GaussSet:
    gens = gauss_generators(fields)
    basis, nearest = joint_kernel(gens, kernel_tolerance)
    return GaussSet(tuple(gens), basis, kernel_tolerance, nearest)


def _require_unitary(v: QOperator):
    if not v.is_unitary:
        raise GaussError("operator is not unitary within 1e-10")


def check_unitary_compatibility(v: QOperator, gauss: GaussSet) -> float:
    """``max_x ||G(x) V P||``: how far ``V`` pushes physical states out."""
    _require_unitary(v)
    if gauss.physical_dim == 0:
        return 0.0
    vq = v.matrix @ gauss.basis
    vq = np.asarray(vq)
    worst = 0.0
    for g in gauss.generators:
        worst = max(worst, float(np.linalg.norm(g.matrix @ vq, 2)))
    return worst


def commutant_project(generator: QOperator, gauss: GaussSet) -> QOperator:
    """Block-diagonal part ``PgP + (1-P)g(1-P)`` of a hermitian generator."""
    g = generator.dense()
    q = gauss.basis
    qh = q.conj().T
    pg = q @ (qh @ g)
    gp = (g @ q) @ qh
    pgp = q @ (qh @ g @ q) @ qh
    return QOperator(g - pg - gp + 2 * pgp)


def projector_defects(gauss: GaussSet) -> dict[str, float]:
    """Idempotence, hermiticity, kernel and commutation checks of ``P``."""
    p = gauss.physical_projector
    out = {
        "idempotence": op_norm(p @ p - p),
        "hermiticity": op_norm(p - p.dag),
        "kernel": max((op_norm(g @ p) for g in gauss.generators), default=0.0),
        "commutes": max((op_norm(g @ p - p @ g) for g in gauss.generators), default=0.0),
    }
    gens = gauss.generators
    out["generators_commute"] = max(
        (op_norm(a @ b - b @ a) for i, a in enumerate(gens) for b in gens[i + 1 :]),
        default=0.0,
    )
    return out
