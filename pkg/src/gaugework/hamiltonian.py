"""Lattice Hamiltonian: Dirac + Maxwell - sum_l J_l A_l."""
from __future__ import annotations

from dataclasses import dataclass

from .fields import BETA, FieldSet, qsum
from .gauss import gauss_generators
from .space import QOperator, commutator, op_norm


@dataclass(frozen=True)
class HamiltonianParts:
    h_dirac: QOperator
    h_maxwell: QOperator
    h_coupling: QOperator
    h_total: QOperator
    h_hop: QOperator
    gauss_defect: float


def build_h_hop(fields: FieldSet) -> QOperator:
    """Central-difference hopping, summed link by link."""
    return qsum(fields.hopping, fields.space.dim)


def build_h_mass(fields: FieldSet) -> QOperator:
    """``(m/2) sum_x [psi^dag_x, beta psi_x]`` in the symmetrized ordering."""
    m = fields.config.mass
    out = QOperator.zeros(fields.space.dim)
    if m == 0:
        return out
    for pair in fields.psi:
        for a in range(2):
            for b in range(2):
                if BETA[a, b] != 0:
                    out = out + (0.5 * m * BETA[a, b]) * commutator(pair[a].dag, pair[b])
    return out


def build_h_dirac(fields: FieldSet) -> QOperator:
    return build_h_hop(fields) + build_h_mass(fields)


def build_h_maxwell(fields: FieldSet) -> QOperator:
    dim = fields.space.dim
    electric = qsum((e @ e for e in fields.e_field), dim)
    magnetic = qsum((b @ b for b in fields.b_field), dim)
    return 0.5 * (electric + magnetic)


def build_h_coupling(fields: FieldSet) -> QOperator:
    dim = fields.space.dim
    return -1.0 * qsum((j @ a for j, a in zip(fields.current, fields.a_field)), dim)


def build_h_total(fields: FieldSet, with_gauss_defect: bool = True) -> HamiltonianParts:
    """Assemble all parts; ``gauss_defect`` is ``max_x ||[H, G(x)]||``.

    The linear coupling is not exactly gauge invariant on the lattice
    (``[J_l, rho(x)] != 0``), so the defect is reported rather than assumed.
    """
    h_hop = build_h_hop(fields)
    h_dirac = h_hop + build_h_mass(fields)
    h_maxwell = build_h_maxwell(fields)
    h_coupling = build_h_coupling(fields)
    h_total = h_dirac + h_maxwell + h_coupling
    gdef = float("nan")
    if with_gauss_defect:
        gdef = max(op_norm(commutator(h_total, g)) for g in gauss_generators(fields))
    return HamiltonianParts(h_dirac, h_maxwell, h_coupling, h_total, h_hop, gdef)
