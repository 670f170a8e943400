"""Lattice field operators and their algebra.

Conventions (all fixed here, used everywhere downstream):

* two-component spinors; ``alpha`` is sigma_x along x and sigma_y along y,
  ``beta`` is sigma_z;
* per link ``A = (a + a^dag)/sqrt2`` and ``E = i(a - a^dag)/sqrt2``, so that
  ``[A, E] = -i`` below the truncation edge;
* lattice divergence is outflow minus inflow, gradient is head minus tail;
  with these ``sum_x chi (div F) = -sum_l (grad chi) F`` holds exactly;
* the link current is the exact continuity current of the hopping term,
  ``J_l = (q/2)(K_l + K_l^dag)`` with ``K_l = psi^dag_tail alpha psi_head``,
  which gives ``[H_hop, rho(x)] = i (div J)(x)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import trace_product
from .space import (
    LatticeConfig,
    QOperator,
    SpaceDescriptor,
    anticommutator,
    build_space,
    commutator,
    embed,
    fermion_lowering,
    ladder_lowering,
    op_norm,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ALPHA = (SIGMA_X, SIGMA_Y)
BETA = SIGMA_Z


@dataclass(frozen=True)
class FieldSet:
    space: SpaceDescriptor
    psi: tuple[tuple[QOperator, QOperator], ...]
    a_field: tuple[QOperator, ...]
    e_field: tuple[QOperator, ...]
    b_field: tuple[QOperator, ...]
    current: tuple[QOperator, ...]
    charge_density: tuple[QOperator, ...]
    # per-link hopping term -(i/2)(K_l - K_l^dag)
    hopping: tuple[QOperator, ...]

    @property
    def config(self) -> LatticeConfig:
        return self.space.config

    @property
    def modes(self) -> list[QOperator]:
        return [p for pair in self.psi for p in pair]


def qsum(ops, dim: int) -> QOperator:
    out = QOperator.zeros(dim)
    for op in ops:
        out = out + op
    return out


def _bilinear(psi, i_site, j_site, mat) -> QOperator:
    """``sum_ab mat[a,b] psi^dag_{i,a} psi_{j,b}``."""
    dim = psi[0][0].dim
    out = QOperator.zeros(dim)
    for a in range(2):
        for b in range(2):
            if mat[a, b] != 0:
                out = out + mat[a, b] * (psi[i_site][a].dag @ psi[j_site][b])
    return out


def build_fields(space: SpaceDescriptor) -> FieldSet:
    cfg = space.config
    q = cfg.charge
    low = fermion_lowering()
    psi = tuple(
        tuple(embed(space, low, mode=space.mode(x, s)) for s in range(2))
        for x in range(cfg.num_sites)
    )
    a = ladder_lowering(cfg.n_max)
    ad = a.conj().T
    a_loc = (a + ad) / np.sqrt(2)
    e_loc = 1j * (a - ad) / np.sqrt(2)
    a_field = tuple(embed(space, a_loc, link=l.index) for l in space.links)
    e_field = tuple(embed(space, e_loc, link=l.index) for l in space.links)
    b_field = tuple(
        qsum((s * a_field[l] for l, s in plaq), space.dim) for plaq in space.plaquettes
    )
    current, hopping = [], []
    for link in space.links:
        k = _bilinear(psi, link.tail, link.head, ALPHA[link.direction])
        hopping.append(-0.5j * (k - k.dag))
        current.append(0.5 * q * (k + k.dag))
    charge = []
    for x in range(cfg.num_sites):
        rho = QOperator.zeros(space.dim)
        for s in range(2):
            rho = rho + commutator(psi[x][s].dag, psi[x][s])
        charge.append(0.5 * q * rho)
    return FieldSet(
        space=space,
        psi=psi,
        a_field=a_field,
        e_field=e_field,
        b_field=b_field,
        current=tuple(current),
        charge_density=tuple(charge),
        hopping=tuple(hopping),
    )


def fields_for(config: LatticeConfig) -> FieldSet:
    return build_fields(build_space(config))


# ---------------------------------------------------------------- lattice calculus


def incidence(space: SpaceDescriptor) -> np.ndarray:
    """Signed site-by-link incidence: +1 at the tail, -1 at the head."""
    d = np.zeros((space.num_sites, len(space.links)))
    for l in space.links:
        d[l.tail, l.index] += 1.0
        d[l.head, l.index] -= 1.0
    return d


def lattice_grad(space: SpaceDescriptor, chi) -> np.ndarray:
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (space.num_sites,):
        raise ValueError(f"expected {space.num_sites} site values, got shape {chi.shape}")
    return -incidence(space).T @ chi


def lattice_div(space: SpaceDescriptor, values):
    """Divergence of a link field: numbers give an array, operators a list."""
    d = incidence(space)
    if len(values) != len(space.links):
        raise ValueError(f"expected {len(space.links)} link values, got {len(values)}")
    if isinstance(values[0], QOperator):
        out = []
        for x in range(space.num_sites):
            acc = QOperator.zeros(space.dim)
            for l, coeff in enumerate(d[x]):
                if coeff:
                    acc = acc + coeff * values[l]
            out.append(acc)
        return out
    return d @ np.asarray(values)


def lattice_curl(space: SpaceDescriptor, values):
    """Oriented plaquette sums of a link field (2D only)."""
    if len(values) != len(space.links):
        raise ValueError(f"expected {len(space.links)} link values, got {len(values)}")
    return np.array([sum(s * values[l] for l, s in plaq) for plaq in space.plaquettes])


# ---------------------------------------------------------------- algebra checks


@dataclass(frozen=True)
class CCRReport:
    per_link: tuple[float, ...]
    below_edge: tuple[float, ...]
    thermal: tuple[float, ...] | None = None
    n_max: int = 0

    @property
    def thermal_max(self) -> float | None:
        return None if self.thermal is None else max(self.thermal)

    @property
    def thermal_defect(self) -> float | None:
        """``max_l |tr[rho ([A_l, E_l] + i)]|``, i.e. ``n_max`` times the top weight."""
        return None if self.thermal is None else self.n_max * max(self.thermal)


def top_level_projector(space: SpaceDescriptor, link: int) -> QOperator:
    p = np.zeros((space.n_max, space.n_max))
    p[-1, -1] = 1.0
    return embed(space, p, link=link)


def ccr_defect(fields: FieldSet, rho=None) -> CCRReport:
    """Truncation defect of ``[A_l, E_l] = -i`` on each link.

    ``below_edge`` restricts to states with the link below its top level,
    where the ladder algebra is exact. With a density matrix ``rho`` the
    thermal weight ``tr[rho P_top]`` of the top level is reported as well.
    """
    space = fields.space
    ident = QOperator.identity(space.dim)
    per, below, thermal = [], [], []
    keep = np.eye(space.n_max)
    keep[-1, -1] = 0.0
    for l in range(len(space.links)):
        x = commutator(fields.a_field[l], fields.e_field[l]) + 1j * ident
        per.append(op_norm(x))
        p_low = embed(space, keep, link=l)
        below.append(op_norm(p_low @ x @ p_low))
        if rho is not None:
            thermal.append(trace_product(rho, top_level_projector(space, l)).real)
    return CCRReport(tuple(per), tuple(below), tuple(thermal) if rho is not None else None, space.n_max)


def car_defect(fields: FieldSet) -> float:
    """Worst violation of the canonical anticommutation relations."""
    modes = fields.modes
    ident = QOperator.identity(fields.space.dim)
    worst = 0.0
    for i, pi in enumerate(modes):
        for j, pj in enumerate(modes):
            target = ident if i == j else QOperator.zeros(ident.dim)
            worst = max(worst, op_norm(anticommutator(pi, pj.dag) - target))
            worst = max(worst, op_norm(anticommutator(pi, pj)))
    return worst


def algebra_defects(fields: FieldSet) -> dict[str, float]:
    """Exact-by-construction residuals: CAR, boson-fermion, A-A and E-E."""
    cross = 0.0
    for bos in fields.a_field + fields.e_field:
        for p in fields.modes:
            cross = max(cross, op_norm(commutator(bos, p)), op_norm(commutator(bos, p.dag)))
    aa = ee = 0.0
    links = range(len(fields.a_field))
    for l in links:
        for m in links:
            aa = max(aa, op_norm(commutator(fields.a_field[l], fields.a_field[m])))
            ee = max(ee, op_norm(commutator(fields.e_field[l], fields.e_field[m])))
    return {"car": car_defect(fields), "cross": cross, "aa": aa, "ee": ee}
