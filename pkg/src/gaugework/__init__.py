"""Exact-diagonalization bench for gauge-shifted work extraction on a lattice.

A fermion chain (two-component spinors, Jordan-Wigner ordering) is coupled
to truncated boson links. The package builds the Hamiltonian and Gauss
generators, prepares Gibbs states, constructs constraint-preserving
unitaries ``V = exp(iC) U``, measures every identity of the gauge-shift
argument with its truncation defect, and compares predicted against
directly computed work and the sorted-spectrum lower bound.
"""
from importlib import metadata as _metadata

from .counterexample import (
    ChiField,
    DefectReport,
    KickSpec,
    WorkReport,
    build_kick,
    c_operator,
    div_j,
    identity_suite,
    j_average,
    optimal_chi,
    published_budget,
    r_operator,
    v_operator,
    work_pipeline,
)
from .fields import FieldSet, build_fields, ccr_defect, car_defect, fields_for, lattice_div, lattice_grad
from .gauss import GaussSet, build_gauss, check_unitary_compatibility, commutant_project
from .hamiltonian import HamiltonianParts, build_h_total
from .space import DimensionCapExceeded, LatticeConfig, QOperator, build_space, defect, embed, op_norm
from .thermo import ThermalState, gibbs_state, min_work_oracle, work

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "ChiField",
    "DefectReport",
    "DimensionCapExceeded",
    "FieldSet",
    "GaussSet",
    "HamiltonianParts",
    "KickSpec",
    "LatticeConfig",
    "QOperator",
    "ThermalState",
    "WorkReport",
    "build_fields",
    "build_gauss",
    "build_h_total",
    "build_kick",
    "build_space",
    "c_operator",
    "car_defect",
    "ccr_defect",
    "check_unitary_compatibility",
    "commutant_project",
    "defect",
    "div_j",
    "embed",
    "fields_for",
    "gibbs_state",
    "identity_suite",
    "j_average",
    "lattice_div",
    "lattice_grad",
    "min_work_oracle",
    "op_norm",
    "optimal_chi",
    "published_budget",
    "r_operator",
    "v_operator",
    "work",
    "work_pipeline",
]
