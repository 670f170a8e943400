"""Gibbs states, the work functional and the minimal-work oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .gauss import GaussSet
from .space import QOperator

FULL = "full"
PHYSICAL = "physical"
WORK_AGREEMENT_TOL = 1e-10


class ThermoError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    """An internal consistency check failed beyond its tolerance."""


@dataclass(frozen=True)
class ThermalState:
    rho: QOperator
    beta: float
    log_z: float
    support: str = FULL

    @property
    def partition_function(self) -> float:
        return float(np.exp(self.log_z))


def _gibbs_from_spectrum(w: np.ndarray, beta: float):
    shift = w.min()
    weights = np.exp(-beta * (w - shift))
    z_shifted = weights.sum()
    return weights / z_shifted, float(np.log(z_shifted) - beta * shift)


def gibbs_state(h: QOperator, beta: float, support: str = FULL, gauss: GaussSet | None = None) -> ThermalState:
    """``exp(-beta H)/Z`` on the full space or on the physical subspace.

    The physical variant diagonalizes ``Q^dag H Q`` for an orthonormal basis
    ``Q`` of the physical subspace and embeds the result back, so it vanishes
    outside the subspace.
    """
    if not beta > 0:
        raise ThermoError(f"beta must be positive, got {beta}")
    if support == FULL:
        w_all, parts = linalg.eigh(h)
        shift = w_all.min()
        n = h.dim
        rho = np.zeros((n, n), dtype=complex)
        z = 0.0
        for idx, w, v in parts:
            weights = np.exp(-beta * (w - shift))
            z += weights.sum()
            rho[np.ix_(idx, idx)] = (v * weights) @ v.conj().T
        rho /= z
        rho_op = linalg.with_labels(rho, linalg.labels(h))
        return ThermalState(rho_op, beta, float(np.log(z) - beta * shift), FULL)
    if support == PHYSICAL:
        if gauss is None:
            raise ThermoError("physical support needs a GaussSet")
        if gauss.physical_dim == 0:
            raise ThermoError("physical subspace is empty (physical_dim = 0)")
        q = gauss.basis
        hp = q.conj().T @ np.asarray(h.matrix @ q)
        hp = 0.5 * (hp + hp.conj().T)
        w, v = np.linalg.eigh(hp)
        p, log_z = _gibbs_from_spectrum(w, beta)
        qv = q @ v
        return ThermalState(QOperator((qv * p) @ qv.conj().T), beta, log_z, PHYSICAL)
    raise ThermoError(f"unknown support {support!r}")


@dataclass(frozen=True)
class WorkEvaluation:
    """Work from both trace orderings; ``value`` is the conjugated-H one."""

    eq2: float
    eq3: float

    @property
    def value(self) -> float:
        return self.eq3


def _rho(state) -> QOperator:
    return state.rho if isinstance(state, ThermalState) else state


def work(v: QOperator, h: QOperator, state) -> WorkEvaluation:
    """``tr[H V rho V^dag] - tr[H rho]`` and ``tr[V^dag H V rho] - tr[H rho]``."""
    if not v.is_unitary:
        raise ThermoError("work needs a unitary V (within 1e-10)")
    rho = _rho(state)
    e0 = linalg.trace_product(rho, h).real
    evolved = linalg.product(v, rho, v.dag)
    w2 = linalg.trace_product(evolved, h).real - e0
    w3 = linalg.trace_product(linalg.conjugate(v, h), rho).real - e0
    if abs(w2 - w3) > WORK_AGREEMENT_TOL:
        raise NumericalFailure(f"trace orderings disagree: {w2} vs {w3}")
    return WorkEvaluation(w2, w3)


def min_work_oracle(h: QOperator, state) -> float:
    """Least work any unitary can do on ``rho``, in closed form.

    Pairs the ascending spectrum of ``H`` with the descending spectrum of
    ``rho``. Ties do not matter: swapping equal eigenvalues leaves the sum
    unchanged.
    """
    rho = _rho(state)
    eps = linalg.eigvalsh(h)
    p = linalg.eigvalsh(rho)
    return float(np.dot(eps, p[::-1]) - linalg.trace_product(rho, h).real)
