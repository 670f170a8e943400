"""Gauge-shifted unitaries ``V = U R`` and the work decomposition they imply.

``C = sum_l E_l (grad chi)_l``, ``R = exp(i U^dag C U)`` and ``V = U R``,
which equals ``exp(iC) U``. Conjugation by ``exp(iC)`` is evaluated exactly
(never as a truncated commutator series), so every residual reported here
is attributable to the boson truncation alone.

Sign of the shift: with ``[A, E] = -i`` one has
``exp(-iC) A_l exp(iC) = A_l + (grad chi)_l`` below the truncation edge,
hence ``V^dag H V = U^dag (H - sum_l J_l (grad chi)_l) U``. The identity
suite tests both signs of the shift and records which one matches.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg
from .fields import ALPHA, FieldSet, lattice_curl, lattice_div, lattice_grad, qsum
from .gauss import GaussSet, check_unitary_compatibility, commutant_project
from .hamiltonian import HamiltonianParts
from .space import QOperator, commutator, embed, ladder_lowering, op_norm
from .thermo import NumericalFailure, ThermalState, min_work_oracle, work

KICK_KINDS = ("gauge-invariant-hopping-quench", "local-potential-quench", "random-commutant-generator")
KICK_VERSION = 1
COMPAT_TOL = 1e-8
COMPAT_REJECT = 1e-6
R_CROSS_TOL = 1e-10
CHAIN_TOL = 1e-10


class KickRejected(ValueError):
    def __init__(self, defect: float):
        self.defect = defect
        super().__init__(f"kick violates the Gauss constraint: defect {defect:.3e} > {COMPAT_REJECT}")


@dataclass(frozen=True)
class ChiField:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("chi must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, num_sites: int) -> "ChiField":
        return cls(np.zeros(num_sites))

    def grad(self, space) -> np.ndarray:
        return lattice_grad(space, self.values)


@dataclass(frozen=True)
class KickSpec:
    kind: str = "local-potential-quench"
    strength: float = 1.0
    duration: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KICK_KINDS:
            raise ValueError(f"unknown kick kind {self.kind!r}; expected one of {KICK_KINDS}")


@dataclass(frozen=True)
class Kick:
    spec: KickSpec
    generator: QOperator
    unitary: QOperator
    compatibility: float


def c_operator(chi: ChiField, fields: FieldSet) -> QOperator:
    g = chi.grad(fields.space)
    return qsum((gl * e for gl, e in zip(g, fields.e_field) if gl != 0), fields.space.dim)


def _number(fields: FieldSet, site: int) -> QOperator:
    a, b = fields.psi[site]
    return a.dag @ a + b.dag @ b


def _kick_generator(spec: KickSpec, fields: FieldSet) -> QOperator:
    rng = np.random.default_rng(spec.seed)
    space = fields.space
    if spec.kind == "local-potential-quench":
        v = rng.normal(size=space.num_sites)
        return qsum((vx * _number(fields, x) for x, vx in enumerate(v)), space.dim)
    if spec.kind == "gauge-invariant-hopping-quench":
        # hopping dressed with exp(-i q A_l), which shifts E_l by q
        q = fields.config.charge
        a = ladder_lowering(space.n_max)
        a_loc = (a + a.T) / np.sqrt(2)
        w, vecs = np.linalg.eigh(a_loc)
        link_phase = (vecs * np.exp(-1j * q * w)) @ vecs.conj().T
        amps = rng.normal(size=len(space.links))
        out = QOperator.zeros(space.dim)
        for link, amp in zip(space.links, amps):
            alpha = ALPHA[link.direction]
            t = QOperator.zeros(space.dim)
            for s in range(2):
                for r in range(2):
                    if alpha[s, r] != 0:
                        t = t + alpha[s, r] * (fields.psi[link.tail][s].dag @ fields.psi[link.head][r])
            t = t @ embed(space, link_phase, link=link.index)
            out = out + (-0.5j * amp) * (t - t.dag)
        return out
    # random hermitian restricted to fixed fermion number
    n = space.dim
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    nf = space.occupation_table.sum(axis=1)
    x = np.where(nf[:, None] == nf[None, :], x, 0.0)
    return QOperator((x + x.conj().T) / (2 * math.sqrt(n)))


def build_kick(spec: KickSpec, gauss: GaussSet, fields: FieldSet) -> Kick:
    """``U = exp(-i tau K)`` with ``K`` made constraint-preserving.

    Every generator goes through :func:`commutant_project`; for generators
    that already commute with the constraint (local potentials) this only
    adds round-off.
    """
    if spec.strength == 0:
        ident = QOperator.identity(fields.space.dim, sparse=False)
        return Kick(spec, QOperator.zeros(fields.space.dim), ident, 0.0)
    k = spec.strength * _kick_generator(spec, fields)
    k = commutant_project(k, gauss)
    k = QOperator(0.5 * (k.dense() + k.dense().conj().T))
    u = linalg.expm_hermitian(k, -1j * spec.duration)
    defect = check_unitary_compatibility(u, gauss)
    if defect > COMPAT_REJECT:
        raise KickRejected(defect)
    return Kick(spec, k, u, defect)


def exp_ic(chi: ChiField, fields: FieldSet) -> QOperator:
    return linalg.expm_hermitian(c_operator(chi, fields), 1j)


def r_operator(u: QOperator, chi: ChiField, fields: FieldSet) -> QOperator:
    """``exp(i U^dag C U)``, cross-checked against ``U^dag exp(iC) U``."""
    if not u.is_unitary:
        raise ValueError("U must be unitary")
    c = c_operator(chi, fields)
    direct = linalg.expm_hermitian(QOperator(_herm(linalg.conjugate(u, c).dense())), 1j)
    shortcut = linalg.conjugate(u, linalg.expm_hermitian(c, 1j))
    cross = (direct - shortcut).max_abs()
    if cross > R_CROSS_TOL:
        raise NumericalFailure(f"R constructions disagree by {cross:.3e}")
    return direct


def v_operator(u: QOperator, chi: ChiField, fields: FieldSet) -> QOperator:
    v = linalg.product(u, r_operator(u, chi, fields))
    if not v.is_unitary:
        raise NumericalFailure("V = U R is not unitary within 1e-10")
    return v


def _herm(m):
    return 0.5 * (m + m.conj().T)


# ---------------------------------------------------------------- identity suite

SIGN_PROBE = 1e-4


def shift_sign(n_max: int) -> int:
    """Orientation of the field shift produced by conjugating with ``exp(iC)``.

    Full-operator residuals cannot decide this at small ``n_max``: the
    truncation edge spoils both candidates by O(1). Instead a single link is
    conjugated by ``exp(i eps E)`` and the residuals ``A' - A -/+ eps`` are
    compared on the levels strictly below the edge, where they differ by
    ``2 eps`` at first order. Conjugation by ``U`` cannot change the answer.
    """
    # a single level has nothing below the edge; the orientation does not depend on n_max
    n_max = max(n_max, 2)
    a = ladder_lowering(n_max)
    a_loc = (a + a.T) / math.sqrt(2)
    e_loc = 1j * (a - a.T) / math.sqrt(2)
    w, vecs = np.linalg.eigh(e_loc)
    step = (vecs * np.exp(1j * SIGN_PROBE * w)) @ vecs.conj().T
    shifted = step.conj().T @ a_loc @ step
    low = slice(0, n_max - 1)
    eye = np.eye(n_max)

    def off(sign):
        d = (shifted - a_loc - sign * SIGN_PROBE * eye)[low, low]
        return np.linalg.norm(d, 2)

    return 1 if off(1) <= off(-1) else -1


RESIDUAL_NAMES = (
    "eq18_hd", "eq18_j", "eq18_rho", "eq19", "eq20", "eq21", "eq22",
    "eq24", "eq27", "eq29", "eq30", "eq31", "eq32",
)


@dataclass
class DefectReport:
    """Operator-norm residual of every identity in the derivation chain.

    ``weighted`` holds the same residuals measured in a state,
    ``|tr[X rho]|``, where that state is supplied. ``eq30_sign`` is ``+1``
    when ``V^dag A V = U^dag (A + grad chi) U`` fits better than the minus
    sign.
    """

    residuals: dict[str, float]
    weighted: dict[str, float] = field(default_factory=dict)
    eq30_sign: int = 0
    eq30_alternative: float = float("nan")
    ccr_budget: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def budget(self) -> float:
        return self.meta.get("budget", float("nan"))

    def max_residual(self, names=None) -> float:
        names = names or self.residuals.keys()
        vals = [self.residuals[n] for n in names if not math.isnan(self.residuals[n])]
        return max(vals, default=0.0)

    def as_dict(self) -> dict:
        return asdict(self)


# U-conjugates are reused across chi; bounded to keep memory modest
CONJUGATE_CACHE_DIM = 1024


def _conjugates(u: QOperator):
    """``x -> U^dag x U``, memoized on ``u`` for operators that outlive one call."""
    cache = u.__dict__.setdefault("_conjugates", {}) if u.dim <= CONJUGATE_CACHE_DIM else {}

    def conj(x: QOperator):
        hit = cache.get(id(x))
        if hit is None or hit[0] is not x:
            hit = (x, linalg.conjugate(u, x))
            cache[id(x)] = hit
        return hit[1]

    return conj


def _memo(owner, name, build):
    # owners are frozen dataclasses; derived operators are attached once
    cached = owner.__dict__.get(name)
    if cached is None:
        cached = build()
        object.__setattr__(owner, name, cached)
    return cached


def _current_field_products(fields: FieldSet) -> QOperator:
    """``sum_l J_l A_l``, built once per field set."""
    return _memo(fields, "_ja", lambda: qsum((j @ a for j, a in zip(fields.current, fields.a_field)), fields.space.dim))


def identity_suite(
    u: QOperator,
    chi: ChiField,
    fields: FieldSet,
    ham: HamiltonianParts,
    gauss: GaussSet | None = None,
    state=None,
    ccr_budget: float = float("nan"),
    lam: float = 1.0,
) -> DefectReport:
    """Residual of every identity from the commutators up to the conjugated Hamiltonian.

    ``ccr_budget`` is carried through as the thermally weighted truncation
    defect. ``budget`` in the returned metadata is :func:`published_budget`
    at ``lam`` with the current divergence of ``state`` (zero without one).
    """
    space = fields.space
    dim = space.dim
    c = c_operator(chi, fields)
    g = chi.grad(space)
    ident = QOperator.identity(dim)
    v = v_operator(u, chi, fields)
    uc_of = _conjugates(u)
    rho = None if state is None else (state.rho if isinstance(state, ThermalState) else state)
    res: dict[str, float] = {}
    wts: dict[str, float] = {}

    def record(name, x: QOperator, weight_state=None):
        res[name] = op_norm(x)
        if weight_state is not None:
            wts[name] = abs(linalg.trace_product(weight_state, x))

    record("eq18_hd", commutator(ham.h_dirac, c), rho)
    res["eq18_j"] = max(op_norm(commutator(j, c)) for j in fields.current)
    res["eq18_rho"] = max(op_norm(commutator(r, c)) for r in fields.charge_density)
    eq19 = [commutator(a, c) + (1j * gl) * ident for a, gl in zip(fields.a_field, g)]
    res["eq19"] = max(op_norm(x) for x in eq19)
    if rho is not None:
        wts["eq19"] = max(abs(linalg.trace_product(rho, x)) for x in eq19)
    if space.plaquettes:
        curl_g = lattice_curl(space, g)
        eq20 = [commutator(b, c) + (1j * cg) * ident for b, cg in zip(fields.b_field, curl_g)]
        res["eq20"] = max(op_norm(x) for x in eq20)
    else:
        res["eq20"] = float("nan")
    record("eq21", commutator(ham.h_maxwell, c), rho)
    if gauss is not None:
        res["eq22"] = max(op_norm(commutator(gx, c)) for gx in gauss.generators)
        uc = qsum((gl * uc_of(e) for gl, e in zip(g, fields.e_field) if gl != 0), dim)
        res["eq24"] = max(op_norm(commutator(uc_of(gx), uc)) for gx in gauss.generators)
    else:
        res["eq22"] = res["eq24"] = float("nan")

    div = np.zeros(space.num_sites) if rho is None else div_j(u, rho, fields)
    h_dm = _memo(ham, "_h_dm", lambda: ham.h_dirac + ham.h_maxwell)
    record("eq27", linalg.conjugate(v, h_dm) - uc_of(h_dm), rho)
    res["eq29"] = max(op_norm(linalg.conjugate(v, j) - uc_of(j)) for j in fields.current)

    plus, minus = [], []
    for a, gl in zip(fields.a_field, g):
        diff = linalg.conjugate(v, a) - uc_of(a)
        plus.append(diff - gl * ident)
        minus.append(diff + gl * ident)
    r_plus = max(op_norm(x) for x in plus)
    r_minus = max(op_norm(x) for x in minus)
    sign = shift_sign(space.n_max)
    chosen = plus if sign > 0 else minus
    res["eq30"] = r_plus if sign > 0 else r_minus
    if rho is not None:
        wts["eq30"] = max(abs(linalg.trace_product(rho, x)) for x in chosen)

    ja = _current_field_products(fields)
    ja_v = linalg.conjugate(v, ja)
    ja_u = uc_of(ja) + qsum((sign * gl * uc_of(j) for j, gl in zip(fields.current, g) if gl != 0), dim)
    record("eq31", ja_v - ja_u, rho)
    shift = qsum((gl * uc_of(j) for j, gl in zip(fields.current, g) if gl != 0), dim)
    record("eq32", linalg.conjugate(v, ham.h_total) - (uc_of(ham.h_total) - shift), rho)
    return DefectReport(
        residuals=res,
        weighted=wts,
        eq30_sign=sign,
        eq30_alternative=max(r_plus, r_minus),
        ccr_budget=ccr_budget,
        meta={
            "num_sites": space.num_sites,
            "n_max": space.n_max,
            "lam": float(lam),
            "chi": chi.values.tolist(),
            "budget": published_budget(space.n_max, lam, div, g, current_scale(fields)),
        },
    )


# ---------------------------------------------------------------- work pipeline


def _state_rho(state) -> QOperator:
    return state.rho if isinstance(state, ThermalState) else state


def j_average(u: QOperator, state, fields: FieldSet) -> np.ndarray:
    """``J_U(l) = tr[U^dag J_l U rho]`` per link."""
    rho = _state_rho(state)
    sigma = linalg.product(u, rho, u.dag)
    vals = np.array([linalg.trace_product(sigma, j) for j in fields.current])
    if np.max(np.abs(vals.imag), initial=0.0) > 1e-10:
        raise NumericalFailure("average current has an imaginary part above 1e-10")
    return vals.real


def div_j(u: QOperator, state, fields: FieldSet) -> np.ndarray:
    return lattice_div(fields.space, j_average(u, state, fields))


def optimal_chi(div: np.ndarray, lam: float) -> tuple[ChiField, float]:
    """``chi = -lam * div J_U`` and the predicted term ``-lam * sum (div J_U)^2``."""
    div = np.asarray(div, dtype=float)
    return ChiField(-lam * div), float(-lam * np.dot(div, div))


def current_scale(fields: FieldSet) -> float:
    """``max(1, max_l ||J_l||)``, the prefactor of :func:`published_budget`."""
    return max([1.0] + [op_norm(j) for j in fields.current])


def published_budget(n_max: int, lam: float, div: np.ndarray, grad_chi: np.ndarray, scale: float = 1.0) -> float:
    """Bound on the truncation residuals of the gauge-shift identities.

    ``B = scale * n_max * (1 + lam ||div J_U||_inf) * ||grad chi||_1``.

    On a link the shift defect ``exp(-iC) A exp(iC) - A - g`` equals
    ``-n_max`` times an integral over ``[0, g]`` of rotated top-level
    projectors, so its norm is at most ``n_max |g|``. Multiplying by
    ``||J_l||`` and summing over links bounds the residuals of the
    conjugated field, product and Hamiltonian identities, and hence the gap
    between direct and predicted work. The factor ``1 + lam ||div||_inf``
    only loosens the bound. Valid on 1D chains, where the magnetic term is
    absent.
    """
    div = np.asarray(div, dtype=float)
    grad_chi = np.asarray(grad_chi, dtype=float)
    return float(
        scale * n_max * (1 + abs(lam) * np.max(np.abs(div), initial=0.0)) * np.sum(np.abs(grad_chi))
    )


@dataclass
class WorkReport:
    lam: float
    w_direct: float
    w_via_eq2: float
    w0: float
    w_pred33: float
    w_pred35: float
    w_pred37: float
    predicted_w: float
    oracle_bound: float
    defect_budget: float
    gap: float
    div_j_sq: float
    gauss_defect_v: float = float("nan")

    def as_dict(self) -> dict:
        return asdict(self)


def work_pipeline(
    u: QOperator,
    lambda_grid,
    state,
    ham: HamiltonianParts,
    fields: FieldSet,
    gauss: GaussSet | None = None,
) -> list[WorkReport]:
    """Direct work of ``V = exp(iC) U`` against the predicted chain, per ``lam``.

    ``chi = -lam div J_U`` at every grid point. Disagreement between direct
    and predicted work is returned as data together with its budget; only a
    broken predicted chain (pure lattice algebra) raises.
    """
    if len(lambda_grid) == 0:
        raise ValueError("lambda grid must be nonempty")
    h = ham.h_total
    space = fields.space
    rho = _state_rho(state)
    w0 = work(u, h, rho).value
    javg = j_average(u, rho, fields)
    div = lattice_div(space, javg)
    oracle = min_work_oracle(h, rho)
    scale = current_scale(fields)
    rows = []
    for lam in lambda_grid:
        chi, quad = optimal_chi(div, lam)
        grad = chi.grad(space)
        v = v_operator(u, chi, fields)
        w = work(v, h, rho)
        pred33 = w0 - float(np.dot(javg, grad))
        pred35 = w0 + float(np.dot(chi.values, div))
        pred37 = w0 + quad
        if max(abs(pred33 - pred35), abs(pred35 - pred37)) > CHAIN_TOL:
            raise NumericalFailure(f"predicted-work chain broken at lambda={lam}")
        rows.append(
            WorkReport(
                lam=float(lam),
                w_direct=w.value,
                w_via_eq2=w.eq2,
                w0=w0,
                w_pred33=pred33,
                w_pred35=pred35,
                w_pred37=pred37,
                predicted_w=pred37,
                oracle_bound=oracle,
                defect_budget=published_budget(space.n_max, lam, div, grad, scale),
                gap=abs(w.value - pred33),
                div_j_sq=float(np.dot(div, div)),
                gauss_defect_v=check_unitary_compatibility(v, gauss) if gauss is not None else float("nan"),
            )
        )
    return rows
