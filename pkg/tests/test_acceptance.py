"""Acceptance criteria, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""
import itertools
import sys

import numpy as np
import pytest

from gaugework import LatticeConfig, build_gauss, build_h_total, fields_for, gibbs_state
from gaugework.cli import data_section, main
from gaugework.counterexample import (
    KICK_KINDS,
    ChiField,
    KickSpec,
    build_kick,
    div_j,
    identity_suite,
    v_operator,
    work_pipeline,
)
from gaugework.fields import algebra_defects, ccr_defect
from gaugework.gauss import check_unitary_compatibility, projector_defects
from gaugework.space import commutator, op_norm
from gaugework.thermo import min_work_oracle, work

SEEDS = range(5)
BETAS = (0.2, 1.0, 5.0)
LAMBDAS = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
CHAIN = ("eq19", "eq21", "eq27", "eq29", "eq30", "eq31", "eq32")
FERMIONIC = ("eq18_hd", "eq18_j", "eq18_rho")


def _report(pytestconfig, number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    capture = pytestconfig.pluginmanager.getplugin("capturemanager")
    if capture is None:
        print(line)
    else:
        with capture.global_and_fixture_disabled():
            print("\n" + line)
    return ok


class Lattice:
    def __init__(self, num_sites, n_max, dimension=1, charge=1.0):
        self.config = LatticeConfig(num_sites=num_sites, n_max=n_max, dimension=dimension, mass=0.5, charge=charge)
        self.fields = fields_for(self.config)
        self.space = self.fields.space
        self._ham = self._gauss = None

    @property
    def ham(self):
        if self._ham is None:
            self._ham = build_h_total(self.fields)
        return self._ham

    @property
    def gauss(self):
        if self._gauss is None:
            self._gauss = build_gauss(self.fields)
        return self._gauss

    def gibbs(self, beta, support="full"):
        return gibbs_state(self.ham.h_total, beta, support, self.gauss)

    def kick(self, seed, kind="local-potential-quench"):
        return build_kick(KickSpec(kind, 1.0, 1.0, seed), self.gauss, self.fields)


_CACHE = {}


def lattice(num_sites, n_max, **kw):
    key = (num_sites, n_max, tuple(sorted(kw.items())))
    if key not in _CACHE:
        _CACHE[key] = Lattice(num_sites, n_max, **kw)
    return _CACHE[key]


def _unit_chi(model, seed):
    chi = np.random.default_rng(100 + seed).normal(size=model.space.num_sites)
    return ChiField(chi / np.abs(ChiField(chi).grad(model.space)).max())


def test_criterion_1_algebra_exactness(pytestconfig):
    configs = [lattice(2, 2), lattice(2, 4), lattice(3, 2), lattice(2, 2, charge=0.0), lattice(4, 2, dimension=2)]
    worst = {}
    for model in configs:
        for k, v in algebra_defects(model.fields).items():
            worst[k] = max(worst.get(k, 0.0), v)
    ok = max(worst.values()) <= 1e-12
    detail = " ".join(f"{k}={v:.1e}" for k, v in sorted(worst.items()))
    assert _report(pytestconfig, 1, ok, f"max residuals {detail} (limit 1e-12)")


def test_criterion_2_truncation_honesty(pytestconfig):
    edge, weighted, population = {}, {}, {}
    for n in (2, 4, 8, 16):
        model = lattice(2, n)
        rep = ccr_defect(model.fields, model.gibbs(1.0).rho)
        edge[n] = max(rep.per_link)
        weighted[n] = rep.thermal_defect
        population[n] = rep.thermal_max
    edge_ok = all(abs(edge[n] - n) <= 1e-12 for n in edge) and abs(edge[2] - 2.0) <= 1e-12
    ns = sorted(weighted)
    monotone = all(weighted[b] < weighted[a] for a, b in zip(ns, ns[1:]))
    ok = edge_ok and monotone
    detail = (
        f"edge {', '.join(f'{n}:{edge[n]:.12g}' for n in ns)}; "
        f"weighted |tr[rho([A,E]+i)]| {', '.join(f'{n}:{weighted[n]:.6f}' for n in ns)} "
        f"(must decrease); top-level population {', '.join(f'{n}:{population[n]:.4f}' for n in ns)}"
    )
    assert _report(pytestconfig, 2, ok, detail)


def test_criterion_3_identity_suite(pytestconfig):
    failures = []
    per_n = {}
    for n in (2, 4, 8):
        model = lattice(2, n)
        u = model.kick(0).unitary
        state = model.gibbs(1.0)
        zero = identity_suite(u, ChiField.zeros(2), model.fields, model.ham, model.gauss, state)
        if max(zero.residuals[k] for k in CHAIN) > 1e-10:
            failures.append(f"n={n} chi=0 chain {max(zero.residuals[k] for k in CHAIN):.1e}")
        rep = identity_suite(u, _unit_chi(model, 0), model.fields, model.ham, model.gauss, state, lam=1.0)
        if max(rep.residuals[k] for k in FERMIONIC) > 1e-12:
            failures.append(f"n={n} fermionic {max(rep.residuals[k] for k in FERMIONIC):.1e}")
        over = [k for k in CHAIN if rep.residuals[k] > rep.budget]
        if over:
            failures.append(f"n={n} over budget {over}")
        per_n[n] = {k: rep.residuals[k] for k in CHAIN}
        per_n[n]["budget"] = rep.budget
    ns = sorted(per_n)
    growing = [
        k
        for k in CHAIN
        if not all(per_n[b][k] < per_n[a][k] for a, b in zip(ns, ns[1:]))
        and max(per_n[m][k] for m in ns) > 1e-10
    ]
    if growing:
        failures.append(f"not decreasing in n_max: {growing}")
    table = "; ".join(
        f"n={n} eq19={per_n[n]['eq19']:.3g} eq30={per_n[n]['eq30']:.3g} eq32={per_n[n]['eq32']:.3g} B={per_n[n]['budget']:.3g}"
        for n in ns
    )
    ok = not failures
    assert _report(pytestconfig, 3, ok, f"{table}; {' | '.join(failures) or 'all bounds hold'}")


@pytest.fixture(scope="module")
def sweep():
    """Full-support sweep on three sites plus a crossing probe where needed."""
    model = lattice(3, 2)
    rows = []
    for seed, beta in itertools.product(SEEDS, BETAS):
        u = model.kick(seed).unitary
        state = model.gibbs(beta)
        div = div_j(u, state, model.fields)
        div_sq = float(div @ div)
        w0 = work(u, model.ham.h_total, state).value
        grid = list(LAMBDAS)
        if div_sq > 1e-10 and w0 / div_sq >= max(LAMBDAS):
            grid.append(2 * w0 / div_sq)
        reps = work_pipeline(u, grid, state, model.ham, model.fields, model.gauss)
        for r in reps:
            rows.append((seed, beta, r))
    return model, rows


def test_criterion_4_work_consistency(pytestconfig, sweep):
    _, rows = sweep
    orderings = max(abs(r.w_direct - r.w_via_eq2) for _, _, r in rows)
    at_zero = max(abs(r.w_direct - r.w0) for _, _, r in rows if r.lam == 0.0)
    chain = max(max(abs(r.w_pred33 - r.w_pred35), abs(r.w_pred35 - r.w_pred37)) for _, _, r in rows)
    ok = orderings <= 1e-10 and at_zero <= 1e-10 and chain <= 1e-10
    detail = f"{len(rows)} points: orderings {orderings:.1e}, lambda=0 {at_zero:.1e}, predicted chain {chain:.1e}"
    assert _report(pytestconfig, 4, ok, detail)


def test_criterion_5_oracle_confrontation(pytestconfig, sweep):
    model, rows = sweep
    grid_rows = [r for _, _, r in rows if r.lam in LAMBDAS]
    oracle = max(abs(r.oracle_bound) for _, _, r in rows)
    for beta in BETAS:
        oracle = max(oracle, abs(min_work_oracle(model.ham.h_total, model.gibbs(beta))))
    min_direct = min(r.w_direct for _, _, r in rows)
    series = {}
    for seed, beta, r in rows:
        if r.div_j_sq > 1e-10 and r.lam >= series.get((seed, beta), r).lam:
            series[(seed, beta)] = r
    negative = sum(r.w_pred37 < 0 for r in series.values())
    budget_ok = all(r.gap <= r.defect_budget + 1e-9 for _, _, r in rows)
    lam_sorted = sorted((r for _, _, r in rows if r.div_j_sq > 1e-10), key=lambda r: r.lam)
    ok = (
        len(grid_rows) >= 100
        and oracle <= 1e-10
        and min_direct >= -1e-9
        and negative == len(series)
        and budget_ok
    )
    top = max(lam_sorted, key=lambda r: r.lam) if lam_sorted else None
    detail = (
        f"{len(grid_rows)} grid points (+{len(rows) - len(grid_rows)} probes), |oracle| <= {oracle:.1e}, "
        f"min W_direct {min_direct:.3g}, W_pred37 < 0 at largest lambda in {negative}/{len(series)} series, "
        f"gap within budget everywhere: {budget_ok}"
    )
    if top is not None:
        detail += f"; e.g. lambda={top.lam:.3g}: W_direct={top.w_direct:.3g} W_pred37={top.w_pred37:.3g} B={top.defect_budget:.3g}"
    assert _report(pytestconfig, 5, ok, detail)


def test_criterion_6_gauss_machinery(pytestconfig):
    worst = {"idempotence": 0.0, "generators_commute": 0.0, "u": 0.0, "v_minus_u": -np.inf}
    for model in (lattice(2, 2), lattice(3, 2), lattice(2, 3)):
        d = projector_defects(model.gauss)
        worst["idempotence"] = max(worst["idempotence"], d["idempotence"])
        for a, b in itertools.combinations(model.gauss.generators, 2):
            worst["generators_commute"] = max(worst["generators_commute"], op_norm(commutator(a, b)))
        for kind, seed in itertools.product(KICK_KINDS, range(3)):
            k = model.kick(seed, kind)
            worst["u"] = max(worst["u"], k.compatibility)
            v = v_operator(k.unitary, _unit_chi(model, seed), model.fields)
            worst["v_minus_u"] = max(worst["v_minus_u"], check_unitary_compatibility(v, model.gauss) - k.compatibility)
    ok = (
        worst["idempotence"] <= 1e-10
        and worst["u"] <= 1e-8
        and worst["v_minus_u"] <= 1e-7
        and worst["generators_commute"] <= 1e-12
    )
    detail = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    assert _report(pytestconfig, 6, ok, detail)


DETERMINISM_CONFIG = """\
[experiment]
schema_version = 1

[model]
num_sites = 3
mass = 0.5
charge = 1.0

[kick]
kind = local-potential-quench
seeds = 0 1

[sweep]
lambda_grid = 0 1 20
beta_grid = 1
n_max_grid = 2
support = both
"""


def test_criterion_7_determinism(pytestconfig, tmp_path):
    cfg = tmp_path / "det.ini"
    cfg.write_text(DETERMINISM_CONFIG)
    outs = []
    for name in ("a", "b"):
        assert main(["report", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
        outs.append({p.name: data_section(p.read_text()) for p in sorted((tmp_path / name).iterdir())})
    differing = [k for k in outs[0] if outs[0][k] != outs[1].get(k)]
    ok = outs[0].keys() == outs[1].keys() and not differing
    assert _report(pytestconfig, 7, ok, f"{len(outs[0])} files compared, differing: {differing or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
