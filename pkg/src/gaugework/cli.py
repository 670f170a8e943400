"""Command-line driver: config parsing, grid orchestration and reporting.

Configs are INI files read with :mod:`configparser`::

    [experiment]
    schema_version = 1

    [model]
    num_sites = 3
    dimension = 1
    mass = 0.5
    charge = 1.0
    dim_cap = 1048576

    [kick]
    kind = local-potential-quench
    strength = 1.0
    duration = 1.0
    seeds = 0 1 2 3 4

    [sweep]
    lambda_grid = 0 0.5 1 2 5 10 20
    beta_grid = 0.2 1 5
    n_max_grid = 2
    support = both
    crossing_probe = true

    [output]
    directory = out
    format = csv

Every output file starts with a provenance header (``#`` lines in CSV, a
first ``{"provenance": ...}`` record in json-lines). The remaining lines are
the data section, which is byte-identical across runs with the same config
and seed.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .counterexample import (
    COMPAT_REJECT,
    COMPAT_TOL,
    KICK_KINDS,
    KICK_VERSION,
    ChiField,
    KickRejected,
    KickSpec,
    build_kick,
    div_j,
    identity_suite,
    optimal_chi,
    work_pipeline,
)
from .fields import algebra_defects, ccr_defect, fields_for, lattice_grad
from .gauss import KERNEL_TOL, build_gauss, projector_defects
from .hamiltonian import build_h_total
from .space import DENSE_DIM_CAP, DimensionCapExceeded, LatticeConfig, build_space
from .thermo import FULL, PHYSICAL, NumericalFailure, ThermoError, gibbs_state, min_work_oracle

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_NUMERIC = 0, 2, 3, 4
SUBCOMMANDS = ("model", "algebra", "identities", "work-sweep", "min-work", "report")
FORMATS = ("csv", "jsonl")

WORK_COLUMNS = (
    "n_max", "beta", "lambda", "seed", "support", "w_direct", "w0", "w_pred33", "w_pred35",
    "w_pred37", "oracle_bound", "ccr_budget", "max_identity_residual", "gauss_defect_U", "gauss_defect_V",
)
TOLERANCES = {
    "hermitian": 1e-12,
    "unitary": 1e-10,
    "gauss_kernel": KERNEL_TOL,
    "kick_compat": COMPAT_TOL,
    "kick_reject": COMPAT_REJECT,
    "work_orderings": 1e-10,
    "predicted_chain": 1e-10,
    "passivity": 1e-9,
}
# Sigma (div J)^2 below this counts as a vanishing divergence
DIV_FLOOR = 1e-10


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = "<config>", line: int | None = None):
        self.path, self.line = path, line
        where = f"{path}:{line}" if line else path
        super().__init__(f"{where}: {message}")


@dataclass
class ExperimentConfig:
    num_sites: int = 3
    dimension: int = 1
    mass: float = 0.5
    charge: float = 1.0
    dim_cap: int = 2**20
    kick_kind: str = "local-potential-quench"
    kick_strength: float = 1.0
    kick_duration: float = 1.0
    seeds: tuple[int, ...] = (0,)
    lambda_grid: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 5.0, 20.0)
    beta_grid: tuple[float, ...] = (1.0,)
    n_max_grid: tuple[int, ...] = (2,)
    support: str = "both"
    crossing_probe: bool = True
    out: str = "out"
    fmt: str = "csv"
    source_hash: str = ""
    source_path: str = "<defaults>"
    extra: dict = field(default_factory=dict)

    @property
    def supports(self) -> tuple[str, ...]:
        return (FULL, PHYSICAL) if self.support == "both" else (self.support,)

    def lattice(self, n_max: int, beta: float = 1.0) -> LatticeConfig:
        return LatticeConfig(
            num_sites=self.num_sites,
            n_max=n_max,
            dimension=self.dimension,
            mass=self.mass,
            charge=self.charge,
            beta=beta,
            dim_cap=self.dim_cap,
        )

    def as_dict(self) -> dict:
        return {
            "num_sites": self.num_sites,
            "dimension": self.dimension,
            "mass": self.mass,
            "charge": self.charge,
            "dim_cap": self.dim_cap,
            "kick_kind": self.kick_kind,
            "kick_strength": self.kick_strength,
            "kick_duration": self.kick_duration,
            "kick_version": KICK_VERSION,
            "seeds": list(self.seeds),
            "lambda_grid": list(self.lambda_grid),
            "beta_grid": list(self.beta_grid),
            "n_max_grid": list(self.n_max_grid),
            "support": self.support,
            "crossing_probe": self.crossing_probe,
        }


# ---------------------------------------------------------------- config parsing

_KEYS = {
    "experiment": {"schema_version"},
    "model": {"num_sites", "dimension", "mass", "charge", "dim_cap"},
    "kick": {"kind", "strength", "duration", "seed", "seeds"},
    "sweep": {"lambda_grid", "beta_grid", "n_max_grid", "support", "crossing_probe"},
    "output": {"directory", "format"},
}


def _line_of(text: str, section: str, key: str | None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header)."""
    current = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", line):
            return i
    return None


def _split_list(s: str) -> list[str]:
    return [t for t in re.split(r"[,\s]+", s.strip().strip("[]")) if t]


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Parse and validate an experiment config; errors carry the line number."""
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from exc
    return parse_config(text, path)


def parse_config(text: str, path: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=path)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", path, exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", path, lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", path, exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", path, exc.lineno) from exc

    def fail(section, key, msg):
        raise ConfigError(msg, path, _line_of(text, section, key))

    for section in parser.sections():
        if section not in _KEYS:
            fail(section, None, f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _KEYS[section]:
                fail(section, key, f"unknown key {key!r} in [{section}]")

    if not parser.has_option("experiment", "schema_version"):
        raise ConfigError("missing [experiment] schema_version", path, _line_of(text, "experiment", None))

    def get(section, key, conv, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            fail(section, key, f"bad value for {key}: {raw!r} ({exc})")

    def as_bool(s):
        v = s.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected true or false")

    def floats(s):
        vals = [float(t) for t in _split_list(s)]
        if not vals:
            raise ValueError("empty list")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("non-finite entry")
        return tuple(vals)

    def ints(s):
        vals = [int(t) for t in _split_list(s)]
        if not vals:
            raise ValueError("empty list")
        return tuple(vals)

    version = get("experiment", "schema_version", int, None)
    if version != SCHEMA_VERSION:
        fail("experiment", "schema_version", f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")

    cfg = ExperimentConfig(
        num_sites=get("model", "num_sites", int, 3),
        dimension=get("model", "dimension", int, 1),
        mass=get("model", "mass", float, 0.5),
        charge=get("model", "charge", float, 1.0),
        dim_cap=get("model", "dim_cap", int, 2**20),
        kick_kind=get("kick", "kind", str.strip, "local-potential-quench"),
        kick_strength=get("kick", "strength", float, 1.0),
        kick_duration=get("kick", "duration", float, 1.0),
        lambda_grid=get("sweep", "lambda_grid", floats, (0.0, 0.5, 1.0, 2.0, 5.0, 20.0)),
        beta_grid=get("sweep", "beta_grid", floats, (1.0,)),
        n_max_grid=get("sweep", "n_max_grid", ints, (2,)),
        support=get("sweep", "support", str.strip, "both"),
        crossing_probe=get("sweep", "crossing_probe", as_bool, True),
        out=get("output", "directory", str.strip, "out"),
        fmt=get("output", "format", str.strip, "csv"),
        source_hash=hashlib.sha256(text.encode()).hexdigest(),
        source_path=path,
    )
    if parser.has_option("kick", "seeds"):
        cfg.seeds = get("kick", "seeds", ints, (0,))
    elif parser.has_option("kick", "seed"):
        cfg.seeds = (get("kick", "seed", int, 0),)

    checks = [
        ("model", "num_sites", cfg.num_sites >= 1, "num_sites must be >= 1"),
        ("model", "dimension", cfg.dimension in (1, 2), "dimension must be 1 or 2"),
        ("model", "mass", cfg.mass >= 0, "mass must be >= 0"),
        ("model", "dim_cap", cfg.dim_cap >= 1, "dim_cap must be >= 1"),
        ("kick", "kind", cfg.kick_kind in KICK_KINDS, f"kind must be one of {', '.join(KICK_KINDS)}"),
        ("sweep", "beta_grid", all(b > 0 for b in cfg.beta_grid), "every beta must be > 0"),
        ("sweep", "n_max_grid", all(n >= 1 for n in cfg.n_max_grid), "every n_max must be >= 1"),
        ("sweep", "support", cfg.support in (FULL, PHYSICAL, "both"), "support must be full, physical or both"),
        ("output", "format", cfg.fmt in FORMATS, "format must be csv or jsonl"),
    ]
    for section, key, ok, msg in checks:
        if not ok:
            fail(section, key, msg)
    return cfg


def check_caps(cfg: ExperimentConfig, dense: bool = True):
    """Refuse the whole run if any grid point is over the dimension cap.

    Everything except ``model`` diagonalizes dense matrices, so those
    subcommands also respect the dense cap.
    """
    cap = min(cfg.dim_cap, DENSE_DIM_CAP) if dense else cfg.dim_cap
    for n in cfg.n_max_grid:
        lat = cfg.lattice(n)
        if lat.total_dim > cap:
            raise DimensionCapExceeded(lat.total_dim, cap, what=f"grid point n_max={n}")


# ---------------------------------------------------------------- model cache


class Bench:
    """Per-``n_max`` model objects, built once and shared by every grid point."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._models: dict[int, tuple] = {}
        self._states: dict[tuple, object] = {}
        self._kicks: dict[tuple, object] = {}

    def model(self, n_max: int):
        if n_max not in self._models:
            f = fields_for(self.cfg.lattice(n_max))
            self._models[n_max] = (f, build_h_total(f), build_gauss(f))
        return self._models[n_max]

    def state(self, n_max: int, beta: float, support: str):
        key = (n_max, beta, support)
        if key not in self._states:
            f, ham, gauss = self.model(n_max)
            self._states[key] = gibbs_state(ham.h_total, beta, support, gauss)
        return self._states[key]

    def kick(self, n_max: int, seed: int):
        key = (n_max, seed)
        if key not in self._kicks:
            f, _, gauss = self.model(n_max)
            spec = KickSpec(self.cfg.kick_kind, self.cfg.kick_strength, self.cfg.kick_duration, seed)
            self._kicks[key] = build_kick(spec, gauss, f)
        return self._kicks[key]


def _points(cfg: ExperimentConfig):
    return [
        (n, b, s, sup) for n in cfg.n_max_grid for b in cfg.beta_grid for s in cfg.seeds for sup in cfg.supports
    ]


def _parallel(fn, items, threads: int):
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def random_chi(num_sites: int, space, seed: int) -> ChiField:
    """Seeded random gauge function scaled to ``max |grad chi| = 1``."""
    rng = np.random.default_rng([seed, 7919])
    chi = rng.normal(size=num_sites)
    g = np.max(np.abs(lattice_grad(space, chi)))
    return ChiField(chi / g if g > 0 else chi)


# ---------------------------------------------------------------- subcommands


def run_model(cfg: ExperimentConfig, bench: Bench, threads: int) -> list[dict]:
    rows = []
    for n in cfg.n_max_grid:
        space = build_space(cfg.lattice(n))
        rows.append(
            {
                "n_max": n,
                "num_sites": space.num_sites,
                "dimension": cfg.dimension,
                "fermion_modes": space.num_modes,
                "links": len(space.links),
                "plaquettes": len(space.plaquettes),
                "fermion_dim": space.fermion_dim,
                "boson_dim": space.boson_dim,
                "dim": space.dim,
                "field_operators": 2 * space.num_modes + 3 * len(space.links) + len(space.plaquettes) + space.num_sites,
            }
        )
    return rows


def run_algebra(cfg: ExperimentConfig, bench: Bench, threads: int) -> list[dict]:
    def one(item):
        n, beta = item
        f, ham, gauss = bench.model(n)
        st = bench.state(n, beta, FULL)
        alg = algebra_defects(f)
        ccr = ccr_defect(f, st.rho)
        proj = projector_defects(gauss)
        return {
            "n_max": n,
            "beta": beta,
            "car": alg["car"],
            "cross": alg["cross"],
            "aa": alg["aa"],
            "ee": alg["ee"],
            "ccr_max": max(ccr.per_link),
            "ccr_below_edge": max(ccr.below_edge),
            "top_weight": ccr.thermal_max,
            "ccr_thermal": ccr.thermal_defect,
            "gauss_defect_H": ham.gauss_defect,
            "physical_dim": gauss.physical_dim,
            "projector_idempotence": proj["idempotence"],
            "generators_commute": proj["generators_commute"],
        }

    items = [(n, b) for n in cfg.n_max_grid for b in cfg.beta_grid]
    for n in cfg.n_max_grid:
        bench.model(n)
    return _parallel(one, items, threads)


def _state_or_none(bench, n, beta, support):
    try:
        return bench.state(n, beta, support)
    except ThermoError as exc:
        print(f"warning: n_max={n} beta={beta} support={support}: {exc}", file=sys.stderr)
        return None


def run_identities(cfg: ExperimentConfig, bench: Bench, threads: int) -> list[dict]:
    def one(point):
        n, beta, seed, support = point
        f, ham, gauss = bench.model(n)
        st = _state_or_none(bench, n, beta, support)
        if st is None:
            return None
        kick = bench.kick(n, seed)
        chi = random_chi(f.space.num_sites, f.space, seed)
        ccr = ccr_defect(f, st.rho)
        rep = identity_suite(kick.unitary, chi, f, ham, gauss, st, ccr_budget=ccr.thermal_defect, lam=1.0)
        row = {"n_max": n, "beta": beta, "seed": seed, "support": support, "eq30_sign": rep.eq30_sign}
        row["residuals"] = dict(rep.residuals)
        row["weighted"] = dict(sorted(rep.weighted.items()))
        row["ccr_budget"] = rep.ccr_budget
        row["budget"] = rep.budget
        return row

    _warm(cfg, bench)
    return [r for r in _parallel(one, _points(cfg), threads) if r is not None]


def _warm(cfg, bench):
    # build shared models and kicks serially so threads only read them
    for n in cfg.n_max_grid:
        bench.model(n)
        for s in cfg.seeds:
            bench.kick(n, s)


def _lambda_grid(cfg, w0: float, div_sq: float) -> list[float]:
    grid = list(cfg.lambda_grid)
    if cfg.crossing_probe and div_sq > DIV_FLOOR:
        crossing = w0 / div_sq
        if crossing >= max(grid):
            grid.append(float(2 * crossing))
    return grid


def run_work_sweep(cfg: ExperimentConfig, bench: Bench, threads: int) -> list[dict]:
    def one(point):
        n, beta, seed, support = point
        f, ham, gauss = bench.model(n)
        st = _state_or_none(bench, n, beta, support)
        if st is None:
            return []
        kick = bench.kick(n, seed)
        probe = work_pipeline(kick.unitary, [0.0], st, ham, f, None)[0]
        grid = _lambda_grid(cfg, probe.w0, probe.div_j_sq)
        reports = work_pipeline(kick.unitary, grid, st, ham, f, gauss)
        div = div_j(kick.unitary, st, f)
        out = []
        for rep in reports:
            chi, _ = optimal_chi(div, rep.lam)
            ids = identity_suite(kick.unitary, chi, f, ham, gauss)
            out.append(
                {
                    "n_max": n,
                    "beta": beta,
                    "lambda": rep.lam,
                    "seed": seed,
                    "support": support,
                    "w_direct": rep.w_direct,
                    "w0": rep.w0,
                    "w_pred33": rep.w_pred33,
                    "w_pred35": rep.w_pred35,
                    "w_pred37": rep.w_pred37,
                    "oracle_bound": rep.oracle_bound,
                    "ccr_budget": rep.defect_budget,
                    "max_identity_residual": ids.max_residual(),
                    "gauss_defect_U": kick.compatibility,
                    "gauss_defect_V": rep.gauss_defect_v,
                    "w_via_eq2": rep.w_via_eq2,
                    "gap": rep.gap,
                    "div_j_sq": rep.div_j_sq,
                    "probe": rep.lam not in cfg.lambda_grid,
                }
            )
        return out

    _warm(cfg, bench)
    return [row for rows in _parallel(one, _points(cfg), threads) for row in rows]


def run_min_work(cfg: ExperimentConfig, bench: Bench, threads: int) -> list[dict]:
    rows = []
    for n in cfg.n_max_grid:
        f, ham, gauss = bench.model(n)
        for beta in cfg.beta_grid:
            for support in cfg.supports:
                st = _state_or_none(bench, n, beta, support)
                if st is None:
                    continue
                rows.append(
                    {
                        "n_max": n,
                        "beta": beta,
                        "support": support,
                        "oracle_bound": min_work_oracle(ham.h_total, st),
                        "log_z": st.log_z,
                    }
                )
    return rows


def summarize(work_rows: list[dict], identity_rows: list[dict], oracle_rows: list[dict]) -> dict:
    full = [r for r in work_rows if r["support"] == FULL]
    grid_full = [r for r in full if not r["probe"]]
    moving = [r for r in full if r["div_j_sq"] > DIV_FLOOR]
    # large lambda: the last (largest) lambda of each grid point's series
    last = {}
    for r in moving:
        key = (r["n_max"], r["beta"], r["seed"])
        if key not in last or r["lambda"] > last[key]["lambda"]:
            last[key] = r
    signs = sorted({r["eq30_sign"] for r in identity_rows})
    full_oracles = [r["oracle_bound"] for r in oracle_rows if r["support"] == FULL]
    return {
        "work_rows": len(work_rows),
        "full_grid_points": len(grid_full),
        "min_w_direct_full": min((r["w_direct"] for r in full), default=float("nan")),
        "passive_full": all(r["w_direct"] >= -TOLERANCES["passivity"] for r in full),
        "max_abs_oracle_full": max((abs(x) for x in full_oracles), default=float("nan")),
        "series_with_divergence": len(last),
        "pred37_negative_at_large_lambda": all(r["w_pred37"] < 0 for r in last.values()),
        "min_w_pred37_full": min((r["w_pred37"] for r in full), default=float("nan")),
        "max_gap_over_budget": max(
            (r["gap"] / r["ccr_budget"] for r in full if r["ccr_budget"] > 0), default=0.0
        ),
        "max_gauss_defect_V": max((r["gauss_defect_V"] for r in work_rows), default=0.0),
        "eq30_signs": signs,
        "physical_div_j_sq_max": max(
            (r["div_j_sq"] for r in work_rows if r["support"] == PHYSICAL), default=float("nan")
        ),
    }


# ---------------------------------------------------------------- output


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, np.generic):
        return _clean(v.item())
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def provenance(cfg: ExperimentConfig, subcommand: str) -> dict:
    return {
        "subcommand": subcommand,
        "code_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "config_path": cfg.source_path,
        "config_sha256": cfg.source_hash,
        "seeds": list(cfg.seeds),
        "kick_version": KICK_VERSION,
        "tolerances": TOLERANCES,
        "numpy": np.__version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def render(rows: list[dict], fmt: str, header: dict, columns=None) -> str:
    buf = io.StringIO()
    if fmt == "jsonl":
        buf.write(json.dumps({"provenance": _clean(header)}, sort_keys=True) + "\n")
        for r in rows:
            buf.write(json.dumps(_clean(r), sort_keys=True) + "\n")
        return buf.getvalue()
    for k, v in header.items():
        buf.write(f"# {k}: {json.dumps(_clean(v), sort_keys=True)}\n")
    rows = [_flatten(r) for r in rows]
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def _flatten(row: dict) -> dict:
    """Nested maps become ``outer_inner`` columns for CSV."""
    out = {}
    for k, v in row.items():
        if isinstance(v, dict):
            out.update({f"{k}_{kk}": vv for kk, vv in v.items()})
        else:
            out[k] = v
    return out


def data_section(text: str) -> str:
    """Strip the provenance header from rendered output."""
    lines = text.splitlines(keepends=True)
    if lines and lines[0].startswith('{"provenance"'):
        return "".join(lines[1:])
    return "".join(l for l in lines if not l.startswith("#"))


def _write(out: Path, name: str, rows, fmt, header, columns=None) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.{fmt}"
    path.write_text(render(rows, fmt, header, columns))
    return path


_RUNNERS = {
    "model": run_model,
    "algebra": run_algebra,
    "identities": run_identities,
    "work-sweep": run_work_sweep,
    "min-work": run_min_work,
}


def execute(subcommand: str, cfg: ExperimentConfig, out: Path, fmt: str, threads: int = 1) -> list[Path]:
    check_caps(cfg, dense=subcommand != "model")
    bench = Bench(cfg)
    written = []
    names = list(_RUNNERS) if subcommand == "report" else [subcommand]
    results = {}
    for name in names:
        rows = _RUNNERS[name](cfg, bench, threads)
        results[name] = rows
        columns = WORK_COLUMNS if (name == "work-sweep" and fmt == "csv") else None
        written.append(_write(out, name.replace("-", "_"), rows, fmt, provenance(cfg, name), columns))
        if name == "model":
            for r in rows:
                print(f"n_max={r['n_max']} dim {r['dim']} ({r['fermion_dim']} x {r['boson_dim']})")
    if subcommand == "report":
        summary = summarize(results["work-sweep"], results["identities"], results["min-work"])
        written.append(_write(out, "summary", [summary], fmt, provenance(cfg, "summary")))
        for k, v in summary.items():
            print(f"{k}: {_fmt(v)}")
    return written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaugework", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="INI experiment config")
    p.add_argument("--out", help="output directory (overrides [output] directory)")
    p.add_argument("--format", choices=FORMATS, help="output format (overrides [output] format)")
    p.add_argument("--seed", type=int, help="single kick seed (overrides [kick] seeds)")
    p.add_argument("--threads", type=int, default=1, help="grid-point workers, 0 = one per CPU")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seeds = (args.seed,)
    if args.threads < 0:
        print("config error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.out)
    fmt = args.format or cfg.fmt
    try:
        paths = execute(args.subcommand, cfg, out, fmt, args.threads)
    except DimensionCapExceeded as exc:
        print(f"dimension cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (NumericalFailure, KickRejected, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
