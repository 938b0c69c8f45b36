"""Config-driven experiment harness: one experiment per TOML file."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import energy_monitor as em
from .cosmology import (ScaleModel, VilenkinParams, frw_residuals, lambda_for_length, scale_eval,
                        vilenkin_energy_along, vilenkin_potential)
from .field_solver import OVERRIDE_KEYS, FieldState, build_problem, evolve, positive_frequency_velocity
from .frame import PhysicalConstants, kappa_dimension
from .geodesic import GeodesicScenario, conservation_audit, initial_state, integrate
from .grid import Grid, gaussian, plane_wave, random_phase
from .nr_limit import LimitStudyConfig, limit_study
from .tensor_kit import conformal_f, f_residual, verify_isotropic_forms

log = logging.getLogger("cfieldlab")

EXPERIMENTS = ("evolve", "balance", "limit_study", "frw_check", "tensor_check", "vilenkin", "geodesic")
PROFILES = ("gaussian", "plane_wave", "zero")
PI_INIT = ("positive_frequency", "zero")


class ConfigError(ValueError):
    """Every violation found in a config, each as (key path, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{k}: {m}" for k, m in self.errors))


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

_TOP = {
    "experiment": (str, None),
    "preset": (str, "kg"),
    "dt": (float, 1e-3),
    "T": (float, 1.0),
    "stride": (int, 10),
    "seed": (int, None),
    "output": (str, "out"),
    "family": (str, None),
    "audit_C": (float, 1.0),
    "tolerance": (float, None),
}
_SECTIONS = {
    "grid": {"n_dim": (int, 1), "points": (int, 64), "extent": (float, 2 * math.pi)},
    "initial": {"profile": (str, "gaussian"), "width": (float, 0.5), "center": (list, None),
                "mode": (list, [1]), "amplitude": (float, 1.0), "momentum": (list, None),
                "pi": (str, "positive_frequency")},
    "overrides": None,  # free-form, checked against the preset keys
    "limit": {"c_values": (list, [10.0, 20.0, 40.0, 80.0]), "T": (float, 0.1), "mode": (list, [4]),
              "points": (int, 16), "extent": (float, 2 * math.pi), "lam": (float, 0.0), "p": (float, 3.0),
              "sign": (int, 1), "m": (float, 1.0), "hbar": (float, 1.0)},
    "frw": {"sigmas": (list, [-2.0, -1.0, 0.0, 1 / 3]), "dims": (list, [3, 4]),
            "times": (list, [0.0, 0.3, 0.6, 0.9]), "a0": (float, 1.0), "da0": (float, 0.5),
            "k": (float, 0.0), "q": (float, 1.0), "c": (float, 1.0), "G_newton": (float, 1.0)},
    "tensor": {"n_dim": (int, 3), "samples": (int, 20), "sigma": (float, 0.0), "da0": (float, 0.5),
               "k": (float, 1.0), "q": (float, 1.0), "h": (float, 1e-3), "c": (float, 1.0)},
    "vilenkin": {"n_dim": (int, 3), "ell": (float, 1.0), "c": (float, 1.0), "k": (float, 1.0),
                 "q": (float, 1.0), "times": (list, [0.0, 0.25, 0.5, 0.75, 1.0]), "a0": (float, 1.0)},
    "geodesic": {"n_dim": (int, 1), "H": (float, 0.0), "omega0": (float, 0.0), "omega1": (float, 0.0),
                 "m": (float, 1.0), "c": (float, 1.0), "x": (list, None), "p": (list, None),
                 "steps": (int, 10000)},
}


def _check_type(val, typ):
    if typ is float:
        return isinstance(val, (int, float)) and not isinstance(val, bool)
    if typ is int:
        return isinstance(val, int) and not isinstance(val, bool)
    return isinstance(val, typ)


def _fill(raw: dict, schema: dict, prefix: str, errors: list) -> dict:
    out = {}
    for key in raw:
        if key not in schema:
            errors.append((prefix + key, "unknown key"))
    for key, (typ, default) in schema.items():
        if key in raw:
            val = raw[key]
            if not _check_type(val, typ):
                errors.append((prefix + key, f"expected {typ.__name__}, got {type(val).__name__}"))
                out[key] = None
                continue
            out[key] = float(val) if typ is float else val
        else:
            out[key] = default
    return out


@dataclass
class ExperimentConfig:
    experiment: str
    preset: str = "kg"
    overrides: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    dt: float = 1e-3
    T: float = 1.0
    stride: int = 10
    seed: Optional[int] = None
    output: str = "out"
    family: Optional[str] = None
    audit_C: float = 1.0
    tolerance: Optional[float] = None
    sections: dict = field(default_factory=dict)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a TOML config; raises ConfigError listing every violation."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([("<text>", f"not valid TOML: {exc}")]) from exc
    errors: list = []
    top = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    tables = {k: v for k, v in raw.items() if isinstance(v, dict)}
    for k in tables:
        if k not in _SECTIONS:
            errors.append((k, "unknown section"))
    vals = _fill(top, _TOP, "", errors)
    sections = {name: _fill(tables.get(name, {}), schema, name + ".", errors)
                for name, schema in _SECTIONS.items() if schema is not None}
    overrides = dict(tables.get("overrides", {}))
    for k in overrides:
        if k not in OVERRIDE_KEYS:
            errors.append(("overrides." + k, "unknown key"))

    exp = vals["experiment"]
    if exp is None:
        errors.append(("experiment", "required"))
    elif exp not in EXPERIMENTS:
        errors.append(("experiment", f"must be one of {EXPERIMENTS}"))
    for key in ("dt", "T"):
        if vals[key] is not None and vals[key] <= 0:
            errors.append((key, "must be positive"))
    if vals["stride"] is not None and vals["stride"] < 1:
        errors.append(("stride", "must be >= 1"))
    if vals["family"] is not None and vals["family"] not in em.FAMILIES:
        errors.append(("family", f"must be one of {em.FAMILIES}"))
    g = sections["grid"]
    if g["n_dim"] is not None and g["n_dim"] not in (1, 2, 3):
        errors.append(("grid.n_dim", "must be 1, 2 or 3"))
    pts = g["points"]
    if pts is not None and (pts < 2 or pts & (pts - 1)):
        errors.append(("grid.points", "must be a power of two"))
    if g["extent"] is not None and g["extent"] <= 0:
        errors.append(("grid.extent", "must be positive"))
    ini = sections["initial"]
    if ini["profile"] is not None and ini["profile"] not in PROFILES:
        errors.append(("initial.profile", f"must be one of {PROFILES}"))
    if ini["pi"] is not None and ini["pi"] not in PI_INIT:
        errors.append(("initial.pi", f"must be one of {PI_INIT}"))
    if ini["width"] is not None and ini["width"] <= 0:
        errors.append(("initial.width", "must be positive"))
    lim = sections["limit"]
    cv = lim["c_values"]
    if cv is not None and (len(cv) < 2 or any(not _check_type(c, float) or c <= 0 for c in cv)
                           or any(b <= a for a, b in zip(cv, cv[1:]))):
        errors.append(("limit.c_values", "need >= 2 positive, strictly increasing numbers"))
    if exp in ("evolve", "balance") and vals["preset"] == "elliptic":
        errors.append(("preset", "elliptic is not an initial value problem; it cannot be evolved"))
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(exp, vals["preset"], overrides, sections["grid"], sections["initial"],
                            vals["dt"], vals["T"], vals["stride"], vals["seed"], vals["output"],
                            vals["family"], vals["audit_C"], vals["tolerance"],
                            {k: sections[k] for k in ("limit", "frw", "tensor", "vilenkin", "geodesic")})


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_csv(series, path, columns: Optional[list] = None):
    """Write a list of row dicts; complex columns split into <name>_re, <name>_im."""
    series = list(series)
    if columns is None:
        columns = list(series[0]) if series else []
    is_complex = {c: any(isinstance(r.get(c), (complex, np.complexfloating)) for r in series) for c in columns}
    header = []
    for c in columns:
        header += [c + "_re", c + "_im"] if is_complex[c] else [c]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in series:
            if set(r) != set(columns):
                raise ValueError(f"row keys {sorted(r)} differ from columns {columns}")
            row = []
            for c in columns:
                v = r[c]
                if is_complex[c]:
                    v = complex(v)
                    row += [_fmt(v.real), _fmt(v.imag)]
                else:
                    row.append(_fmt(v))
            w.writerow(row)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    exit_code: int
    summary: dict
    csv_path: Optional[Path] = None


def _initial_state(cfg: ExperimentConfig, problem, grid: Grid) -> FieldState:
    ini = cfg.initial
    prof = ini["profile"]
    if prof == "zero":
        u = np.zeros(grid.shape, dtype=complex)
    elif prof == "plane_wave":
        u = plane_wave(grid, ini["mode"], ini["amplitude"])
    else:
        u = gaussian(grid, ini["width"], ini["center"], ini["amplitude"], ini["momentum"])
    u = u * random_phase(cfg.seed)
    if problem.order == "first":
        return FieldState(0.0, u, grid)
    pi = positive_frequency_velocity(problem, grid, u) if ini["pi"] == "positive_frequency" else np.zeros_like(u)
    return FieldState(0.0, u, grid, pi)


def _field_setup(cfg):
    ov = dict(cfg.overrides)
    ov.setdefault("n_dim", cfg.grid["n_dim"])
    problem = build_problem(cfg.preset, ov)
    grid = Grid.uniform(cfg.grid["n_dim"], cfg.grid["points"], cfg.grid["extent"])
    return problem, grid, _initial_state(cfg, problem, grid)


def _run_evolve(cfg):
    problem, grid, state0 = _field_setup(cfg)

    def obs(pr, st):
        return {"t": st.t, "l2_norm": grid.l2_norm(st.phi), "max_abs": float(np.max(np.abs(st.phi)))}

    final, rec = evolve(problem, state0, cfg.dt, cfg.T, {"o": obs}, cfg.stride)
    rows = rec["o"]
    return rows, ["t", "l2_norm", "max_abs"], {"final_l2_norm": rows[-1]["l2_norm"]}, True


def _run_balance(cfg):
    problem, grid, state0 = _field_setup(cfg)
    mon = em.BalanceMonitor(cfg.family)
    _, rec = evolve(problem, state0, cfg.dt, cfg.T, {"b": mon}, 1)
    ledger = rec["b"]
    rep = em.balance_audit(ledger, cfg.dt, C=cfg.audit_C)
    keep = [r for i, r in enumerate(ledger) if i % cfg.stride == 0 or i == len(ledger) - 1]
    rows = [r.row() for r in keep]
    summary = {"family": mon.family, "regime": ledger[0].regime, "max_balance_residual": rep.max_residual,
               "tolerance": rep.tolerance, "e0_drift": rep.e0_drift, "nonincreasing": rep.nonincreasing,
               "nondecreasing": rep.nondecreasing, "min_sink": min(r.sink_min for r in ledger)}
    passed = rep.passed
    if cfg.tolerance is not None:
        summary["tolerance"] = cfg.tolerance
        passed = rep.max_residual < cfg.tolerance
    return rows, ["t", "e0_integral", "flux_accum", "balance_residual", "regime"], summary, passed


def _run_limit(cfg):
    L = cfg.sections["limit"]
    lc = LimitStudyConfig(tuple(L["c_values"]), T=L["T"], m=L["m"], hbar=L["hbar"], lam=L["lam"], p=L["p"],
                          sign=L["sign"], n_dim=len(L["mode"]), points=L["points"], extent=L["extent"],
                          mode=tuple(L["mode"]))
    res = limit_study(lc)
    rows = [{"c": c, "error": e, "observed_order": o} for c, e, o in res.rows]
    return rows, ["c", "error", "observed_order"], {"dt": res.dt, "strictly_decreasing": res.strictly_decreasing}, \
        res.strictly_decreasing


def _run_frw(cfg):
    F = cfg.sections["frw"]
    tol = cfg.tolerance or 1e-10
    rows = []
    for n in F["dims"]:
        consts = PhysicalConstants(c=F["c"], G_newton=F["G_newton"])
        kappa = kappa_dimension(int(n), consts)
        for s in F["sigmas"]:
            model = ScaleModel.power_law(int(n), s, F["a0"], F["da0"])
            for t in F["times"]:
                r = frw_residuals(model, s, F["q"], F["k"], t, kappa, consts)
                rows.append({"n": int(n), "sigma": float(s), "t": float(t), **r.as_dict()})
    worst = max(max(r[k] for k in ("friedmann", "pressure", "raychaudhuri", "mass")) for r in rows)
    return rows, ["n", "sigma", "t", "friedmann", "pressure", "raychaudhuri", "mass"], \
        {"max_residual": worst, "tolerance": tol}, worst < tol


def _frw_h(model):
    def h_fn(z0):
        a, da, dda = scale_eval(model, z0)
        return 2 * np.log(a), 2 * da / a, 2 * (dda / a - (da / a) ** 2)
    return h_fn


def _run_tensor(cfg):
    S = cfg.sections["tensor"]
    tol = cfg.tolerance or 1e-6
    n = S["n_dim"]
    consts = PhysicalConstants(c=S["c"])
    model = ScaleModel.power_law(n, S["sigma"], 1.0, S["da0"])
    rng = np.random.default_rng(0 if cfg.seed is None else cfg.seed)
    rows = []
    for i in range(S["samples"]):
        z = np.concatenate([[rng.uniform(0.0, 0.5)], rng.uniform(0.2, 1.0, n)])
        rep = verify_isotropic_forms(_frw_h(model), conformal_f(S["q"], S["k"]), z, S["h"], n_dim=n,
                                     consts=consts, kq=(S["k"], S["q"]))
        r = float(np.sqrt(np.sum(z[1:] ** 2)))
        rows.append({"sample": i, "z0": float(z[0]), "r": r, "g00": rep.g00, "gjk": rep.gjk, "mixed": rep.mixed,
                     "scalar": rep.scalar, "f_residual": abs(f_residual(S["q"], S["k"], r))})
    worst = max(max(r["g00"], r["gjk"], r["scalar"]) for r in rows)
    fworst = max(r["f_residual"] for r in rows)
    ok = worst < tol and fworst < 1e-12
    return rows, ["sample", "z0", "r", "g00", "gjk", "mixed", "scalar", "f_residual"], \
        {"max_curvature_residual": worst, "max_f_residual": fworst, "tolerance": tol}, ok


def _run_vilenkin(cfg):
    V = cfg.sections["vilenkin"]
    n = V["n_dim"]
    consts = PhysicalConstants(c=V["c"])
    kappa = kappa_dimension(n, consts)
    tol = cfg.tolerance or 1e-10
    rows = []
    for branch in ("cosh", "exp"):
        for sign in (1, -1):
            params = VilenkinParams(V["ell"], V["c"], V["k"], V["q"], 0.0, sign, V["a0"])
            Hs = vilenkin_energy_along(branch, params, n, V["times"], kappa, consts)
            rows += [{"branch": branch, "sign": sign, "t": float(t), "H": complex(h)} for t, h in zip(V["times"], Hs)]
    worst = max(abs(r["H"]) for r in rows)
    Lam = lambda_for_length(n, V["ell"])
    a = np.linspace(0, V["ell"], 101)[1:-1]
    pot = vilenkin_potential(a, n, V["k"], V["q"], Lam, consts)
    v_ell = abs(vilenkin_potential(V["ell"], n, V["k"], V["q"], Lam, consts))
    ok = worst < tol and bool(np.all(pot.real > 0)) and v_ell < 1e-12
    return rows, ["branch", "sign", "t", "H"], {"max_abs_H": worst, "V_at_ell": v_ell,
                                               "V_positive_inside": bool(np.all(pot.real > 0))}, ok


def _run_geodesic(cfg):
    G = cfg.sections["geodesic"]
    n = G["n_dim"]
    scale = ScaleModel.de_sitter(n, G["H"]) if G["H"] != 0 else ScaleModel.constant(n)
    sc = GeodesicScenario(n, scale, omega0=G["omega0"], omega1=G["omega1"], m=G["m"], c=G["c"])
    x = G["x"] or [0.0] * n
    p = np.asarray(G["p"] or [0.3] * n, dtype=complex) * np.exp(1j * G["omega1"])
    tol = cfg.tolerance or 1e-7
    traj = integrate(sc, initial_state(sc, x, p), cfg.dt, G["steps"], cfg.stride)
    rows = []
    for s in traj:
        row = {"t": s.t}
        row.update({f"x{j}": complex(s.x[j]) for j in range(n)})
        row.update({f"p{j}": complex(s.p_up[j]) for j in range(n)})
        row.update({"H": s.H, "H_R": s.hr, "residual": abs(s.H + s.hr_accum - traj[0].H) / abs(traj[0].H)})
        rows.append(row)
    cols = ["t"] + [f"x{j}" for j in range(n)] + [f"p{j}" for j in range(n)] + ["H", "H_R", "residual"]
    res = conservation_audit(traj)
    return rows, cols, {"conservation_residual": res, "tolerance": tol}, res < tol


_RUNNERS = {"evolve": _run_evolve, "balance": _run_balance, "limit_study": _run_limit, "frw_check": _run_frw,
            "tensor_check": _run_tensor, "vilenkin": _run_vilenkin, "geodesic": _run_geodesic}


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> RunResult:
    """Run one experiment, write <experiment>.csv and summary.txt, return the exit status."""
    out = Path(out_dir or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        rows, cols, summary, passed = _RUNNERS[cfg.experiment](cfg)
    except Exception as exc:
        raise RuntimeError(f"experiment {cfg.experiment!r} failed: {exc}") from exc
    wall = time.perf_counter() - t0
    csv_path = out / f"{cfg.experiment}.csv"
    emit_csv(rows, csv_path, cols)
    summary = {"experiment": cfg.experiment, "passed": passed, **summary, "wall_time_s": wall}
    with open(out / "summary.txt", "w") as fh:
        for k, v in summary.items():
            fh.write(f"{k}: {_fmt(v)}\n")
    log.info("%s: %s (%.2fs)", cfg.experiment, "pass" if passed else "FAIL", wall)
    return RunResult(0 if passed else 1, summary, csv_path)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="cfieldlab", description=__doc__)
    ap.add_argument("config", help="TOML experiment config")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("--seed", type=int, help="seed for randomized profile phases and sample points")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(Path(args.config).read_text())
    except ConfigError as exc:
        for k, m in exc.errors:
            print(f"config error: {k}: {m}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    try:
        res = run_experiment(cfg, args.out)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for k, v in res.summary.items():
        print(f"{k}: {_fmt(v)}")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
