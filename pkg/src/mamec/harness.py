"""Scenario generation, experiment sweeps, validation battery, and CLI.

Defaults reproduce the reference parameter set: a 1 s block, 50 kHz of
bandwidth, eight movable antennas in a 3-wavelength square region with
half-wavelength minimum spacing, six devices at 7-8 m, a 40 dBm power
budget, -80 dBm noise, the sigmoid harvester (0.024 W, 150, 0.014 W),
a 0.4 GHz edge CPU, 1000 cycles/bit tasks and a 1e-26 W/Hz^3 CPU
capacitance coefficient.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, replace, asdict

import numpy as np

from . import ao
from .ao import SchemeConfig, Solution
from .channel import WdChannel, channel_response, sample_wd_channel
from .harvest import eh_constants, harvested_power, received_rf_power
from .pso import min_distance_feasible
from .rates import Allocation, SystemParams, combining_gain, edge_feasible, \
    local_energy, offload_rate, suffix_sums
from .subsolvers import mrc_combiner, project_psd_trace, recover_beams, \
    solve_time_energy, sca_beamforming

__all__ = [
    "Scenario",
    "SweepSpec",
    "default_params",
    "dbm_to_watts",
    "watts_to_dbm",
    "build_scenario",
    "run_scheme",
    "run_sweep",
    "validate",
    "validate_solution",
    "main",
]

SEED_ENV_VAR = "MAMEC_SEED"
_SCHEME_IDS = {"dynamic": 0, "semi_dynamic": 1, "static": 2, "fpa": 3}
_PSO_IDS = {"vls": 0, "standard": 1}
_MODE_IDS = {"partial": 0, "offloading_only": 1}


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x_w: float) -> float:
    return 10.0 * np.log10(x_w) + 30.0


def default_params(**overrides) -> SystemParams:
    """Reference parameter set; keyword overrides replace single fields."""
    lam = 0.1
    base = dict(
        t_block=1.0,
        bandwidth=50e3,
        lambda_m=lam,
        region_a=3.0 * lam,
        min_dist=0.5 * lam,
        m_antennas=8,
        k_wds=6,
        p_max=dbm_to_watts(40.0),
        noise=dbm_to_watts(-80.0),
        kappa=1e-26,
        f_edge=0.4e9,
        phi=1000.0,
        eh=eh_constants(0.024, 150.0, 0.014),
        c0=(lam / (4.0 * np.pi)) ** 2,
        alpha=2.2,
        l_paths=10,
    )
    base.update(overrides)
    return SystemParams(**base)


@dataclass
class Scenario:
    params: SystemParams
    wd_channels: list
    seed: int


def build_scenario(params: SystemParams, seed: int) -> Scenario:
    """Place devices uniformly at 7-8 m and draw their channels.

    Distances and per-device channels use independent counter-derived
    substreams of the master seed, so the construction is reproducible
    and insensitive to evaluation order.
    """
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(params.k_wds + 1)
    distances = np.random.default_rng(children[0]).uniform(7.0, 8.0, params.k_wds)
    channels = [
        sample_wd_channel(np.random.default_rng(children[k + 1]), params.l_paths,
                          distances[k], params.c0, params.alpha)
        for k in range(params.k_wds)
    ]
    return Scenario(params=params, wd_channels=channels, seed=int(seed))


def scheme_label(cfg: SchemeConfig) -> str:
    return f"{cfg.positioning}:{cfg.pso_mode}:{cfg.offload_mode}"


def run_scheme(scenario: Scenario, cfg: SchemeConfig) -> Solution:
    """Dispatch one scheme solver with a seed derived from the scenario."""
    key = (scenario.seed, _SCHEME_IDS[cfg.positioning],
           _PSO_IDS[cfg.pso_mode], _MODE_IDS[cfg.offload_mode])
    rng = np.random.default_rng(np.random.SeedSequence(entropy=scenario.seed,
                                                       spawn_key=key[1:]))
    if cfg.positioning == "dynamic":
        return ao.solve_dynamic(scenario, cfg, rng)
    if cfg.positioning == "semi_dynamic":
        return ao.solve_semidynamic(scenario, cfg, rng)
    if cfg.positioning == "static":
        return ao.solve_static(scenario, cfg, rng)
    return ao.solve_fpa(scenario, cfg)


# ---------------------------------------------------------------------------
# sweeps

_VARIABLES = {
    "M": "m_antennas",
    "K": "k_wds",
    "P_max": "p_max_dbm",
    "L_k": "l_paths",
    "f_E": "f_edge",
    "phi": "phi",
    "m_antennas": "m_antennas",
    "k_wds": "k_wds",
    "p_max_dbm": "p_max_dbm",
    "l_paths": "l_paths",
    "f_edge": "f_edge",
}


@dataclass
class SweepSpec:
    variable: str
    values: list
    seeds: list
    schemes: list  # of SchemeConfig
    params: SystemParams = None

    def __post_init__(self):
        if self.variable not in _VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        if not self.values or not list(self.seeds) or not self.schemes:
            raise ValueError("values, seeds and schemes must be non-empty")
        if self.params is None:
            self.params = default_params()


def apply_sweep_value(params: SystemParams, variable: str, value) -> SystemParams:
    """Rebuild the parameter set with one swept field replaced.

    ``P_max`` values are interpreted in dBm, matching how power budgets
    are usually swept.
    """
    field = _VARIABLES[variable]
    if field == "p_max_dbm":
        return replace(params, p_max=dbm_to_watts(float(value)))
    if field == "phi":
        return replace(params, phi=np.full(params.k_wds, float(value)))
    if field == "k_wds":
        k = int(value)
        return replace(params, k_wds=k, phi=np.full(k, float(params.phi[0])))
    if field in ("m_antennas", "l_paths"):
        return replace(params, **{field: int(value)})
    return replace(params, **{field: float(value)})


def _params_json(params: SystemParams) -> str:
    d = asdict(params)
    d["phi"] = list(map(float, params.phi))
    d["eh"] = asdict(params.eh)
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def run_sweep(spec: SweepSpec, out_path: str) -> dict:
    """Run every (value, seed, scheme) cell and write a CSV of results.

    Rows are emitted in sorted (value, seed, scheme) order; cell failures
    are recorded in the status column without aborting the sweep. A
    second CSV next to ``out_path`` holds per-scheme mean/std summaries.
    """
    rows = []
    for value in spec.values:
        params_v = apply_sweep_value(spec.params, spec.variable, value)
        pjson = _params_json(params_v)
        for seed in spec.seeds:
            scenario = build_scenario(params_v, int(seed))
            for cfg in spec.schemes:
                label = scheme_label(cfg)
                t0 = time.perf_counter()
                try:
                    sol = run_scheme(scenario, cfg)
                    scr, iters, status = sol.scr, sol.outer_iters, "ok"
                except Exception as exc:  # keep sweeping
                    scr, iters, status = float("nan"), 0, f"error:{exc}"
                wall_ms = 1000.0 * (time.perf_counter() - t0)
                rows.append({
                    "variable": spec.variable, "value": value, "seed": int(seed),
                    "scheme": label, "scr_bps": repr(float(scr)),
                    "iters": iters, "wall_ms": f"{wall_ms:.1f}",
                    "status": status, "params_json": pjson,
                })
    rows.sort(key=lambda r: (str(r["value"]), r["seed"], r["scheme"]))

    fields = ["variable", "value", "seed", "scheme", "scr_bps", "iters",
              "wall_ms", "status", "params_json"]
    with open(out_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)

    summary = {}
    for r in rows:
        if r["status"] != "ok":
            continue
        key = (r["value"], r["scheme"])
        summary.setdefault(key, []).append(float(r["scr_bps"]))
    summary_rows = [
        {"variable": spec.variable, "value": value, "scheme": scheme,
         "n": len(v), "scr_mean": repr(float(np.mean(v))),
         "scr_std": repr(float(np.std(v)))}
        for (value, scheme), v in sorted(summary.items(),
                                         key=lambda kv: (str(kv[0][0]), kv[0][1]))
    ]
    root, ext = os.path.splitext(out_path)
    summary_path = root + "_summary" + (ext or ".csv")
    with open(summary_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["variable", "value", "scheme", "n",
                                           "scr_mean", "scr_std"])
        w.writeheader()
        w.writerows(summary_rows)
    return {"rows": rows, "summary": summary_rows, "csv": out_path,
            "summary_csv": summary_path}


# ---------------------------------------------------------------------------
# solution validator

FEAS_TOL = 1e-9


def _offload_apv(sol: Solution, k: int) -> np.ndarray:
    if sol.scheme == "dynamic":
        return sol.apvs[1 + k]
    if sol.scheme == "semi_dynamic":
        return sol.apvs[1]
    return sol.apvs[0]


def validate_solution(scenario: Scenario, sol: Solution,
                      tol: float = FEAS_TOL) -> list:
    """Re-derive every constraint of a returned solution from raw inputs.

    Returns a list of (name, ok, measured-margin) tuples; a negative
    margin beyond ``tol`` marks a violation.
    """
    p = scenario.params
    alloc = sol.allocation
    checks = []

    total = alloc.total_time()
    checks.append(("time_budget", total <= p.t_block + tol, p.t_block - total))

    neg = min(alloc.tau0, alloc.dtau, float(alloc.tau.min()),
              float(alloc.e.min()), float(alloc.p.min()), float(alloc.f.min()))
    checks.append(("nonnegative", neg >= -tol, neg))

    h0 = np.stack([channel_response(sol.apvs[0], ch, p.lambda_m)
                   for ch in scenario.wd_channels])
    xi = np.asarray([harvested_power(received_rf_power(h0[k], sol.q), p.eh)
                     for k in range(p.k_wds)])
    used = local_energy(alloc.f, p.kappa, p.t_block) + alloc.e
    causality = float(np.min(alloc.tau0 * xi - used))
    checks.append(("energy_causality", causality >= -tol, causality))

    ep_gap = float(np.max(np.abs(alloc.e - alloc.p * alloc.tau)))
    checks.append(("offload_energy_consistency", ep_gap <= tol, ep_gap))

    gains = np.zeros(p.k_wds)
    combiner_ok = True
    for k in range(p.k_wds):
        w = sol.combiners[k]
        active = alloc.tau[k] > 0 and alloc.e[k] > 0
        if np.any(w != 0):
            hk = channel_response(_offload_apv(sol, k), scenario.wd_channels[k],
                                  p.lambda_m)
            gains[k] = combining_gain(w, hk, p.noise)
        elif active:
            combiner_ok = False
    checks.append(("combiners_present", combiner_ok, 0.0))

    ro = offload_rate(alloc.tau, alloc.e, gains, p.bandwidth, p.t_block)
    ok_edge, slack = edge_feasible(alloc, ro, p, tol=tol)
    checks.append(("edge_capability", ok_edge, float(np.min(slack))))

    tr_gap = p.p_max - float(np.real(np.trace(sol.q)))
    checks.append(("beam_trace_budget", tr_gap >= -tol, tr_gap))
    herm = float(np.max(np.abs(sol.q - sol.q.conj().T)))
    checks.append(("beam_hermitian", herm <= 1e-9, herm))
    mineig = float(np.linalg.eigvalsh(0.5 * (sol.q + sol.q.conj().T)).min())
    checks.append(("beam_psd", mineig >= -1e-9, mineig))

    half = p.region_a / 2.0
    region_ok = all(np.all(np.abs(a) <= half + 1e-12) for a in sol.apvs)
    checks.append(("region", region_ok, 0.0))
    dist_ok = all(min_distance_feasible(a, p.min_dist - tol) for a in sol.apvs)
    checks.append(("min_distance", dist_ok, 0.0))

    mono = float(np.min(np.diff(sol.convergence_trace))) \
        if sol.convergence_trace.size > 1 else 0.0
    checks.append(("trace_monotone", mono >= 0.0, mono))

    rl = alloc.f / p.phi
    scr_re = float(np.sum(rl) + np.sum(ro))
    gap = abs(scr_re - sol.scr) / max(1.0, abs(sol.scr))
    checks.append(("scr_consistent", gap <= 1e-6, gap))
    return checks


# ---------------------------------------------------------------------------
# oracle battery


def _check(name, ok, measured, details=""):
    return {"name": name, "passed": bool(ok), "measured": float(measured),
            "details": details}


def _battery_eh():
    eh = eh_constants(0.024, 150.0, 0.014)
    out = [
        _check("eh_zero_input", abs(harvested_power(0.0, eh)) <= 1e-15,
               abs(harvested_power(0.0, eh))),
        _check("eh_midpoint",
               abs(harvested_power(eh.b, eh) - (eh.x_const / 2 - eh.y_const)) <= 1e-12,
               abs(harvested_power(eh.b, eh) - (eh.x_const / 2 - eh.y_const))),
        _check("eh_saturation", abs(harvested_power(1e6 * eh.b, eh) - eh.m_sat) <= 1e-9,
               abs(harvested_power(1e6 * eh.b, eh) - eh.m_sat)),
    ]
    grid = np.linspace(0.0, 10 * eh.b, 1000)
    vals = harvested_power(grid, eh)
    out.append(_check("eh_monotone", bool(np.all(np.diff(vals) > 0)),
                      float(np.min(np.diff(vals)))))
    return out


def _battery_projection():
    q1 = project_psd_trace(np.diag([2.0, -1.0]).astype(complex), 1.0)
    ok1 = np.allclose(q1, np.diag([1.0, 0.0]), atol=1e-12)
    q2in = np.diag([0.3, 0.2]).astype(complex)
    q2 = project_psd_trace(q2in, 1.0)
    ok2 = np.array_equal(q2, q2in)
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    qr = project_psd_trace(a @ a.conj().T, 2.0)
    beams = recover_beams(qr)
    rec = sum(lam * np.outer(u, u.conj()) for u, lam in beams)
    err = float(np.max(np.abs(rec - qr)))
    return [
        _check("psd_projection_kkt", ok1, float(np.max(np.abs(q1 - np.diag([1.0, 0.0]))))),
        _check("psd_projection_identity", ok2, 0.0),
        _check("beam_recovery_roundtrip", err <= 1e-8, err),
    ]


def _battery_mrc():
    rng = np.random.default_rng(11)
    noise = 1e-11
    worst = np.inf
    for _ in range(100):
        h = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        w0 = mrc_combiner(h, 1e-3, noise)
        g0 = combining_gain(w0, h, noise)
        ws = rng.standard_normal((1000, 8)) + 1j * rng.standard_normal((1000, 8))
        gs = np.abs(ws.conj() @ h) ** 2 / (np.sum(np.abs(ws) ** 2, axis=1) * noise)
        worst = min(worst, g0 - float(gs.max()))
    return [_check("mrc_adversarial", worst >= -1e-9 * abs(worst + 1), worst)]


def _alloc_grid_oracle_k1(params, xi1, gain1, n=200):
    """Independent brute force for one device: 2-D grid over (tau0, e)."""
    t = params.t_block
    best = -np.inf
    cl = 1.0 / (params.phi[0] * np.cbrt(params.kappa * t))
    for tau0 in np.linspace(0.0, t, n):
        tau1 = t - tau0
        es = np.linspace(0.0, tau0 * xi1, n)
        rl = cl * np.cbrt(np.maximum(tau0 * xi1 - es, 0.0))
        if tau1 > 0:
            ro = (params.bandwidth * tau1 / t) * np.log1p(gain1 * es / tau1) / np.log(2.0)
        else:
            ro = np.zeros_like(es)
        best = max(best, float(np.max(rl + ro)))
    return best


def _battery_alloc():
    params = default_params(k_wds=1, m_antennas=2, f_edge=1e12, phi=1000.0)
    out = []
    for xi1, gain1, tag in ((1e-3, 1e7, "high_gain"), (5e-4, 2e5, "mid_gain")):
        oracle = _alloc_grid_oracle_k1(params, xi1, gain1)
        tes = solve_time_energy(params, np.array([xi1]), np.array([gain1]))
        gap = abs(tes.objective - oracle) / oracle
        out.append(_check(f"alloc_vs_grid_k1_{tag}", gap <= 1e-3, gap))
    return out


def _battery_sca():
    params = default_params(k_wds=1, m_antennas=4, f_edge=1e12)
    rng = np.random.default_rng(3)
    h = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) * 3e-3
    beta = np.array([0.5])
    tau0, tau, dtau = 0.5, np.array([0.4]), 0.1
    gains = np.array([1e6])
    st = sca_beamforming(params, h[None, :], beta, tau0, tau, dtau, gains)
    p_star = params.p_max * float(np.real(np.vdot(h, h)))
    xi_star = harvested_power(p_star, params.eh)
    cl = 1.0 / (params.phi[0] * np.cbrt(params.kappa * params.t_block))
    rl = cl * np.cbrt((1 - beta[0]) * tau0 * xi_star)
    ro = (params.bandwidth * tau[0] / params.t_block) * np.log1p(
        beta[0] * tau0 * xi_star * gains[0] / tau[0]) / np.log(2.0)
    target = float(rl + ro)
    gap = abs(st.trace[-1] - target) / target
    return [_check("sca_rank_one", gap <= 1e-4, gap)]


def _battery_units():
    vals = [40.0, -80.0, 0.0, 17.5]
    worst = max(abs(watts_to_dbm(dbm_to_watts(v)) - v) for v in vals)
    return [_check("dbm_roundtrip", worst <= 1e-9, worst)]


def _battery_exhaustive():
    params = default_params(m_antennas=2, k_wds=2, l_paths=4)
    out = []
    for scheme in ("dynamic", "semi_dynamic", "static"):
        gaps = []
        excess = 0.0
        for seed in (0, 1):
            scenario = build_scenario(params, seed)
            cfg = SchemeConfig(positioning=scheme, tau0_levels=50,
                               position_grid=ao.grid_cell_centers(params.region_a),
                               max_outer_iters=12)
            sol = run_scheme(scenario, cfg)
            ex = ao.solve_exhaustive_small(scenario, cfg)
            gaps.append((ex.scr - sol.scr) / ex.scr)
            excess = max(excess, (sol.scr - ex.scr) / ex.scr)
        mean_gap = float(np.mean(gaps))
        out.append(_check(f"exhaustive_gap_{scheme}",
                          mean_gap <= 0.15 and excess <= 1e-3, mean_gap,
                          details=f"max_excess={excess:.2e}"))
    return out


def validate(out_path: str | None = None) -> tuple[bool, list]:
    """Run the oracle battery; returns (all_passed, check list)."""
    checks = []
    checks += _battery_eh()
    checks += _battery_projection()
    checks += _battery_mrc()
    checks += _battery_alloc()
    checks += _battery_sca()
    checks += _battery_units()
    checks += _battery_exhaustive()
    ok = all(c["passed"] for c in checks)
    if out_path:
        with open(out_path, "w") as fh:
            json.dump({"passed": ok, "checks": checks}, fh, indent=2)
    return ok, checks


# ---------------------------------------------------------------------------
# CLI


def _load_params(args) -> SystemParams:
    overrides = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            raw = json.load(fh)
        overrides.update(raw)
    for item in getattr(args, "set", None) or []:
        key, _, val = item.partition("=")
        if not val:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        try:
            overrides[key] = json.loads(val)
        except json.JSONDecodeError:
            overrides[key] = val
    if "p_max_dbm" in overrides:
        overrides["p_max"] = dbm_to_watts(float(overrides.pop("p_max_dbm")))
    if "noise_dbm" in overrides:
        overrides["noise"] = dbm_to_watts(float(overrides.pop("noise_dbm")))
    if "eh" in overrides and isinstance(overrides["eh"], dict):
        eh = overrides.pop("eh")
        overrides["eh"] = eh_constants(eh["m_sat"], eh["a"], eh["b"])
    return default_params(**overrides)


def _scheme_config(args) -> SchemeConfig:
    return SchemeConfig(
        positioning=args.scheme,
        pso_mode=args.pso_mode,
        offload_mode=args.offload_mode,
        max_outer_iters=args.max_outer,
        outer_tol=args.outer_tol,
    )


def _solution_dict(sol: Solution) -> dict:
    def carr(a):
        a = np.asarray(a)
        return {"re": a.real.tolist(), "im": a.imag.tolist()}

    al = sol.allocation
    return {
        "scr_bps": sol.scr,
        "scheme": sol.scheme,
        "offload_mode": sol.offload_mode,
        "outer_iters": sol.outer_iters,
        "allocation": {
            "tau0": al.tau0, "tau": al.tau.tolist(), "dtau": al.dtau,
            "e": al.e.tolist(), "p": al.p.tolist(), "f": al.f.tolist(),
            "beta": al.beta.tolist(),
        },
        "apvs": [a.tolist() for a in sol.apvs],
        "q": carr(sol.q),
        "combiners": carr(sol.combiners),
        "convergence_trace": sol.convergence_trace.tolist(),
    }


def _add_run_args(sp):
    sp.add_argument("--scheme", default="dynamic", choices=ao.SCHEMES)
    sp.add_argument("--pso-mode", default="vls", choices=("vls", "standard"))
    sp.add_argument("--offload-mode", default="partial",
                    choices=("partial", "offloading_only"))
    sp.add_argument("--seed", type=int,
                    default=int(os.environ.get(SEED_ENV_VAR, "0")))
    sp.add_argument("--config", help="JSON file with parameter overrides")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override one parameter (repeatable)")
    sp.add_argument("--max-outer", type=int, default=30)
    sp.add_argument("--outer-tol", type=float, default=1e-4)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mamec",
        description="Movable-antenna wireless-powered MEC optimizer")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="solve one scenario with one scheme")
    _add_run_args(sp)
    sp.add_argument("--json-out", help="write the full solution as JSON")

    sp = sub.add_parser("sweep", help="run a sweep specification to CSV")
    sp.add_argument("--spec", required=True, help="JSON sweep specification")
    sp.add_argument("--out", required=True, help="output CSV path")

    sp = sub.add_parser("validate", help="run the oracle validation battery")
    sp.add_argument("--out", help="write a JSON report")

    sp = sub.add_parser("trace", help="emit a convergence trace as CSV")
    _add_run_args(sp)
    sp.add_argument("--kind", default="ao", choices=("ao", "pso"))
    sp.add_argument("--out", required=True)

    args = parser.parse_args(argv)

    if args.command == "run":
        params = _load_params(args)
        scenario = build_scenario(params, args.seed)
        sol = run_scheme(scenario, _scheme_config(args))
        al = sol.allocation
        print(f"scheme={sol.scheme} mode={sol.offload_mode} seed={args.seed}")
        print(f"scr_bps={sol.scr:.6g} outer_iters={sol.outer_iters}")
        print(f"tau0={al.tau0:.6g} dtau={al.dtau:.6g} "
              f"sum_tau={float(al.tau.sum()):.6g}")
        if args.json_out:
            with open(args.json_out, "w") as fh:
                json.dump(_solution_dict(sol), fh, indent=2)
            print(f"solution written to {args.json_out}")
        return 0

    if args.command == "sweep":
        with open(args.spec) as fh:
            raw = json.load(fh)
        schemes = [SchemeConfig(**s) for s in raw.get("schemes", [])]
        params = default_params(**raw.get("params", {}))
        spec = SweepSpec(variable=raw["variable"], values=raw["values"],
                         seeds=raw["seeds"], schemes=schemes, params=params)
        report = run_sweep(spec, args.out)
        print(f"wrote {len(report['rows'])} rows to {report['csv']}")
        print(f"summary in {report['summary_csv']}")
        return 0

    if args.command == "validate":
        ok, checks = validate(args.out)
        for c in checks:
            status = "PASS" if c["passed"] else "FAIL"
            print(f"{status} {c['name']} measured={c['measured']:.3e} {c['details']}")
        print("validation " + ("passed" if ok else "FAILED"))
        return 0 if ok else 1

    if args.command == "trace":
        params = _load_params(args)
        scenario = build_scenario(params, args.seed)
        if args.kind == "ao":
            sol = run_scheme(scenario, _scheme_config(args))
            with open(args.out, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["iter", "scr_bps"])
                for i, v in enumerate(sol.convergence_trace):
                    w.writerow([i + 1, repr(float(v))])
        else:
            best, mean = pso_fitness_trace(scenario, args.pso_mode, args.seed)
            with open(args.out, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["iter", "best_fitness", "mean_fitness"])
                for i, (b, m) in enumerate(zip(best, mean)):
                    w.writerow([i, repr(float(b)), repr(float(m))])
        print(f"trace written to {args.out}")
        return 0

    return 2


def pso_fitness_trace(scenario: Scenario, pso_mode: str, seed: int):
    """Swarm-search trace on the charging-layout fitness of a scenario.

    Builds a fixed optimization context (isotropic beams, a first-pass
    allocation at the uniform layout) and runs one swarm search on it.
    """
    from .ao import _Ctx, _initial_state, _initial_layout, _alloc_block, \
        _make_wpt_fitness
    from .pso import run as pso_run

    cfg = SchemeConfig(positioning="static", pso_mode=pso_mode)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(77,)))
    ctx = _Ctx(scenario, cfg, rng)
    apv = _initial_layout(ctx)
    k = scenario.params.k_wds
    st = _initial_state(ctx, apv, np.broadcast_to(apv, (k,) + apv.shape).copy())
    st = _alloc_block(ctx, st, first=True)
    fit = _make_wpt_fitness(ctx, st)
    res = pso_run(fit, ctx.pso_cfg, scenario.params.m_antennas,
                  scenario.params.region_a, rng, seed_position=apv)
    return res.trace, res.trace_mean


if __name__ == "__main__":
    sys.exit(main())
