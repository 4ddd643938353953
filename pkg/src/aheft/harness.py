"""Experiment registry (AT1-AT16), execution and JSON persistence.

Each experiment is split into independent work units (one per seed and sweep
point).  Units run sequentially or in a process pool; their records are
sorted by (seed, key) before aggregation, so results never depend on
completion order.  Aggregates and plot series are a pure function of the
config and the per-seed records.
"""
from __future__ import annotations

import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from functools import lru_cache, partial
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .ansatz import AnsatzKind, AnsatzSpec, init_params, param_count, sample_params
from .errors import ResourceError, UsageError
from .gradients import energies, gradient_exact, gradient_sampled, statevector, statevectors
from .hamiltonians import build_hamiltonian, ground_state, op_norm_bound, reference_gap
from .metrics import (
    effective_dimension,
    fidelity_to_ground,
    gv_report,
    half_chain_entropy,
    pairwise_purity,
)
from .quantum import MAX_MIXED_QUBITS, PureState
from .seeding import stream
from .stats import welch_test
from .training import (
    ScheduleConfig,
    run_adaptive,
    run_hea,
    run_static,
    sigma_crit,
    sigma_zero,
    theory_constants,
)

SCHEMA_VERSION = 1
DESK_MAX_N = 8
DESK_MAX_SEEDS = 20
EXPERIMENT_IDS = tuple(f"AT{i}" for i in range(1, 17))
METHODS = ("adaptive", "static", "hea")


@dataclass
class ExperimentConfig:
    experiment_id: str
    hamiltonian: str = "tfim"
    n_list: list = field(default_factory=list)
    l_list: list = field(default_factory=list)
    n_seeds: int = 1
    master_seed: int = 0
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    sweep: dict = field(default_factory=dict)
    scale: str = "desk"
    noise_p: float = 0.0
    workers: int = 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = self.schedule.to_dict()
        d.pop("workers")
        return d

    def validate(self) -> None:
        if self.experiment_id not in EXPERIMENT_IDS:
            raise UsageError(f"unknown experiment {self.experiment_id!r}")
        if self.scale not in ("desk", "paper"):
            raise UsageError(f"unknown scale {self.scale!r}")
        if self.n_seeds < 1:
            raise UsageError("n_seeds must be >= 1")
        if self.scale == "desk":
            ns = list(self.n_list) + list(self.sweep.get("gv_n", []))
            if ns and max(ns) > DESK_MAX_N:
                raise ResourceError(f"desk scale caps N <= {DESK_MAX_N} (got {max(ns)})")
            if self.n_seeds > DESK_MAX_SEEDS:
                raise ResourceError(f"desk scale caps n_seeds <= {DESK_MAX_SEEDS} (got {self.n_seeds})")
        if self.noise_p > 0 or any(p > 0 for p in self.sweep.get("p", [])):
            if self.n_list and max(self.n_list) > MAX_MIXED_QUBITS:
                raise ResourceError(
                    f"noisy runs are capped at N <= {MAX_MIXED_QUBITS} (density-matrix memory)"
                )


# ---------------------------------------------------------------------------
# defaults per experiment and scale

_EVEN_14 = [2, 4, 6, 8, 10, 12, 14]

DEFAULTS = {
    "AT1": {
        "desk": dict(n_list=[2, 4, 6, 8], l_list=[2, 4, 8], n_seeds=20),
        "paper": dict(n_list=_EVEN_14, l_list=_EVEN_14, n_seeds=50),
    },
    "AT2": {
        "desk": dict(n_list=[8], l_list=[8], n_seeds=20,
                     sweep={"sigma": ["sigma0", "sigma_crit/2", "sigma_crit", 0.1, 0.3, 1.0]}),
        "paper": dict(n_list=[14], l_list=[14], n_seeds=50,
                      sweep={"sigma": ["sigma0", 0.003, 0.01, "sigma_crit/2", 0.03, "sigma_crit",
                                       0.05, 0.1, 0.2, 0.3, 0.5, 1.0]}),
    },
    "AT3": {
        "desk": dict(n_list=[8], l_list=[8], n_seeds=3),
        "paper": dict(n_list=[8], l_list=[8], n_seeds=10),
    },
    "AT4": {
        "desk": dict(n_list=[4, 8], l_list=[4, 8], n_seeds=1),
        "paper": dict(n_list=[4, 8, 12], l_list=[4, 8, 12], n_seeds=1),
    },
    "AT5": {
        "desk": dict(n_list=[2, 4, 6, 8], l_list=[2], n_seeds=1),
        "paper": dict(n_list=_EVEN_14, l_list=[2], n_seeds=1),
    },
    "AT6": {
        "desk": dict(n_list=[6], l_list=[2, 4, 6], n_seeds=5),
        "paper": dict(n_list=[6], l_list=_EVEN_14, n_seeds=5),
    },
    "AT7": {
        "desk": dict(n_list=[2, 4, 6, 8], l_list=[1], n_seeds=1,
                     sweep={"hamiltonians": ["tfim", "xxz"]}),
        "paper": dict(n_list=_EVEN_14, l_list=[1], n_seeds=1,
                      sweep={"hamiltonians": ["tfim", "xxz"]}),
    },
    "AT8": {
        "desk": dict(n_list=[8], l_list=[8], n_seeds=2, sweep={"deff_every": 5, "eps_thr": 1e-6}),
        "paper": dict(n_list=[8], l_list=[8], n_seeds=5, sweep={"deff_every": 5, "eps_thr": 1e-6}),
    },
    "AT9": {
        "desk": dict(n_list=[8], l_list=[2, 4, 6, 8], n_seeds=15),
        "paper": dict(n_list=[8], l_list=_EVEN_14, n_seeds=15),
    },
    "AT10": {
        "desk": dict(n_list=[6], l_list=[2, 4, 6], n_seeds=1, sweep={"n_samples": 200}),
        "paper": dict(n_list=[6], l_list=[2, 4, 6, 8, 10], n_seeds=1, sweep={"n_samples": 500}),
    },
    "AT11": {
        "desk": dict(n_list=[4], l_list=[4], n_seeds=3, sweep={"p": [0.0, 1e-4, 1e-3, 1e-2]}),
        "paper": dict(n_list=[8], l_list=[8], n_seeds=3, sweep={"p": [0.0, 1e-4, 1e-3, 1e-2]}),
    },
    "AT12": {
        "desk": dict(n_list=[4], l_list=[2], n_seeds=20, sweep={"shots": [100, 1000, 10000]}),
        "paper": dict(n_list=[8], l_list=[4], n_seeds=50, sweep={"shots": [100, 1000, 10000, 100000]}),
    },
    "AT13": {
        "desk": dict(n_list=[4], l_list=[4], n_seeds=5, sweep={"delta_switch": [1e-4, 1e-3, 5e-3]}),
        "paper": dict(n_list=[8], l_list=[8], n_seeds=10,
                      sweep={"delta_switch": [1e-4, 5e-4, 1e-3, 5e-3, 1e-2]}),
    },
    "AT14": {
        "desk": dict(n_list=[4], l_list=[4], n_seeds=5, sweep={"lambda": [0.01, 0.02, 0.1]}),
        "paper": dict(n_list=[8], l_list=[8], n_seeds=10,
                      sweep={"lambda": [0.005, 0.01, 0.02, 0.05, 0.1]}),
    },
    "AT15": {
        "desk": dict(n_list=[4], l_list=[4], n_seeds=20),
        "paper": dict(n_list=[4, 8, 12], l_list=[4, 8, 12], n_seeds=50),
    },
    "AT16": {
        "desk": dict(hamiltonian="xxz", n_list=[4], l_list=[4], n_seeds=5,
                     sweep={"gv_n": [2, 4, 6], "gv_l": [2, 4]}),
        "paper": dict(hamiltonian="xxz", n_list=[4, 8, 12], l_list=[4, 8, 12], n_seeds=10,
                      sweep={"gv_n": _EVEN_14, "gv_l": _EVEN_14}),
    },
}


def default_config(experiment_id: str, scale: str = "desk", **overrides) -> ExperimentConfig:
    eid = experiment_id.upper()
    if eid not in DEFAULTS:
        raise UsageError(f"unknown experiment {experiment_id!r}; choose from AT1..AT16")
    if scale not in ("desk", "paper"):
        raise UsageError(f"unknown scale {scale!r}")
    base = json.loads(json.dumps(DEFAULTS[eid][scale]))
    base.update(overrides)
    return ExperimentConfig(experiment_id=eid, scale=scale, **base)


# ---------------------------------------------------------------------------
# shared helpers


def _exp_no(cfg: ExperimentConfig) -> int:
    return int(cfg.experiment_id[2:])


def _rng(cfg: ExperimentConfig, seed: int, *key: int) -> np.random.Generator:
    return stream(cfg.master_seed, _exp_no(cfg), seed, *key)


def _heft(n: int, l: int) -> AnsatzSpec:
    return AnsatzSpec(AnsatzKind.HEFT_SPIN, n, l)


@lru_cache(maxsize=64)
def _hamiltonian(name: str, n: int):
    return build_hamiltonian(name, n)


@lru_cache(maxsize=64)
def _ground(name: str, n: int):
    return ground_state(_hamiltonian(name, n))


def _resolve_sigma(label, n: int, l: int, sched: ScheduleConfig) -> float:
    if isinstance(label, (int, float)):
        return float(label)
    table = {
        "sigma0": sigma_zero(n, l, sched.kappa),
        "sigma_crit": sigma_crit(n, l, sched.c2),
        "sigma_crit/2": 0.5 * sigma_crit(n, l, sched.c2),
    }
    if label not in table:
        raise UsageError(f"unknown sigma label {label!r}")
    return table[label]


def _train(method: str, cfg: ExperimentConfig, n: int, l: int, rng, sched=None, noise_p=None,
           **kw):
    h = _hamiltonian(cfg.hamiltonian, n)
    sched = cfg.schedule if sched is None else sched
    p = cfg.noise_p if noise_p is None else noise_p
    if method == "adaptive":
        return run_adaptive(_heft(n, l), h, sched, rng, noise_p=p, **kw)
    if method == "static":
        return run_static(_heft(n, l), h, sched, rng, noise_p=p, **kw)
    if method == "hea":
        return run_hea(AnsatzSpec(AnsatzKind.HEA, n, l), h, sched, rng, noise_p=p, **kw)
    raise UsageError(f"unknown method {method!r}")


def _traj_finals(rec) -> dict:
    return {
        "final_energy": float(rec.final_energy),
        "final_grad_norm2": float(rec.grad_norm2[-1]),
        "t_switch": rec.t_switch,
        "forced_switch": rec.forced_switch,
        "failed": rec.failed,
    }


def _mean_sd(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return float(np.mean(v)), sd


def _mean_se(values) -> tuple[float, float]:
    m, sd = _mean_sd(values)
    return m, sd / math.sqrt(len(values)) if len(values) > 1 else 0.0


def _select(records, **match):
    return [r for r in records if all(r["key"].get(k) == v for k, v in match.items())]


def _series(name, x, y, yerr=None) -> dict:
    return {
        "name": name,
        "x": [float(v) for v in x],
        "y": [float(v) for v in y],
        "yerr": None if yerr is None else [float(v) for v in yerr],
    }


def _log_slope(x, y) -> float:
    lx, ly = np.log10(np.asarray(x, float)), np.log10(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


# ---------------------------------------------------------------------------
# gradient-variance experiments (AT1, AT2, AT16 part one)

_PHASE_CODE = {"I": 1, "II": 2}


def _gv_units(cfg, ns, ls):
    return [
        {"seed": s, "key": {"part": "gv", "N": n, "L": l, "phase": ph}}
        for n in ns for l in ls for ph in ("I", "II") for s in range(cfg.n_seeds)
    ]


def _gv_unit(cfg, unit):
    k = unit["key"]
    n, l = k["N"], k["L"]
    label = "sigma0" if k["phase"] == "I" else "sigma_crit"
    sig = _resolve_sigma(label, n, l, cfg.schedule)
    spec = _heft(n, l)
    theta = init_params(spec, sig, _rng(cfg, unit["seed"], n, l, _PHASE_CODE[k["phase"]]))
    g = gradient_exact(spec, theta, _hamiltonian(cfg.hamiltonian, n))
    return {"finals": {"sigma": sig, "grad_sq_norm": float(g @ g), "gradient": g.tolist()}}


def _gv_aggregate(cfg, records, ns, ls):
    agg, series = {}, []
    for ph in ("I", "II"):
        for l in ls:
            ys, es = [], []
            for n in ns:
                grads = [r["finals"]["gradient"] for r in _select(records, part="gv", N=n, L=l, phase=ph)]
                rep = gv_report(grads).to_dict() if len(grads) >= 2 else None
                agg[f"gv_N{n}_L{l}_phase{ph}"] = rep
                ys.append(rep["mean_sq_component"] if rep else float("nan"))
                es.append(rep["std_err_component"] if rep else 0.0)
            if all(math.isfinite(y) for y in ys):
                series.append(_series(f"phase{ph}_L{l}", ns, ys, es))
    return agg, series


def _at1_units(cfg):
    return _gv_units(cfg, cfg.n_list, cfg.l_list)


def _at1_agg(cfg, records):
    agg, series = _gv_aggregate(cfg, records, cfg.n_list, cfg.l_list)
    vals = [v["mean_sq_component"] for v in agg.values() if v]
    agg["min_mean_sq_component"] = min(vals) if vals else None
    return agg, series


def _at2_units(cfg):
    n, l = cfg.n_list[0], cfg.l_list[0]
    sig = sorted({_resolve_sigma(x, n, l, cfg.schedule) for x in cfg.sweep["sigma"]})
    return [{"seed": s, "key": {"N": n, "L": l, "sigma": v}} for v in sig for s in range(cfg.n_seeds)]


def _at2_unit(cfg, unit):
    k = unit["key"]
    spec = _heft(k["N"], k["L"])
    sig_idx = sorted({_resolve_sigma(x, k["N"], k["L"], cfg.schedule) for x in cfg.sweep["sigma"]}).index(k["sigma"])
    theta = init_params(spec, k["sigma"], _rng(cfg, unit["seed"], sig_idx))
    g = gradient_exact(spec, theta, _hamiltonian(cfg.hamiltonian, k["N"]))
    return {"finals": {"grad_sq_norm": float(g @ g), "gradient": g.tolist()}}


def _at2_agg(cfg, records):
    n, l = cfg.n_list[0], cfg.l_list[0]
    sigmas = sorted({r["key"]["sigma"] for r in records})
    reps = {}
    for s in sigmas:
        reps[s] = gv_report([r["finals"]["gradient"] for r in _select(records, sigma=s)]).to_dict()
    s0 = _resolve_sigma("sigma0", n, l, cfg.schedule)
    sc = _resolve_sigma("sigma_crit", n, l, cfg.schedule)
    flat = [reps[s]["mean_sq_norm"] for s in sigmas if s <= sc * (1 + 1e-12)]
    agg = {
        "sigma0": s0,
        "sigma_crit": sc,
        "by_sigma": [{"sigma": s, **reps[s]} for s in sigmas],
        "subcritical_max_over_min": max(flat) / min(flat) if flat and min(flat) > 0 else None,
        "peak_sigma": max(sigmas, key=lambda s: reps[s]["mean_sq_norm"]),
    }
    series = [_series("mean_sq_component_vs_sigma", sigmas,
                      [reps[s]["mean_sq_component"] for s in sigmas],
                      [reps[s]["std_err_component"] for s in sigmas])]
    return agg, series


# ---------------------------------------------------------------------------
# training experiments


def _training_unit(cfg, unit, **kw):
    k = unit["key"]
    n, l = k["N"], k["L"]
    sched = cfg.schedule
    if "delta_switch" in k:
        sched = replace(sched, delta_switch=k["delta_switch"])
    if "lambda" in k:
        sched = replace(sched, lam=k["lambda"])
    rng = _rng(cfg, unit["seed"], n, l)
    rec = _train(k["method"], cfg, n, l, rng, sched=sched, noise_p=k.get("p"), **kw)
    out = {"finals": _traj_finals(rec), "trajectory": rec.to_dict(include_theta=False)}
    return out, rec


def _run_training(cfg, unit):
    return _training_unit(cfg, unit)[0]


def _trajectory_means(records, field_name="energy", fn=None):
    arrs = [np.asarray(r["trajectory"][field_name], dtype=float) for r in records]
    if fn is not None:
        arrs = [fn(a) for a in arrs]
    m = np.mean(arrs, axis=0)
    sd = np.std(arrs, axis=0, ddof=1) if len(arrs) > 1 else np.zeros_like(m)
    return m, sd


def _at3_units(cfg):
    return [{"seed": s, "key": {"N": cfg.n_list[0], "L": cfg.l_list[0], "method": "adaptive"}}
            for s in range(cfg.n_seeds)]


def _at3_agg(cfg, records):
    m, sd = _trajectory_means(records, "grad_norm2", np.sqrt)
    ts = [r["finals"]["t_switch"] for r in records]
    t_sw = [t for t in ts if t is not None]
    agg = {
        "mean_t_switch": float(np.mean(t_sw)) if t_sw else None,
        "forced_switches": int(sum(r["finals"]["forced_switch"] for r in records)),
        "initial_grad_norm": float(m[0]),
        "mean_final_energy": _mean_sd([r["finals"]["final_energy"] for r in records])[0],
    }
    if t_sw:
        ts0 = int(min(t_sw))
        agg["phase2_min_grad_norm"] = float(np.min(m[ts0:]))
        agg["phase2_max_grad_norm"] = float(np.max(m[ts0:]))
        agg["phase1_late_grad_norm"] = float(np.min(m[max(0, ts0 - 10): ts0 + 1]))
    steps = np.arange(m.size)
    return agg, [_series("grad_norm", steps, m, sd)]


def _methods_units(cfg, pairs, methods=METHODS):
    return [
        {"seed": s, "key": {"N": n, "L": l, "method": meth}}
        for n, l in pairs for meth in methods for s in range(cfg.n_seeds)
    ]


def _final_table(records, pairs, methods):
    table = {}
    for n, l in pairs:
        for meth in methods:
            finals = [r["finals"]["final_energy"] for r in _select(records, N=n, L=l, method=meth)]
            if finals:
                m, sd = _mean_sd(finals)
                table[f"N{n}_L{l}_{meth}"] = {"mean": m, "sd": sd, "n": len(finals),
                                              "min": min(finals), "max": max(finals)}
    return table


def _at4_units(cfg):
    return _methods_units(cfg, [(n, l) for n in cfg.n_list for l in cfg.l_list])


def _at4_agg(cfg, records):
    pairs = [(n, l) for n in cfg.n_list for l in cfg.l_list]
    agg = {"final_energy": _final_table(records, pairs, METHODS),
           "ground_energy": {f"N{n}": _ground(cfg.hamiltonian, n).energy for n in cfg.n_list}}
    series = []
    for n, l in pairs:
        for meth in METHODS:
            sel = _select(records, N=n, L=l, method=meth)
            m, sd = _trajectory_means(sel)
            series.append(_series(f"N{n}_L{l}_{meth}", np.arange(m.size), m, sd))
    return agg, series


def _at5_units(cfg):
    return _methods_units(cfg, [(n, cfg.l_list[0]) for n in cfg.n_list])


def _at5_agg(cfg, records):
    l = cfg.l_list[0]
    pairs = [(n, l) for n in cfg.n_list]
    table = _final_table(records, pairs, METHODS)
    series = []
    for meth in METHODS:
        ys = [table[f"N{n}_L{l}_{meth}"] for n in cfg.n_list]
        series.append(_series(meth, cfg.n_list, [y["mean"] for y in ys], [y["sd"] for y in ys]))
    exact = [_ground(cfg.hamiltonian, n).energy for n in cfg.n_list]
    series.append(_series("exact", cfg.n_list, exact))
    gap = [table[f"N{n}_L{l}_static"]["mean"] - table[f"N{n}_L{l}_adaptive"]["mean"] for n in cfg.n_list]
    return {"final_energy": table, "exact": exact, "static_minus_adaptive": gap}, series


def _at6_units(cfg):
    return _methods_units(cfg, [(cfg.n_list[0], l) for l in cfg.l_list])


def _at6_unit(cfg, unit):
    out, rec = _training_unit(cfg, unit)
    k = unit["key"]
    spec = AnsatzSpec(AnsatzKind.HEA if k["method"] == "hea" else AnsatzKind.HEFT_SPIN, k["N"], k["L"])
    psi = statevector(spec, rec.final_theta)
    out["finals"]["fidelity"] = fidelity_to_ground(psi, _ground(cfg.hamiltonian, k["N"]))
    return out


def _at6_agg(cfg, records):
    n = cfg.n_list[0]
    agg = {"delta_ref": reference_gap(_hamiltonian(cfg.hamiltonian, n), _ground(cfg.hamiltonian, n)),
           "fidelity": {}}
    series = []
    for meth in METHODS:
        ms, sds = [], []
        for l in cfg.l_list:
            f = [r["finals"]["fidelity"] for r in _select(records, N=n, L=l, method=meth)]
            m, sd = _mean_sd(f)
            agg["fidelity"][f"L{l}_{meth}"] = {"mean": m, "sd": sd}
            ms.append(m)
            sds.append(sd)
        series.append(_series(meth, cfg.l_list, ms, sds))
    return agg, series


def _at7_units(cfg):
    hams = cfg.sweep.get("hamiltonians", [cfg.hamiltonian])
    return [{"seed": 0, "key": {"hamiltonian": h, "N": n}} for h in hams for n in cfg.n_list]


def _at7_unit(cfg, unit):
    k = unit["key"]
    gs = _ground(k["hamiltonian"], k["N"])
    return {"finals": {
        "delta_ref": reference_gap(_hamiltonian(k["hamiltonian"], k["N"]), gs),
        "ground_energy": gs.energy,
        "degeneracy": gs.degeneracy,
    }}


def _at7_agg(cfg, records):
    agg, series = {}, []
    for h in cfg.sweep.get("hamiltonians", [cfg.hamiltonian]):
        sel = sorted(_select(records, hamiltonian=h), key=lambda r: r["key"]["N"])
        ns = [r["key"]["N"] for r in sel]
        gaps = [r["finals"]["delta_ref"] for r in sel]
        agg[f"delta_ref_{h}"] = dict(zip([f"N{n}" for n in ns], gaps))
        series.append(_series(f"delta_ref_{h}", ns, gaps))
    return agg, series


def _at8_units(cfg):
    return _at3_units(cfg)


def _at8_unit(cfg, unit):
    return _training_unit(cfg, unit, deff_every=int(cfg.sweep.get("deff_every", 5)),
                          deff_thr=float(cfg.sweep.get("eps_thr", 1e-6)))[0]


def _at8_agg(cfg, records):
    full = 2 ** cfg.n_list[0]
    steps = [t for t, d in enumerate(records[0]["trajectory"]["d_eff"]) if d is not None]
    traces = np.array([[r["trajectory"]["d_eff"][t] for t in steps] for r in records], dtype=float)
    mean = traces.mean(axis=0)
    running = np.maximum.accumulate(mean)
    to_full, stays = [], []
    for r in records:
        ts = r["finals"]["t_switch"]
        d = r["trajectory"]["d_eff"]
        after = [t for t in steps if ts is not None and t >= ts]
        first = next((t for t in after if d[t] == full), None)
        to_full.append(None if first is None else first - ts)
        stays.append(first is not None and all(d[t] == full for t in after if t >= first))
    agg = {
        "full_dimension": full,
        "d_eff_t0": float(mean[0]),
        "d_eff_final": float(mean[-1]),
        "running_max_monotone": bool(np.all(np.diff(running) >= 0)),
        "mean_trace_monotone": bool(np.all(np.diff(mean) >= 0)),
        "first_full_step": next((int(t) for t, v in zip(steps, mean) if v == full), None),
        "max_steps_to_full_after_switch": None if None in to_full else max(to_full),
        "all_seeds_stay_full": all(stays),
    }
    return agg, [_series("d_eff_mean", steps, mean, traces.std(axis=0, ddof=1) if len(records) > 1 else None),
                 _series("d_eff_running_max", steps, running)]


_SAMPLERS = ("crit", "static", "hea")


def _sampler_params(cfg, sampler, n, l, k, rng):
    if sampler == "hea":
        return AnsatzSpec(AnsatzKind.HEA, n, l), sample_params(AnsatzSpec(AnsatzKind.HEA, n, l), "uniform", 0.0, k, rng)
    spec = _heft(n, l)
    sig = _resolve_sigma("sigma_crit" if sampler == "crit" else "sigma0", n, l, cfg.schedule)
    return spec, sample_params(spec, "gaussian", sig, k, rng)


def _at9_units(cfg):
    return [{"seed": s, "key": {"N": cfg.n_list[0], "L": l, "sampler": smp}}
            for l in cfg.l_list for smp in _SAMPLERS for s in range(cfg.n_seeds)]


def _at9_unit(cfg, unit):
    k = unit["key"]
    rng = _rng(cfg, unit["seed"], k["L"], _SAMPLERS.index(k["sampler"]))
    spec, th = _sampler_params(cfg, k["sampler"], k["N"], k["L"], 1, rng)
    psi = PureState(k["N"], statevectors(spec, th)[0])
    return {"finals": {"entropy_bits": half_chain_entropy(psi)}}


def _at9_agg(cfg, records):
    agg, series = {"log_base": 2, "cut": cfg.n_list[0] // 2}, []
    for smp in _SAMPLERS:
        ms, ses = [], []
        for l in cfg.l_list:
            m, se = _mean_se([r["finals"]["entropy_bits"] for r in _select(records, L=l, sampler=smp)])
            agg[f"L{l}_{smp}"] = {"mean": m, "se": se}
            ms.append(m)
            ses.append(se)
        series.append(_series(smp, cfg.l_list, ms, ses))
    return agg, series


def _at10_units(cfg):
    return [{"seed": 0, "key": {"N": cfg.n_list[0], "L": l, "sampler": smp}}
            for l in cfg.l_list for smp in _SAMPLERS]


def _at10_unit(cfg, unit):
    k = unit["key"]
    rng = _rng(cfg, unit["seed"], k["L"], _SAMPLERS.index(k["sampler"]))
    spec, th = _sampler_params(cfg, k["sampler"], k["N"], k["L"], int(cfg.sweep.get("n_samples", 500)), rng)
    return {"finals": {"purity": pairwise_purity(statevectors(spec, th))}}


def _at10_agg(cfg, records):
    n = cfg.n_list[0]
    agg = {"haar_quoted": 2.0 / (2**n + 1), "haar_ensemble_purity": 1.0 / 2**n}
    series = []
    for smp in _SAMPLERS:
        ys = [_select(records, L=l, sampler=smp)[0]["finals"]["purity"] for l in cfg.l_list]
        agg[smp] = dict(zip([f"L{l}" for l in cfg.l_list], ys))
        series.append(_series(smp, cfg.l_list, ys))
    return agg, series


def _at11_units(cfg):
    n, l = cfg.n_list[0], cfg.l_list[0]
    units = [{"seed": s, "key": {"N": n, "L": l, "method": "adaptive", "p": float(p)}}
             for p in cfg.sweep["p"] for s in range(cfg.n_seeds)]
    units.append({"seed": 0, "key": {"N": n, "L": l, "check": "dual_path"}})
    return units


def _at11_unit(cfg, unit):
    k = unit["key"]
    if k.get("check") == "dual_path":
        spec = _heft(k["N"], k["L"])
        th = init_params(spec, 1.0, _rng(cfg, 0, 99))
        h = _hamiltonian(cfg.hamiltonian, k["N"])
        e_sv = energies(spec, th, h)[0]
        e_dm = energies(spec, th, h, 0.0, force_mixed=True)[0]
        return {"finals": {"energy_statevector": float(e_sv), "energy_density": float(e_dm),
                           "abs_diff": float(abs(e_sv - e_dm))}}
    return _run_training(cfg, unit)


def _at11_agg(cfg, records):
    runs = [r for r in records if "method" in r["key"]]
    dual = [r for r in records if r["key"].get("check") == "dual_path"][0]["finals"]
    ps = sorted({r["key"]["p"] for r in runs})
    table = {}
    series = []
    for p in ps:
        sel = [r for r in runs if r["key"]["p"] == p]
        table[repr(p)] = dict(zip(("mean", "sd"), _mean_sd([r["finals"]["final_energy"] for r in sel])))
        m, sd = _trajectory_means(sel)
        series.append(_series(f"energy_p{p:g}", np.arange(m.size), m, sd))
    base = table[repr(0.0)]["mean"] if repr(0.0) in table else None
    if base:
        for p in ps:
            table[repr(p)]["relative_degradation"] = (table[repr(p)]["mean"] - base) / abs(base)
    return {"final_energy": table, "dual_path": dual}, series


def _at12_units(cfg):
    n, l = cfg.n_list[0], cfg.l_list[0]
    return [{"seed": s, "key": {"N": n, "L": l, "ansatz": a, "shots": int(m)}}
            for a in ("adaptive", "hea") for m in cfg.sweep["shots"] for s in range(cfg.n_seeds)]


def _at12_instance(cfg, ansatz, n, l):
    # one fixed circuit instance per ansatz: Phase-II scale for the adaptive one
    if ansatz == "hea":
        spec = AnsatzSpec(AnsatzKind.HEA, n, l)
        return spec, init_params(spec, 0.0, _rng(cfg, 0, 1, n, l))
    spec = _heft(n, l)
    return spec, init_params(spec, _resolve_sigma("sigma_crit", n, l, cfg.schedule), _rng(cfg, 0, 2, n, l))


def _at12_unit(cfg, unit):
    k = unit["key"]
    spec, theta = _at12_instance(cfg, k["ansatz"], k["N"], k["L"])
    h = _hamiltonian(cfg.hamiltonian, k["N"])
    exact = gradient_exact(spec, theta, h)
    est = gradient_sampled(spec, theta, h, k["shots"],
                           _rng(cfg, unit["seed"], 3, k["shots"], k["ansatz"] == "hea"))
    return {"finals": {"mse": float(np.mean((est - exact) ** 2))}}


def _at12_agg(cfg, records):
    agg, series = {}, []
    shots = sorted({r["key"]["shots"] for r in records})
    for a in ("adaptive", "hea"):
        ms, ses = [], []
        for m in shots:
            mean, se = _mean_se([r["finals"]["mse"] for r in _select(records, ansatz=a, shots=m)])
            ms.append(mean)
            ses.append(se)
        agg[a] = {"shots": shots, "mse": ms, "se": ses,
                  "log_log_slope": _log_slope(shots, ms) if min(ms) > 0 else None}
        series.append(_series(f"mse_{a}", shots, ms, ses))
    return agg, series


def _sweep_units(cfg, name):
    n, l = cfg.n_list[0], cfg.l_list[0]
    return [{"seed": s, "key": {"N": n, "L": l, "method": "adaptive", name: float(v)}}
            for v in cfg.sweep[name] for s in range(cfg.n_seeds)]


def _sweep_agg(cfg, records, name):
    vals = sorted({r["key"][name] for r in records})
    means, sds = [], []
    for v in vals:
        m, sd = _mean_sd([r["finals"]["final_energy"] for r in _select(records, **{name: v})])
        means.append(m)
        sds.append(sd)
    spread = (max(means) - min(means)) / abs(float(np.mean(means)))
    agg = {"values": vals, "mean_final_energy": means, "sd": sds, "relative_spread": spread,
           "mean_t_switch": [float(np.mean([r["finals"]["t_switch"] for r in _select(records, **{name: v})]))
                             for v in vals]}
    return agg, [_series(f"final_energy_vs_{name}", vals, means, sds)]


def _at15_units(cfg):
    return _methods_units(cfg, list(zip(cfg.n_list, cfg.l_list)))


def _at15_agg(cfg, records):
    pairs = list(zip(cfg.n_list, cfg.l_list))
    agg = {"final_energy": _final_table(records, pairs, METHODS), "tests": {}}
    lp_s, lp_h = [], []
    for n, l in pairs:
        fin = {m: [r["finals"]["final_energy"] for r in _select(records, N=n, L=l, method=m)] for m in METHODS}
        ts = welch_test(fin["adaptive"], fin["static"])
        th = welch_test(fin["adaptive"], fin["hea"])
        agg["tests"][f"N{n}_L{l}"] = {"adaptive_vs_static": ts.to_dict(), "adaptive_vs_hea": th.to_dict()}
        lp_s.append(ts.log10_p)
        lp_h.append(th.log10_p)
    ns = [n for n, _ in pairs]
    series = [_series("log10_p_adaptive_vs_static", ns, lp_s), _series("log10_p_adaptive_vs_hea", ns, lp_h)]
    for m in METHODS:
        rows = [agg["final_energy"][f"N{n}_L{l}_{m}"] for n, l in pairs]
        series.append(_series(f"final_energy_{m}", ns, [r["mean"] for r in rows], [r["sd"] for r in rows]))
    return agg, series


def _at16_units(cfg):
    gv = _gv_units(cfg, cfg.sweep.get("gv_n", []), cfg.sweep.get("gv_l", []))
    conv = [{"seed": s, "key": {"part": "conv", "N": n, "L": l, "method": m}}
            for n, l in zip(cfg.n_list, cfg.l_list) for m in ("adaptive", "static") for s in range(cfg.n_seeds)]
    return gv + conv


def _at16_unit(cfg, unit):
    if unit["key"]["part"] == "gv":
        return _gv_unit(cfg, unit)
    return _run_training(cfg, unit)


def _at16_agg(cfg, records):
    gv = [r for r in records if r["key"]["part"] == "gv"]
    conv = [r for r in records if r["key"]["part"] == "conv"]
    agg, series = _gv_aggregate(cfg, gv, cfg.sweep.get("gv_n", []), cfg.sweep.get("gv_l", []))
    pairs = list(zip(cfg.n_list, cfg.l_list))
    agg["final_energy"] = _final_table(conv, pairs, ("adaptive", "static"))
    for m in ("adaptive", "static"):
        rows = [agg["final_energy"][f"N{n}_L{l}_{m}"] for n, l in pairs]
        series.append(_series(f"final_energy_{m}", [n for n, _ in pairs],
                              [r["mean"] for r in rows], [r["sd"] for r in rows]))
    return agg, series


@dataclass(frozen=True)
class Experiment:
    title: str
    units: Callable
    run_unit: Callable
    aggregate: Callable


REGISTRY = {
    "AT1": Experiment("gradient variance scaling, both phases", _at1_units, _gv_unit, _at1_agg),
    "AT2": Experiment("critical cutoff sigma sweep", _at2_units, _at2_unit, _at2_agg),
    "AT3": Experiment("gradient-norm timeline across the switch", _at3_units, _run_training, _at3_agg),
    "AT4": Experiment("convergence panels", _at4_units, _run_training, _at4_agg),
    "AT5": Experiment("final energy vs system size", _at5_units, _run_training, _at5_agg),
    "AT6": Experiment("ground-state fidelity vs depth", _at6_units, _at6_unit, _at6_agg),
    "AT7": Experiment("reference-state gap vs N", _at7_units, _at7_unit, _at7_agg),
    "AT8": Experiment("effective dimension timeline", _at8_units, _at8_unit, _at8_agg),
    "AT9": Experiment("half-chain entropy vs depth", _at9_units, _at9_unit, _at9_agg),
    "AT10": Experiment("expressibility purity vs depth", _at10_units, _at10_unit, _at10_agg),
    "AT11": Experiment("depolarizing noise sweep", _at11_units, _at11_unit, _at11_agg),
    "AT12": Experiment("finite-shot gradient MSE", _at12_units, _at12_unit, _at12_agg),
    "AT13": Experiment("switch threshold sweep", partial(_sweep_units, name="delta_switch"),
                       _run_training, partial(_sweep_agg, name="delta_switch")),
    "AT14": Experiment("growth rate sweep", partial(_sweep_units, name="lambda"),
                       _run_training, partial(_sweep_agg, name="lambda")),
    "AT15": Experiment("three-way statistics", _at15_units, _run_training, _at15_agg),
    "AT16": Experiment("Heisenberg suite", _at16_units, _at16_unit, _at16_agg),
}


# ---------------------------------------------------------------------------
# execution


def _execute_unit(cfg: ExperimentConfig, unit: dict) -> dict:
    out = REGISTRY[cfg.experiment_id].run_unit(cfg, unit)
    return {"seed": unit["seed"], "key": unit["key"], **out}


def _record_order(rec: dict):
    return rec["seed"], json.dumps(rec["key"], sort_keys=True)


def aggregate(cfg: ExperimentConfig, per_seed: list) -> tuple[dict, list]:
    records = sorted(per_seed, key=_record_order)
    return REGISTRY[cfg.experiment_id].aggregate(cfg, records)


def _theory_block(cfg: ExperimentConfig) -> list:
    ns = sorted(set(cfg.n_list) | set(cfg.sweep.get("gv_n", [])))
    ls = sorted(set(cfg.l_list) | set(cfg.sweep.get("gv_l", [])))
    out = []
    for n in ns:
        B = op_norm_bound(_hamiltonian(cfg.hamiltonian, n))
        for l in ls:
            tc = theory_constants(n, l, cfg.schedule.c1, cfg.schedule.c2, B)
            tc["sigma0"] = sigma_zero(n, l, cfg.schedule.kappa)
            out.append(tc)
    return out


def _clean(obj):
    """Make ``obj`` strict-JSON safe (non-finite floats become strings)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("nan" if v != v else ("inf" if v > 0 else "-inf"))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run_experiment(cfg: ExperimentConfig, out: Optional[str | Path] = None) -> dict:
    """Run every unit of ``cfg``, aggregate, and optionally write JSON to ``out``."""
    cfg.validate()
    exp = REGISTRY[cfg.experiment_id]
    start = time.time()
    started = datetime.now(timezone.utc).isoformat()
    units = exp.units(cfg)
    if cfg.workers > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_seed = list(pool.map(partial(_execute_unit, cfg), units))
    else:
        per_seed = [_execute_unit(cfg, u) for u in units]
    per_seed = sorted(per_seed, key=_record_order)
    aggregates, series = aggregate(cfg, per_seed)
    result = _clean({
        "schema_version": SCHEMA_VERSION,
        "experiment_id": cfg.experiment_id,
        "title": exp.title,
        "config": cfg.to_dict(),
        "theory_constants": _theory_block(cfg),
        "per_seed": per_seed,
        "aggregates": aggregates,
        "series": series,
        "meta": {
            "start_time": started,
            "duration_s": time.time() - start,
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "workers": cfg.workers,
        },
    })
    if out is not None:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(result))
    return result


def dumps(result: dict) -> str:
    return json.dumps(result, indent=1, allow_nan=False) + "\n"


def config_from_result(result: dict) -> ExperimentConfig:
    c = dict(result["config"])
    sched = c.pop("schedule")
    sched = ScheduleConfig(**{("lam" if k == "lambda" else k): v for k, v in sched.items()})
    return ExperimentConfig(schedule=sched, **c)


RESULT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "experiment_id", "config", "theory_constants",
                 "per_seed", "aggregates", "series", "meta"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment_id": {"enum": list(EXPERIMENT_IDS)},
        "config": {"type": "object", "required": ["experiment_id", "hamiltonian", "n_list", "l_list",
                                                   "n_seeds", "master_seed", "schedule", "sweep", "scale"]},
        "theory_constants": {"type": "array", "items": {
            "type": "object", "required": ["N", "L", "sigma_crit", "delta_eff", "w_max", "kappa_lb"]}},
        "per_seed": {"type": "array", "items": {
            "type": "object", "required": ["seed", "key", "finals"],
            "properties": {"seed": {"type": "integer"}, "key": {"type": "object"},
                           "finals": {"type": "object"}, "trajectory": {"type": "object"}}}},
        "aggregates": {"type": "object"},
        "series": {"type": "array", "items": {
            "type": "object", "required": ["name", "x", "y", "yerr"],
            "properties": {"name": {"type": "string"}, "x": {"type": "array"}, "y": {"type": "array"}}}},
        "meta": {"type": "object", "required": ["start_time", "duration_s", "version"]},
    },
}
