"""Command-line entry point: ``aheft run`` and ``aheft verify``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import AheftError, UsageError
from .harness import EXPERIMENT_IDS, default_config, run_experiment

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aheft", description="Adaptive H-EFT variational experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment and write its JSON result")
    r.add_argument("--experiment", required=True, type=str.upper, choices=EXPERIMENT_IDS,
                   metavar="{at1..at16}")
    r.add_argument("--scale", choices=("desk", "paper"), default="desk")
    r.add_argument("--hamiltonian", choices=("tfim", "xxz"), type=str.lower)
    r.add_argument("--n", type=_int_list, help="comma-separated qubit counts")
    r.add_argument("--layers", type=_int_list, help="comma-separated layer counts")
    r.add_argument("--seeds", type=int)
    r.add_argument("--master-seed", type=int, default=0)
    r.add_argument("--steps", type=int, help="total optimizer steps T")
    r.add_argument("--lambda", dest="lam", type=float)
    r.add_argument("--delta-switch", type=float)
    r.add_argument("--kappa", type=float)
    r.add_argument("--c2", type=float)
    r.add_argument("--noise-p", type=float)
    r.add_argument("--shots", type=_int_list)
    r.add_argument("--out", type=Path)
    r.add_argument("--workers", type=int, default=1)

    v = sub.add_parser("verify", help="run a bundled test suite")
    v.add_argument("--suite", choices=("acceptance", "invariants"), required=True)
    return p


def config_from_args(args: argparse.Namespace):
    """Translate parsed ``run`` flags into an ExperimentConfig."""
    cfg = default_config(args.experiment, args.scale)
    eid = cfg.experiment_id
    if args.hamiltonian:
        cfg.hamiltonian = args.hamiltonian
    if args.n:
        cfg.n_list = args.n
    if args.layers:
        cfg.l_list = args.layers
    if args.seeds is not None:
        cfg.n_seeds = args.seeds
    cfg.master_seed = args.master_seed
    cfg.workers = max(1, args.workers)

    sched = {}
    if args.kappa is not None:
        sched["kappa"] = args.kappa
    if args.c2 is not None:
        sched["c2"] = args.c2
    if args.steps is not None:
        base = cfg.schedule
        sched["total_steps"] = args.steps
        sched["phase1_cap"] = min(base.phase1_cap, args.steps)
        sched["burn_in"] = min(base.burn_in, args.steps)
    if args.lam is not None:
        if eid == "AT14":
            cfg.sweep["lambda"] = [args.lam]
        sched["lam"] = args.lam
    if args.delta_switch is not None:
        if eid == "AT13":
            cfg.sweep["delta_switch"] = [args.delta_switch]
        sched["delta_switch"] = args.delta_switch
    if sched:
        cfg.schedule = replace(cfg.schedule, **sched)

    if args.noise_p is not None:
        if eid == "AT11":
            cfg.sweep["p"] = sorted({0.0, args.noise_p})
        else:
            cfg.noise_p = args.noise_p
    if args.shots:
        if eid != "AT12":
            raise UsageError("--shots only applies to at12")
        cfg.sweep["shots"] = args.shots
    return cfg


def _summary(result: dict) -> str:
    meta = result["meta"]
    cfg = result["config"]
    return (f"{result['experiment_id']} ({result['title']}): {len(result['per_seed'])} records, "
            f"N={cfg['n_list']} L={cfg['l_list']} seeds={cfg['n_seeds']}, {meta['duration_s']:.1f}s")


def _tests_dir() -> Path:
    here = Path(__file__).resolve()
    for parent in here.parents:
        cand = parent / "tests"
        if (cand / "test_acceptance.py").exists():
            return cand
    raise FileNotFoundError("test directory not found next to the package")


def _verify(suite: str) -> int:
    import pytest

    tests = _tests_dir()
    if suite == "acceptance":
        targets = [str(tests / "test_acceptance.py")]
    else:
        targets = [str(tests), "--ignore", str(tests / "test_acceptance.py")]
    return int(pytest.main(["-q", *targets]))


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if args.command == "verify":
            rc = _verify(args.suite)
            print(f"verify {args.suite}: {'passed' if rc == 0 else 'failed'}")
            return EXIT_OK if rc == 0 else EXIT_RUNTIME
        try:
            cfg = config_from_args(args)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        result = run_experiment(cfg, out=args.out)
    except UsageError as exc:
        print(f"aheft: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AheftError, ValueError, OSError) as exc:
        print(f"aheft: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    line = _summary(result)
    if args.out is not None:
        line += f" -> {args.out}"
    print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
