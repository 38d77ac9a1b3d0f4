"""Command line interface: run, bench, compare, gen-scenario.

Every report writes plot-ready CSV plus the rendered figure next to it.
Exit codes: 0 success, 2 configuration/schema problem, 3 solver domain
error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import figures
from .baselines import SchemeId, run_scheme
from .config import (ConfigError, load_config, scenario_from_config,
                     scenario_hash, scenario_to_dict, scheme_from_name,
                     solver_params_from_config)
from .model import (Allocation, DomainError, Scenario, check_feasibility,
                    objective, samples_from_matrices)
from .solver import REFERENCE_SIZE_CAP, SolveResult, reference_solve, solve

FEASIBILITY_TOL = 1e-6


def _worker_count(num_jobs: int) -> int:
    env = os.environ.get("QOT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(num_jobs, os.cpu_count() or 1))


def _write_csv(path: Path, header: list[str] | None, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(header)
        writer.writerows(rows)


def _per_cav_errors(scenario: Scenario, v: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        err = scenario.curve_amp * v ** (-scenario.curve_exp)
    return np.where(v > 0, err, np.inf)


def _evaluate_scheme(scheme: SchemeId, scenario: Scenario, params) -> dict:
    """Run one scheme and evaluate it on the true scenario."""
    t0 = time.perf_counter()
    result: SolveResult | None = None
    if scheme is SchemeId.PROPOSED:
        result = solve(scenario, params)
        alloc = result.allocation
    else:
        alloc = run_scheme(scheme, scenario, params)
    wall = time.perf_counter() - t0
    v = samples_from_matrices(alloc.bandwidth, alloc.power, scenario)
    return {
        "scheme": scheme,
        "allocation": alloc,
        "objective": objective(alloc, scenario),
        "samples": v,
        "errors": _per_cav_errors(scenario, v),
        "wall_time_s": wall,
        "result": result,
    }


def cmd_run(args) -> int:
    document = load_config(args.config)
    run_section = document.get("run", {})
    scheme = scheme_from_name(args.scheme or run_section.get("scheme", "proposed"))
    seeds = run_section.get("seeds", [0])
    seed = args.seed if args.seed is not None else seeds[0]
    out_dir = Path(args.out or run_section.get("out_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    scenario = scenario_from_config(document, seed=seed)
    params = solver_params_from_config(document, faithful=args.faithful_paper)
    evaluated = _evaluate_scheme(scheme, scenario, params)
    alloc: Allocation = evaluated["allocation"]
    result: SolveResult | None = evaluated["result"]
    report = check_feasibility(alloc, scenario, FEASIBILITY_TOL)

    ao_trace = result.ao_trace if result else [evaluated["objective"]]
    record = {
        "config": document,
        "scheme": scheme.value,
        "seed": seed,
        "scenario_hash": scenario_hash(scenario),
        "objective": evaluated["objective"],
        "per_cav_samples": [float(x) for x in evaluated["samples"]],
        "per_cav_errors": [float(x) for x in evaluated["errors"]],
        "feasible": report.feasible,
        "converged": result.converged if result else None,
        "ao_rounds": result.ao_rounds if result else None,
        "inner_iters": {
            "agp": [t["agp_iters"] for t in result.inner_traces],
            "dual": [t["dual_iters"] for t in result.inner_traces],
        } if result else None,
        "timing": {
            "wall_time_s": evaluated["wall_time_s"],
            "agp_time_s": result.agp_time_s if result else None,
            "dual_time_s": result.dual_time_s if result else None,
        },
    }
    with open(out_dir / "result.json", "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_csv(out_dir / "ao_trace.csv", ["round", "objective"],
               list(enumerate(ao_trace)))
    _write_csv(out_dir / "allocation_u.csv", None, alloc.bandwidth.tolist())
    _write_csv(out_dir / "allocation_p.csv", None, alloc.power.tolist())
    _write_csv(out_dir / "samples.csv", ["cav", "samples", "error"],
               [(k, float(evaluated["samples"][k]), float(evaluated["errors"][k]))
                for k in range(scenario.num_cavs)])
    figures.save_convergence(ao_trace, str(out_dir / "convergence.png"))
    print(f"run complete: scheme={scheme.value} objective={evaluated['objective']!r} "
          f"-> {out_dir}")
    return 0


def cmd_compare(args) -> int:
    document = load_config(args.config)
    run_section = document.get("run", {})
    seeds = [args.seed] if args.seed is not None else run_section.get("seeds", [0])
    out_dir = Path(args.out or run_section.get("out_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    params_factory = lambda: solver_params_from_config(  # noqa: E731
        document, faithful=args.faithful_paper)

    jobs = [(seed, scheme) for seed in seeds for scheme in SchemeId]

    def evaluate(job):
        seed, scheme = job
        scenario = scenario_from_config(document, seed=seed)
        out = _evaluate_scheme(scheme, scenario, params_factory())
        return seed, scheme, out

    results = {}
    with ThreadPoolExecutor(max_workers=_worker_count(len(jobs))) as pool:
        for seed, scheme, out in pool.map(evaluate, jobs):
            results[(seed, scheme)] = out

    num_cavs = len(next(iter(results.values()))["samples"])
    header = (["seed", "scheme", "objective"]
              + [f"v_{k + 1}" for k in range(num_cavs)]
              + [f"err_{k + 1}" for k in range(num_cavs)]
              + ["wall_time_s"])
    rows = []
    for seed in seeds:
        for scheme in SchemeId:
            out = results[(seed, scheme)]
            rows.append([seed, scheme.value, out["objective"],
                         *[float(x) for x in out["samples"]],
                         *[float(x) for x in out["errors"]],
                         out["wall_time_s"]])
    for scheme in SchemeId:
        outs = [results[(seed, scheme)] for seed in seeds]
        rows.append([
            "mean", scheme.value,
            float(np.mean([o["objective"] for o in outs])),
            *[float(np.mean([o["samples"][k] for o in outs])) for k in range(num_cavs)],
            *[float(np.mean([o["errors"][k] for o in outs])) for k in range(num_cavs)],
            float(np.mean([o["wall_time_s"] for o in outs])),
        ])
    _write_csv(out_dir / "compare.csv", header, rows)

    mean_samples = {}
    mean_errors = {}
    for scheme in SchemeId:
        outs = [results[(seed, scheme)] for seed in seeds]
        mean_samples[scheme.value] = [
            float(np.mean([o["samples"][k] for o in outs])) for k in range(num_cavs)]
        mean_errors[scheme.value] = [
            float(np.mean([o["errors"][k] for o in outs])) for k in range(num_cavs)]
    figures.save_sample_comparison(mean_samples, str(out_dir / "samples.png"))
    figures.save_error_comparison(mean_errors, str(out_dir / "errors.png"))
    print(f"compare complete: {len(seeds)} seeds x {len(SchemeId)} schemes -> {out_dir}")
    return 0


def cmd_bench(args) -> int:
    document = load_config(args.config)
    run_section = document.get("run", {})
    slot_counts = sorted(int(s) for s in args.slots.split(","))
    out_dir = Path(args.out or run_section.get("out_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else run_section.get("seeds", [0])[0]

    rows = []
    for n in slot_counts:
        doc = json.loads(json.dumps(document))
        doc["scenario"]["num_slots"] = n
        scenario = scenario_from_config(doc, seed=seed)
        params = solver_params_from_config(doc, faithful=args.faithful_paper)
        result = solve(scenario, params)
        per_iter = result.agp_time_s / max(result.agp_iters, 1)
        rows.append({
            "slots": n, "scheme": "proposed", "status": "ok",
            "wall_time_s": result.wall_time_s, "ao_rounds": result.ao_rounds,
            "agp_iters": result.agp_iters, "dual_iters": result.dual_iters,
            "agp_s_per_iter": per_iter,
        })
        if scenario.num_cavs * n <= REFERENCE_SIZE_CAP:
            ref = reference_solve(scenario)
            rows.append({
                "slots": n, "scheme": "reference", "status": "ok",
                "wall_time_s": ref.wall_time_s, "ao_rounds": "",
                "agp_iters": "", "dual_iters": "", "agp_s_per_iter": "",
            })
        else:
            rows.append({
                "slots": n, "scheme": "reference", "status": "skipped",
                "wall_time_s": "", "ao_rounds": "", "agp_iters": "",
                "dual_iters": "", "agp_s_per_iter": "",
            })
    header = ["slots", "scheme", "status", "wall_time_s", "ao_rounds",
              "agp_iters", "dual_iters", "agp_s_per_iter"]
    _write_csv(out_dir / "bench.csv", header,
               [[r[h] for h in header] for r in rows])
    figures.save_scaling(rows, str(out_dir / "scaling.png"))
    print(f"bench complete: slots={slot_counts} -> {out_dir}")
    return 0


def cmd_gen_scenario(args) -> int:
    document = load_config(args.config)
    scenario = scenario_from_config(document, seed=args.seed)
    out_dir = Path(args.out or document.get("run", {}).get("out_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    exported = {"scenario": scenario_to_dict(scenario)}
    if "channel" in document:
        exported["channel"] = dict(document["channel"])
        if args.seed is not None:
            exported["channel"]["seed"] = args.seed
    path = out_dir / "scenario.json"
    with open(path, "w") as fh:
        json.dump(exported, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"scenario written: hash={scenario_hash(scenario)} -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qotalloc",
        description="Training-quality aware bandwidth and power allocation")
    sub = parser.add_subparsers(dest="command", required=True)

    def seed_value(text: str) -> int:
        value = int(text)
        if value < 0:
            raise argparse.ArgumentTypeError("seed must be nonnegative")
        return value

    def common(p):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=seed_value, default=None,
                       help="channel seed override")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--faithful-paper", dest="faithful_paper",
                       action="store_true",
                       help="published fixed step sizes and plain iterations")

    p_run = sub.add_parser("run", help="solve one scenario and write reports")
    common(p_run)
    p_run.add_argument("--scheme", default=None,
                       help="allocation scheme (default from config)")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="timing benchmark across slot counts")
    common(p_bench)
    p_bench.add_argument("--slots", default="250,500,1000",
                         help="comma-separated slot counts")
    p_bench.set_defaults(func=cmd_bench)

    p_cmp = sub.add_parser("compare", help="run all schemes over the config seeds")
    common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_gen = sub.add_parser("gen-scenario", help="materialize and export a scenario")
    common(p_gen)
    p_gen.set_defaults(func=cmd_gen_scenario)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
