"""Command-line entry point.

    gamenorms {landscape,trajectory,abm,sweep} --config PATH --seed N --out DIR [--threads K]

``--config`` also accepts a manifest from an earlier run, which replays that
run (its seed wins unless ``--seed`` is given). Exit codes: 0 success,
2 configuration error, 3 numerical failure budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import sensitivity
from .abm import run_simulation
from .config import RunManifest, load_config, resolved
from .errors import ConfigError, NumericalBudgetExceeded
from .meanfield import landscape, trajectory
from .metrics import MetricsRecord

THREADS_ENV = "GAMENORMS_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _f(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=True)
        fh.write("\n")


def _check_budget(diag, budget: float) -> None:
    if diag.solves and diag.failures > budget * diag.solves:
        raise NumericalBudgetExceeded(
            f"{diag.failures} of {diag.solves} equilibrium solves failed (budget {budget:.2%})")


def _landscape_kw(cfg, threads: int) -> dict:
    return dict(fitness=cfg.fitness, boundary=cfg.boundary, eps_frac=cfg.eps_frac,
                hessian_check=cfg.hessian_check, dl_corner=cfg.dl_corner, workers=threads)


def cmd_landscape(cfg, seed: int, out: Path, threads: int) -> list[str]:
    L = landscape(cfg.grid, cfg.traits, cfg.utility, cfg.nodes, **_landscape_kw(cfg, threads))
    _check_budget(L.diagnostics, cfg.failure_budget)
    _write_csv(out / "landscape.csv", ["U", "V", "S", "Phi", "gradU", "gradV"],
               ([_f(x) for x in r] for r in L.rows()))
    _write_json(out / "attractors.json", {
        "utility": cfg.utility.to_dict(),
        "attractors": [a.to_dict() for a in L.attractors],
        "diagnostics": {"solves": L.diagnostics.solves, "fallbacks": L.diagnostics.fallbacks,
                        "failures": L.diagnostics.failures},
    })
    return ["landscape.csv", "attractors.json"]


def cmd_trajectory(cfg, seed: int, out: Path, threads: int) -> list[str]:
    pts = trajectory(cfg.loop, cfg.grid, cfg.utility, cfg.nodes, base=cfg.traits,
                     **_landscape_kw(cfg, threads))
    cols = ["mu_eta", "mu_lambda", "U", "V", "class", "U_hat", "V_hat"]
    rows = []
    for p in pts:
        r = p.to_row()
        rows.append([r[c] if c == "class" else _f(r[c]) for c in cols])
    _write_csv(out / "trajectory.csv", cols, rows)
    return ["trajectory.csv"]


def cmd_abm(cfg, seed: int, out: Path, threads: int) -> list[str]:
    sim = replace(cfg.sim, seed=seed)
    results = run_simulation(sim, workers=threads)
    rows = [m.as_row() for r in results for m in r.metrics]
    _write_csv(out / "metrics.csv", MetricsRecord.columns(), rows)
    files = ["metrics.csv"]
    for r in results:
        name = f"agents_rep{r.replicate}.csv"
        cols = list(r.agents[0])
        _write_csv(out / name, cols,
                   ([a[c] if isinstance(a[c], int) else _f(a[c]) for c in cols] for a in r.agents))
        files.append(name)
    _write_json(out / "diagnostics.json", [
        {"replicate": r.replicate, "interactions": r.interactions, "qre_fallbacks": r.qre_fallbacks}
        for r in results])
    files.append("diagnostics.json")
    return files


def _sweep_fingerprint(cfg, seed: int) -> dict:
    return {"config": resolved("sweep", cfg), "seed": seed}


def cmd_sweep(cfg, seed: int, out: Path, threads: int, max_jobs: int | None = None) -> list[str] | None:
    spec = replace(cfg.spec, seed=seed)
    partial = out / "sweep_partial.csv"
    stamp = out / "sweep_partial.json"
    fp = _sweep_fingerprint(cfg, seed)
    if partial.exists():
        if not stamp.exists() or json.loads(stamp.read_text()) != fp:
            raise ConfigError(f"{partial} belongs to a different sweep; use a fresh --out directory")
    else:
        _write_json(stamp, fp)
    results = sensitivity.run_sweep(spec, cfg.sim, partial, workers=threads, max_jobs=max_jobs)
    total = spec.n_rows * spec.replicates
    if len(results) < total:
        print(f"sweep paused after {len(results)} of {total} jobs; rerun to resume", file=sys.stderr)
        return None
    sensitivity.write_results_csv(out / "sweep_results.csv", results)
    _write_json(out / "sobol_indices.json",
                sensitivity.sweep_indices(results, spec, B=cfg.bootstrap, conf_level=cfg.conf_level))
    partial.unlink()
    stamp.unlink()
    return ["sweep_results.csv", "sobol_indices.json"]


COMMAND_FUNCS = {"landscape": cmd_landscape, "trajectory": cmd_trajectory,
                 "abm": cmd_abm, "sweep": cmd_sweep}


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gamenorms", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMAND_FUNCS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON config or run manifest")
        s.add_argument("--seed", type=int, default=None, help="master seed (default: config, else 0)")
        s.add_argument("--out", required=True, help="output directory")
        s.add_argument("--threads", type=int, default=None,
                       help=f"worker count (default: ${THREADS_ENV} or 1)")
        if name == "sweep":
            s.add_argument("--max-jobs", type=int, default=None,
                           help="stop after this many new jobs; rerun to resume")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg, file_seed = load_config(args.command, args.config)
        seed = args.seed if args.seed is not None else (file_seed if file_seed is not None else 0)
        if seed < 0:
            raise ConfigError("seed must be non-negative")
        threads = _threads(args.threads)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(args.command, resolved(args.command, cfg), seed, [], 0.0)
        extra = {"max_jobs": args.max_jobs} if args.command == "sweep" else {}
        if args.command == "sweep":
            manifest.write(out / "manifest.json")  # lets an interrupted sweep resume from it
        files = COMMAND_FUNCS[args.command](cfg, seed, out, threads, **extra)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBudgetExceeded as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    if files is None:
        return EXIT_OK
    manifest.outputs = files
    manifest.duration_s = round(time.perf_counter() - t0, 3)
    manifest.write(out / "manifest.json")
    print(f"wrote {', '.join(files)} to {out}")
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
