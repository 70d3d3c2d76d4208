"""Global sensitivity of simulation outputs: Saltelli design and Sobol indices.

Sampling and the index estimators come from SALib (first-order after
Saltelli et al. 2010, total-order after Jansen). This module adds the sweep
plumbing around them: degenerate ranges, missing indices for constant
outputs, percentile bootstrap intervals and a resumable job runner.
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace

import numpy as np
from SALib.analyze import sobol as sobol_analyze
from SALib.sample import sobol as sobol_sample

from .abm import SimConfig, run_replicate

# swept name -> SimConfig field
PARAMETER_FIELDS = {
    "alpha": "homophily",
    "lambda_shift": "lambda_shift",
    "normalization": "normalization",
    "eta_shift": "eta_shift",
    "omega_shift": "omega_shift",
}
DEFAULT_RANGES = {
    "alpha": (0.0, 2.0),
    "lambda_shift": (0.1, 5.0),
    "normalization": (0.0, 1.0),
    "eta_shift": (0.1, 5.0),
    "omega_shift": (1.0, 4.0),
}
OUTPUTS = ("gini", "recent_wealth", "zerosumness")
RESULT_COLUMNS = ["row", *PARAMETER_FIELDS, "replicate", *OUTPUTS]


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class SweepSpec:
    names: tuple[str, ...] = tuple(DEFAULT_RANGES)
    ranges: tuple[tuple[float, float], ...] = tuple(DEFAULT_RANGES.values())
    n_base: int = 512
    replicates: int = 3
    outputs: tuple[str, ...] = OUTPUTS
    seed: int = 0

    def __post_init__(self):
        if len(self.names) != len(self.ranges) or not self.names:
            raise ValueError("need one range per parameter")
        for name, (lo, hi) in zip(self.names, self.ranges):
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"bad range for {name}: [{lo}, {hi}]")
        if not _is_pow2(self.n_base):
            raise ValueError("n_base must be a power of two")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        unknown = set(self.outputs) - set(OUTPUTS)
        if unknown:
            raise ValueError(f"unknown outputs {sorted(unknown)}")

    @property
    def d(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return self.n_base * (self.d + 2)

    def problem(self) -> dict:
        # SALib rejects empty intervals; degenerate columns are fixed afterwards
        bounds = [[lo, hi] if hi > lo else [0.0, 1.0] for lo, hi in self.ranges]
        return {"num_vars": self.d, "names": list(self.names), "bounds": bounds}


def saltelli_sample(spec: SweepSpec) -> np.ndarray:
    """Design of ``n_base * (d + 2)`` rows, no second-order block.

    Rows come in blocks of d + 2 per base sample: A, the d matrices A_B^(i)
    with column i taken from B, then B.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        X = sobol_sample.sample(spec.problem(), spec.n_base, calc_second_order=False,
                                scramble=True, seed=spec.seed)
    for j, (lo, hi) in enumerate(spec.ranges):
        if hi == lo:
            X[:, j] = lo
    return X


@dataclass
class SobolResult:
    names: list[str]
    S1: np.ndarray
    ST: np.ndarray
    S1_raw: np.ndarray
    ST_raw: np.ndarray
    S1_CI: np.ndarray = field(default=None)
    ST_CI: np.ndarray = field(default=None)

    def records(self) -> list[dict]:
        out = []
        for k, name in enumerate(self.names):
            out.append({
                "parameter": name,
                "S1": _num(self.S1[k]),
                "S1_CI": [_num(v) for v in self.S1_CI[k]],
                "ST": _num(self.ST[k]),
                "ST_CI": [_num(v) for v in self.ST_CI[k]],
            })
        return out


def _num(x):
    return None if not np.isfinite(x) else float(x)


def _check(outputs, d: int, n_base: int) -> np.ndarray:
    y = np.asarray(outputs, dtype=float).ravel()
    if y.size != n_base * (d + 2):
        raise ValueError(f"expected {n_base * (d + 2)} outputs, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise ValueError("outputs must be finite")
    return y


def _constant(y: np.ndarray) -> bool:
    return float(np.ptp(y)) <= np.finfo(float).eps * max(1.0, float(np.abs(y).max()))


def sobol_indices(outputs, d: int, n_base: int, names=None, *, B: int = 1,
                  conf_level: float = 0.95, seed: int = 0) -> SobolResult:
    """First- and total-order indices with percentile bootstrap intervals.

    Point estimates are clipped to [0, 1] for reporting; raw estimates are
    kept on the result. Constant outputs give NaN (missing) indices. With
    ``B == 1`` there is no spread to estimate and the interval collapses to
    the point estimate.
    """
    y = _check(outputs, d, n_base)
    names = list(names) if names is not None else [f"x{i + 1}" for i in range(d)]
    if _constant(y):
        nan = np.full(d, np.nan)
        ci = np.full((d, 2), np.nan)
        return SobolResult(names, nan, nan.copy(), nan.copy(), nan.copy(), ci, ci.copy())
    problem = {"num_vars": d, "names": names, "bounds": [[0.0, 1.0]] * d}
    # SALib treats a falsy seed as "unseeded", so hand it a derived non-zero one
    boot_seed = int(np.random.SeedSequence(seed).generate_state(1)[0]) or 1
    with warnings.catch_warnings():
        if B <= 1:
            # SALib's spread of a single resample is a 0/0; we do not use it
            warnings.simplefilter("ignore", RuntimeWarning)
        res = sobol_analyze.analyze(problem, y, calc_second_order=False, num_resamples=max(B, 1),
                                    conf_level=conf_level, keep_resamples=True, seed=boot_seed)
    s1_raw = np.asarray(res["S1"], dtype=float)
    st_raw = np.asarray(res["ST"], dtype=float)
    if B <= 1:
        s1_ci = np.column_stack([s1_raw, s1_raw])
        st_ci = np.column_stack([st_raw, st_raw])
    else:
        q = [50.0 * (1.0 - conf_level), 50.0 * (1.0 + conf_level)]
        s1_ci = np.percentile(res["S1_conf_all"], q, axis=0).T
        st_ci = np.percentile(res["ST_conf_all"], q, axis=0).T
    return SobolResult(names, np.clip(s1_raw, 0.0, 1.0), np.clip(st_raw, 0.0, 1.0),
                       s1_raw, st_raw, s1_ci, st_ci)


def bootstrap_ci(outputs, d: int, n_base: int, B: int = 1000, conf_level: float = 0.95,
                 seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Percentile intervals (d, 2) for S1 and ST.

    Base-sample indices are resampled with replacement and each index
    carries its whole block of d + 2 rows.
    """
    r = sobol_indices(outputs, d, n_base, B=B, conf_level=conf_level, seed=seed)
    return r.S1_CI, r.ST_CI


# ---------------------------------------------------------------- sweep runner

def job_seed(master: int, row: int, rep: int) -> int:
    """Seed of one (design row, replicate) job, independent of run order."""
    ss = np.random.SeedSequence(master, spawn_key=(row, rep))
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


def job_config(base: SimConfig, names, values, seed: int) -> SimConfig:
    kw = {PARAMETER_FIELDS[n]: float(v) for n, v in zip(names, values)}
    return replace(base, replicates=1, seed=seed, **kw)


def run_job(base: SimConfig, names, values, master: int, row: int, rep: int) -> dict:
    cfg = job_config(base, names, values, job_seed(master, row, rep))
    last = run_replicate(cfg, 0).metrics[-1]
    out = {"row": row, "replicate": rep}
    for n in PARAMETER_FIELDS:
        out[n] = float(values[list(names).index(n)]) if n in names else getattr(base, PARAMETER_FIELDS[n])
    out.update(gini=last.gini, recent_wealth=last.mean_income, zerosumness=last.mean_Z)
    return out


def _job(args):
    return run_job(*args)


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def _read_partial(path) -> dict:
    done = {}
    if not os.path.exists(path):
        return done
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            try:
                row = {k: (int(v) if k in ("row", "replicate") else float(v)) for k, v in rec.items()}
            except (TypeError, ValueError):
                continue  # a torn last line from an interrupted write
            done[(row["row"], row["replicate"])] = row
    return done


def run_sweep(spec: SweepSpec, base: SimConfig, partial_path=None, workers: int = 1,
              max_jobs: int | None = None) -> list[dict]:
    """Run every (row, replicate) job, appending finished jobs to ``partial_path``.

    Jobs already present in the partial file are skipped, so an interrupted
    sweep resumes where it stopped. ``max_jobs`` caps the number of new jobs
    in this call (used to simulate interruption). Results are returned
    sorted by (row, replicate) whatever the completion order.
    """
    X = saltelli_sample(spec)
    done = _read_partial(partial_path) if partial_path else {}
    todo = [(base, spec.names, X[r], spec.seed, r, k)
            for r in range(X.shape[0]) for k in range(spec.replicates) if (r, k) not in done]
    if max_jobs is not None:
        todo = todo[:max_jobs]
    fh = None
    if partial_path:
        fresh = not os.path.exists(partial_path) or os.path.getsize(partial_path) == 0
        fh = open(partial_path, "a", newline="")
        if fresh:
            fh.write(",".join(RESULT_COLUMNS) + "\n")

    def record(res):
        done[(res["row"], res["replicate"])] = res
        if fh:
            fh.write(",".join(_fmt(res[c]) for c in RESULT_COLUMNS) + "\n")
            fh.flush()

    try:
        if workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for fut in as_completed([pool.submit(_job, t) for t in todo]):
                    record(fut.result())
        else:
            for t in todo:
                record(_job(t))
    finally:
        if fh:
            fh.close()
    return [done[k] for k in sorted(done)]


def aggregate(results: list[dict], spec: SweepSpec) -> dict[str, np.ndarray]:
    """Replicate means per design row for each output."""
    out = {}
    for name in spec.outputs:
        acc = np.zeros(spec.n_rows)
        cnt = np.zeros(spec.n_rows)
        for r in results:
            acc[r["row"]] += r[name]
            cnt[r["row"]] += 1
        if np.any(cnt == 0):
            raise ValueError("sweep incomplete: some design rows have no results")
        out[name] = acc / cnt
    return out


def sweep_indices(results: list[dict], spec: SweepSpec, B: int = 1000,
                  conf_level: float = 0.95) -> dict[str, list[dict]]:
    means = aggregate(results, spec)
    return {name: sobol_indices(y, spec.d, spec.n_base, spec.names, B=B,
                                conf_level=conf_level, seed=spec.seed).records()
            for name, y in means.items()}


def write_results_csv(path, results: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for r in results:
            fh.write(",".join(_fmt(r[c]) for c in RESULT_COLUMNS) + "\n")
