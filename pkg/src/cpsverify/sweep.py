"""Monte Carlo acceptance sweeps over a noise-parameter grid."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .certify import certify_iid, expected_witness, sample_size_iid
from .config import ConfigError, ExperimentConfig
from .prover import open_session
from .seeds import derive_rng
from .target import build_plan

CSV_COLUMNS = ("param", "trials", "N_per_trial", "mean_W", "stderr_W", "accept_rate")


@dataclass(frozen=True)
class SweepRow:
    param: float
    trials: int
    n_per_trial: int
    mean_w: float
    stderr_w: float
    accept_rate: float
    exact_w: float

    def csv_fields(self) -> list[str]:
        return [
            repr(self.param),
            str(self.trials),
            str(self.n_per_trial),
            repr(self.mean_w),
            repr(self.stderr_w),
            repr(self.accept_rate),
        ]


def trial_tag(param: str, value: float) -> str:
    return f"sweep/{param}={float(value)!r}"


def _grid_point(payload: tuple[dict[str, Any], str, int, float, str | None]) -> SweepRow:
    data, base_dir, seed, value, mode = payload
    cfg = ExperimentConfig.from_dict(data, base_dir)
    assert cfg.sweep is not None
    target = cfg.build_target()
    cert = cfg.cert.build(seed, mode)
    plan = build_plan(target, cert.mode)
    prover = cfg.build_prover(target, cfg.prover.with_noise(cfg.sweep.param, value))
    n_copies = cfg.cert.n_copies or sample_size_iid(plan, cert)

    tag = trial_tag(cfg.sweep.param, value)
    w = np.empty(cfg.sweep.trials)
    accepted = 0
    for t in range(cfg.sweep.trials):
        rng = derive_rng(seed, tag, t)
        session = open_session(prover, n_copies, rng)
        result = certify_iid(target, plan, session, cert, rng, n_copies=n_copies)
        w[t] = result.w_bar
        accepted += result.accept
    trials = cfg.sweep.trials
    stderr = float(w.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SweepRow(
        param=float(value),
        trials=trials,
        n_per_trial=n_copies,
        mean_w=float(w.mean()),
        stderr_w=stderr,
        accept_rate=accepted / trials,
        exact_w=expected_witness(target, plan, prover),
    )


def run_sweep(cfg: ExperimentConfig, seed: int, jobs: int = 1, mode: str | None = None) -> list[SweepRow]:
    """One row per grid point, in grid order, independent of ``jobs``."""
    if cfg.sweep is None:
        raise ConfigError("config has no 'sweep' section")
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    data = cfg.to_dict()
    payloads = [(data, str(cfg.base_dir), seed, value, mode) for value in cfg.sweep.grid]
    if jobs == 1 or len(payloads) == 1:
        return [_grid_point(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=min(jobs, len(payloads))) as pool:
        return list(pool.map(_grid_point, payloads))


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def write_sweep(rows: list[SweepRow], path: str | Path) -> None:
    Path(path).write_text(sweep_csv(rows))


__all__ = ["SweepRow", "run_sweep", "sweep_csv", "write_sweep", "CSV_COLUMNS"]
