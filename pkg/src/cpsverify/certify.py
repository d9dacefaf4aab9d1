"""Witness-based certification (i.i.d.) and permutation-based verification (non-i.i.d.).

Each copy gets one setting ``(i, P) ~ D``; the verifier measures the
back-propagated observable ``C P^(i) C†`` and averages the signed outcomes
``sgn(chi_i(P)) x``.  The mean maps affinely onto an unbiased estimate of the
product-state fidelity witness ``1 - sum_i (1 - F_i)``:

* identity excluded from ``D``:  ``W = 1 - n/2 + m X``
* identity included:             ``W = 1 - n + M X`` with ``M = n/2 + m``
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import prover as prover_mod
from .prover import MeasurementSession, ProverSpec, SessionError
from .target import CpsTarget, SamplingMode, SamplingPlan, backprop_observable, sample_indices


@dataclass(frozen=True)
class CertConfig:
    epsilon: float
    delta: float
    k: int = 3
    mode: SamplingMode = SamplingMode.EXCLUDE_IDENTITY
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", SamplingMode.parse(self.mode))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.k) != self.k or self.k < 3:
            raise ValueError(f"k must be an integer >= 3, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def threshold(self) -> float:
        """Accept iff the witness estimate is at least ``1 - (1 - 1/k) epsilon``."""
        return 1 - (1 - 1 / self.k) * self.epsilon

    @property
    def slack(self) -> float:
        return self.epsilon / self.k


@dataclass
class CertResult:
    n: int
    mode: SamplingMode
    epsilon: float
    delta: float
    k: int
    N: int
    x_bar: float
    w_bar: float
    threshold: float
    accept: bool
    seed: int | None = None
    tallies: dict[tuple[int, str], tuple[int, int]] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "mode": self.mode.value,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "k": self.k,
            "N": self.N,
            "X_bar": self.x_bar,
            "W_bar": self.w_bar,
            "threshold": self.threshold,
            "accept": self.accept,
            "seed": self.seed,
        }

    def tallies_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["qubit", "axis", "count", "signed_sum"])
        for (qubit, axis), (count, signed) in sorted(self.tallies.items()):
            writer.writerow([qubit, axis, count, signed])
        return buf.getvalue()


def sample_size_iid(plan: SamplingPlan, cfg: CertConfig) -> int:
    """``ceil(2 m_eff^2 (k/epsilon)^2 ln(2/delta))`` (two-sided Hoeffding)."""
    lam = cfg.slack
    return math.ceil(2 * plan.m_eff**2 / lam**2 * math.log(2 / cfg.delta))


def sample_size_noniid(n_iid: int, n: int, cfg: CertConfig, c_noniid: float = 1.0) -> int:
    """``ceil(c * n ln2 / (delta^2 eps^2) * N_iid^2 * ln^2(N_iid / delta))``."""
    if n_iid < 1:
        raise ValueError("N_iid must be at least 1")
    eps, delta = cfg.epsilon, cfg.delta
    log_d = n * math.log(2)
    return math.ceil(
        c_noniid * log_d / (delta**2 * eps**2) * n_iid**2 * math.log(n_iid / delta) ** 2
    )


def hoeffding_tail(n_samples: int, lam: float, m_eff: float) -> float:
    """Upper bound on ``Pr[|W_bar - W| >= lam]``."""
    return 2 * math.exp(-n_samples * lam**2 / (2 * m_eff**2))


def setting_observables(target: CpsTarget, plan: SamplingPlan):
    return [backprop_observable(target, s) for s in plan.support]


def certify_iid(
    target: CpsTarget,
    plan: SamplingPlan,
    session: MeasurementSession,
    cfg: CertConfig,
    rng: np.random.Generator,
    n_copies: int | None = None,
    copies: np.ndarray | None = None,
) -> CertResult:
    """Run the i.i.d. certification test on ``N`` copies from ``session``.

    ``N`` is ``len(copies)`` if explicit copy indices are given, else
    ``n_copies``, else :func:`sample_size_iid`.
    """
    if session.adaptive:
        raise SessionError("certification needs a single-shot session")
    if plan.mode is not cfg.mode:
        raise ValueError(f"plan mode {plan.mode.value} differs from config mode {cfg.mode.value}")
    if target.n != plan.n or session.n != target.n:
        raise ValueError("target, plan and session widths differ")
    if copies is not None:
        N = len(copies)
    else:
        N = n_copies if n_copies is not None else sample_size_iid(plan, cfg)
    if N < 1:
        raise ValueError("need at least one copy")
    if copies is None and session.remaining < N:
        raise SessionError(f"session offers {session.remaining} copies, {N} required")

    which = sample_indices(plan, rng, N)
    outcomes = session.measure_indexed(setting_observables(target, plan), which, copies)
    signed = plan.signs[which].astype(np.int64) * outcomes
    x_bar = float(signed.mean())
    w_bar = plan.witness_from_mean(x_bar)

    counts = np.bincount(which, minlength=len(plan.support))
    sums = np.bincount(which, weights=signed, minlength=len(plan.support))
    tallies = {
        (s.qubit, s.axis.name): (int(c), int(round(v)))
        for s, c, v in zip(plan.support, counts, sums)
        if c
    }
    return CertResult(
        n=target.n,
        mode=cfg.mode,
        epsilon=cfg.epsilon,
        delta=cfg.delta,
        k=cfg.k,
        N=N,
        x_bar=x_bar,
        w_bar=w_bar,
        threshold=cfg.threshold,
        accept=bool(w_bar >= cfg.threshold),
        seed=cfg.seed,
        tallies=tallies,
    )


def expected_witness(target: CpsTarget, plan: SamplingPlan, spec: ProverSpec) -> float:
    """Exact ``E[W_bar]``: sums ``D(i,P) sgn(chi) <C P^(i) C†>`` over the support."""
    x = math.fsum(
        float(prob) * s.sign * prover_mod.expectation(spec, q)
        for s, prob, q in zip(plan.support, plan.probs, setting_observables(target, plan))
    )
    return plan.witness_from_mean(x)


@dataclass(frozen=True)
class VerifyConfig:
    cert: CertConfig
    n_total: int
    n_test: int
    c_noniid: float = 1.0

    def __post_init__(self) -> None:
        if not self.n_total > self.n_test >= 1:
            raise ValueError(f"need N1 > N2 >= 1, got N1={self.n_total}, N2={self.n_test}")

    @property
    def n_discard(self) -> int:
        return self.n_total - self.n_test - 1

    @classmethod
    def for_plan(
        cls,
        plan: SamplingPlan,
        cert: CertConfig,
        c_noniid: float = 1.0,
        n_total: int | None = None,
    ) -> VerifyConfig:
        """Test-set size from :func:`sample_size_iid`; total from the non-i.i.d. formula unless given."""
        n_test = sample_size_iid(plan, cert)
        if n_total is None:
            n_total = sample_size_noniid(n_test, plan.n, cert, c_noniid)
        return cls(cert, n_total, n_test, c_noniid)


def partition(n_total: int, n_test: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Uniformly random test block and kept copy out of ``range(n_total)``.

    Runs the first ``n_test + 1`` swaps of a Fisher-Yates shuffle over a
    virtual array, so memory is ``O(n_test)`` even when ``n_total`` is huge.
    Every copy not returned is discarded.
    """
    if not n_total > n_test >= 1:
        raise ValueError(f"need N1 > N2 >= 1, got N1={n_total}, N2={n_test}")
    steps = n_test + 1
    targets = rng.integers(np.arange(steps), n_total)
    moved: dict[int, int] = {}
    picked = np.empty(steps, dtype=np.int64)
    for i, j in enumerate(targets.tolist()):
        picked[i] = moved.get(j, j)
        moved[j] = moved.get(i, i)
    return picked[:n_test], int(picked[-1])


def verify_noniid(
    target: CpsTarget,
    plan: SamplingPlan,
    session: MeasurementSession,
    vcfg: VerifyConfig,
    rng: np.random.Generator,
) -> tuple[CertResult, MeasurementSession]:
    """Random partition, certify the test block, return the held-out copy.

    The kept copy comes back as a one-copy adaptive session.
    """
    if session.n_copies < vcfg.n_total:
        raise SessionError(f"session has {session.n_copies} copies, N1={vcfg.n_total} required")
    required = sample_size_iid(plan, vcfg.cert)
    if vcfg.n_test < required:
        raise ValueError(f"test block N2={vcfg.n_test} is below the i.i.d. requirement {required}")
    test, keep = partition(vcfg.n_total, vcfg.n_test, rng)
    result = certify_iid(target, plan, session, vcfg.cert, rng, copies=test)
    return result, session.keep(keep)
