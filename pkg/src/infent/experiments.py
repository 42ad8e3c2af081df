"""Seeded Monte Carlo engine: error trajectories, rate fits, coverage, and
proof diagnostics, with JSON/CSV persistence.

Runs are deterministic: each (n, trial) cell draws its sample from a seed
derived as base_seed XOR a stable hash of (n, trial), so re-running a config
reproduces the report byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import plugin_confidence_halfwidth
from .errors import ConfigError, FitUnavailableError, ReportParseError
from .estimators import (
    EstimatorResult,
    barron_mixture,
    bgm_estimate,
    data_driven_estimate,
    plugin_entropy,
    schedule_from_spec,
)
from .measures import empirical_measure, restricted_variation, support_stats
from .pmfs import Pmf, Sample, pmf_entropy, pmf_from_spec, sample

_ESTIMATOR_KINDS = ("plugin", "data_driven", "barron", "bgm")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    pmf_spec: dict
    estimator_spec: dict
    n_grid: tuple[int, ...]
    trials: int
    base_seed: int
    outputs: dict = field(default_factory=dict)
    collect_diagnostics: bool = False

    def to_dict(self) -> dict:
        return {
            "pmf": self.pmf_spec,
            "estimator": self.estimator_spec,
            "n_grid": list(self.n_grid),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "outputs": self.outputs,
            "collect_diagnostics": self.collect_diagnostics,
        }


def config_from_dict(raw: dict) -> ExperimentConfig:
    try:
        n_grid = tuple(int(n) for n in raw["n_grid"])
        cfg = ExperimentConfig(
            pmf_spec=dict(raw["pmf"]),
            estimator_spec=dict(raw["estimator"]),
            n_grid=n_grid,
            trials=int(raw["trials"]),
            base_seed=int(raw["base_seed"]),
            outputs=dict(raw.get("outputs", {})),
            collect_diagnostics=bool(raw.get("collect_diagnostics", False)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config field: {exc}") from exc
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: ExperimentConfig) -> None:
    if any(b <= a for a, b in zip(cfg.n_grid, cfg.n_grid[1:])) or not cfg.n_grid:
        raise ConfigError("n_grid must be non-empty and strictly increasing")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    kind = cfg.estimator_spec.get("kind")
    if kind not in _ESTIMATOR_KINDS:
        raise ConfigError(f"unknown estimator kind {kind!r}")
    pmf = pmf_from_spec(cfg.pmf_spec)
    if kind == "barron":
        ref = pmf_from_spec(cfg.estimator_spec["reference"])
        if not ref.has_finite_support:
            raise ConfigError("mixture estimator needs a finite-support reference")
        if not pmf.has_finite_support:
            raise ConfigError("mixture estimator needs mu << reference; mu has infinite support")
        if not set(pmf.support()) <= set(ref.support()):
            raise ConfigError("mu is not dominated by the mixture reference")
    if kind == "bgm":
        ref = pmf_from_spec(cfg.estimator_spec["reference"])
        if ref.has_finite_support:
            if not pmf.has_finite_support or not set(pmf.support()) <= set(ref.support()):
                raise ConfigError("mu is not dominated by the histogram reference")
    if cfg.collect_diagnostics and kind != "data_driven":
        raise ConfigError("diagnostics are defined for the data-driven estimator only")


def _make_runner(cfg: ExperimentConfig):
    """Compile the estimator spec into a callable (sample, n) -> EstimatorResult."""
    kind = cfg.estimator_spec["kind"]
    if kind == "plugin":
        return lambda smp, n: plugin_entropy(smp)
    if kind == "data_driven":
        eps = schedule_from_spec("eps_n", cfg.estimator_spec["eps"])
        return lambda smp, n: data_driven_estimate(smp, eps.value_at(n))
    if kind == "barron":
        ref = pmf_from_spec(cfg.estimator_spec["reference"])
        a = schedule_from_spec("a_n", cfg.estimator_spec["a"])
        return lambda smp, n: barron_mixture(smp, ref, a.value_at(n))
    ref = pmf_from_spec(cfg.estimator_spec["reference"])
    a = schedule_from_spec("a_n", cfg.estimator_spec["a"])
    h = schedule_from_spec("h_n", cfg.estimator_spec["h"])
    return lambda smp, n: bgm_estimate(smp, ref, a.value_at(n), h.value_at(n))


# ---------------------------------------------------------------------------
# Records and reports
# ---------------------------------------------------------------------------

def derive_seed(base_seed: int, n: int, trial: int) -> int:
    """base_seed XOR stable 63-bit hash of (n, trial); unique per cell."""
    digest = hashlib.blake2b(f"{n}:{trial}".encode(), digest_size=8).digest()
    return (int(base_seed) ^ int.from_bytes(digest, "big")) & ((1 << 63) - 1)


@dataclass(frozen=True)
class TrialRecord:
    n: int
    trial: int
    seed: int
    estimate_bits: float
    abs_error_bits: float
    degenerate: bool
    diagnostics: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "trial": self.trial,
            "seed": self.seed,
            "estimate_bits": self.estimate_bits,
            "abs_error_bits": self.abs_error_bits,
            "degenerate": self.degenerate,
        }
        if self.diagnostics is not None:
            out["diagnostics"] = self.diagnostics
        return out


@dataclass(frozen=True)
class ExperimentReport:
    config: dict
    true_entropy_bits: float
    records: tuple[TrialRecord, ...]
    fitted_rate: dict | None

    def mean_abs_errors(self) -> dict[int, float]:
        sums: dict[int, float] = {}
        counts: dict[int, int] = {}
        for r in self.records:
            sums[r.n] = sums.get(r.n, 0.0) + r.abs_error_bits
            counts[r.n] = counts.get(r.n, 0) + 1
        return {n: sums[n] / counts[n] for n in sorted(sums)}

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "true_entropy_bits": self.true_entropy_bits,
            "records": [r.to_dict() for r in self.records],
            "fitted_rate": self.fitted_rate,
        }


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

def _run_block(cfg_dict: dict, n: int) -> list[TrialRecord]:
    cfg = config_from_dict(cfg_dict)
    pmf = pmf_from_spec(cfg.pmf_spec)
    runner = _make_runner(cfg)
    h_true = pmf_entropy(pmf)
    eps_sched = None
    if cfg.collect_diagnostics:
        eps_sched = schedule_from_spec("eps_n", cfg.estimator_spec["eps"])
    records = []
    for trial in range(cfg.trials):
        seed = derive_seed(cfg.base_seed, n, trial)
        smp = sample(pmf, n, seed)
        result: EstimatorResult = runner(smp, n)
        diag = None
        if eps_sched is not None:
            diag = compute_diagnostics(smp, pmf, eps_sched.value_at(n)).to_dict()
        records.append(
            TrialRecord(
                n=n,
                trial=trial,
                seed=seed,
                estimate_bits=result.entropy_bits,
                abs_error_bits=abs(result.entropy_bits - h_true),
                degenerate=result.degenerate,
                diagnostics=diag,
            )
        )
    return records


def run_error_trajectory(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Run every (n, trial) cell, record |estimate - H(mu)|, and fit a rate if possible."""
    _validate_config(cfg)
    pmf = pmf_from_spec(cfg.pmf_spec)
    h_true = pmf_entropy(pmf)
    cfg_dict = cfg.to_dict()
    if jobs > 1 and len(cfg.n_grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(_run_block, [cfg_dict] * len(cfg.n_grid), cfg.n_grid))
    else:
        blocks = [_run_block(cfg_dict, n) for n in cfg.n_grid]
    records = tuple(sorted((r for blk in blocks for r in blk), key=lambda r: (r.n, r.trial)))
    seeds = [r.seed for r in records]
    if len(set(seeds)) != len(seeds):
        raise ConfigError("derived trial seeds collide; choose a different base_seed")
    report = ExperimentReport(
        config=cfg_dict, true_entropy_bits=h_true, records=records, fitted_rate=None
    )
    fitted = None
    if len(cfg.n_grid) >= 3:
        try:
            fit = fit_rate(report)
            fitted = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2}
        except FitUnavailableError:
            fitted = None
    report = ExperimentReport(
        config=cfg_dict, true_entropy_bits=h_true, records=records, fitted_rate=fitted
    )
    if cfg.outputs.get("report"):
        save_report(report, cfg.outputs["report"])
    if cfg.outputs.get("csv"):
        export_csv(report, cfg.outputs["csv"])
    return report


# ---------------------------------------------------------------------------
# Rate fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FittedRate:
    slope: float
    intercept: float
    r2: float


def fit_rate(report: ExperimentReport) -> FittedRate:
    """OLS of log2(mean abs error) on log2(n); the slope is the empirical -rate."""
    means = report.mean_abs_errors()
    if len(means) < 3:
        raise FitUnavailableError(f"need >= 3 grid points, have {len(means)}")
    if any(v <= 0.0 for v in means.values()):
        raise FitUnavailableError("zero mean error at some n; nothing to fit")
    x = np.log2(np.array(sorted(means), dtype=np.float64))
    y = np.log2(np.array([means[n] for n in sorted(means)], dtype=np.float64))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return FittedRate(slope=float(slope), intercept=float(intercept), r2=r2)


# ---------------------------------------------------------------------------
# Confidence-interval coverage
# ---------------------------------------------------------------------------

def coverage_experiment(cfg: ExperimentConfig, delta: float) -> float:
    """Fraction of trials with |estimate - H| within the distribution-dependent half-width."""
    _validate_config(cfg)
    pmf = pmf_from_spec(cfg.pmf_spec)
    if not pmf.has_finite_support:
        raise ConfigError("coverage requires a finite-support pmf")
    if cfg.estimator_spec.get("kind") != "plugin":
        raise ConfigError("coverage is defined for the plug-in estimator")
    stats = support_stats(pmf)
    report = run_error_trajectory(cfg)
    hw = {n: plugin_confidence_halfwidth(stats, n, delta) for n in cfg.n_grid}
    hits = sum(1 for r in report.records if r.abs_error_bits <= hw[r.n])
    return hits / len(report.records)


# ---------------------------------------------------------------------------
# Proof diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostics:
    """Oracle/empirical threshold sets and the restricted-variation statistics.

    ``oracle_gamma`` holds the true-mass threshold set at eps; ``xi`` is
    evaluated on the refined oracle set at eps/2 (``oracle_gamma_half``)
    while ``rho`` uses the empirical set, both scaled by log2(1/eps).
    ``approx_terms`` carries the oracle and empirical approximation-error
    expressions (a_eps, b_eps).
    """

    oracle_gamma: frozenset[int]
    oracle_gamma_half: frozenset[int]
    gamma: frozenset[int]
    xi: float
    rho: float
    t_o_reached: bool
    approx_terms: tuple[float, float]

    def to_dict(self) -> dict:
        a_eps, b_eps = self.approx_terms
        return {
            "oracle_gamma_size": len(self.oracle_gamma),
            "oracle_gamma_half_size": len(self.oracle_gamma_half),
            "gamma_size": len(self.gamma),
            "xi": self.xi,
            "rho": self.rho,
            "t_o_reached": self.t_o_reached,
            "a_eps": a_eps,
            "b_eps": b_eps,
        }


def oracle_threshold_set(pmf: Pmf, eps: float) -> frozenset[int]:
    """Symbols whose true mass reaches eps."""
    if pmf.has_finite_support:
        return frozenset(s for s in pmf.support() if pmf.mass(s) >= eps)
    out = []
    x = 1
    while pmf.mass(x) >= eps:
        out.append(x)
        x += 1
    return frozenset(out)


def _approx_error_term(pmf: Pmf, gamma: frozenset[int], h_total: float) -> float:
    """Tail entropy sum + conditioning penalties for a threshold set."""
    head_mass = math.fsum(pmf.mass(x) for x in gamma)
    if head_mass <= 0.0:
        return math.inf
    head_h = math.fsum(
        -pmf.mass(x) * math.log2(pmf.mass(x)) for x in gamma if pmf.mass(x) > 0.0
    )
    tail_h = h_total - head_h
    return tail_h + math.log2(1.0 / head_mass) + (1.0 / head_mass - 1.0) * head_h


def compute_diagnostics(smp: Sample, truth: Pmf, eps: float) -> Diagnostics:
    if not (0.0 < eps < 1.0):
        raise ConfigError(f"eps must lie in (0,1), got {eps}")
    emp = empirical_measure(smp)
    gamma = frozenset(s for s, m in emp.mass.items() if m >= eps)
    oracle = oracle_threshold_set(truth, eps)
    oracle_half = oracle_threshold_set(truth, eps / 2.0)
    scale = math.log2(1.0 / eps)
    xi = scale * restricted_variation(truth, emp, oracle_half)
    rho = scale * restricted_variation(truth, emp, gamma)
    t_o = truth.has_finite_support and set(emp.mass) == set(truth.support())
    h_total = pmf_entropy(truth)
    a_eps = _approx_error_term(truth, oracle, h_total)
    b_eps = _approx_error_term(truth, gamma, h_total)
    return Diagnostics(
        oracle_gamma=oracle,
        oracle_gamma_half=oracle_half,
        gamma=gamma,
        xi=xi,
        rho=rho,
        t_o_reached=t_o,
        approx_terms=(a_eps, b_eps),
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def save_report(report: ExperimentReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(report_to_json(report))


def load_report(path) -> ExperimentReport:
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportParseError(
            f"{path}: invalid report JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        records = tuple(
            TrialRecord(
                n=int(r["n"]),
                trial=int(r["trial"]),
                seed=int(r["seed"]),
                estimate_bits=float(r["estimate_bits"]),
                abs_error_bits=float(r["abs_error_bits"]),
                degenerate=bool(r["degenerate"]),
                diagnostics=r.get("diagnostics"),
            )
            for r in raw["records"]
        )
        return ExperimentReport(
            config=raw["config"],
            true_entropy_bits=float(raw["true_entropy_bits"]),
            records=records,
            fitted_rate=raw.get("fitted_rate"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportParseError(f"{path}: malformed report structure: {exc}") from exc


_CSV_HEADER = ["n", "trial", "seed", "estimate", "abs_error", "degenerate"]


def export_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for r in report.records:
            writer.writerow(
                [r.n, r.trial, r.seed, repr(r.estimate_bits), repr(r.abs_error_bits),
                 int(r.degenerate)]
            )
