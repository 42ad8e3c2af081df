"""Command-line front end.

Subcommands: estimate, trajectory, rate, coverage, bounds, lecam, diagnose.
Exit codes: 0 success, 1 degenerate-only results or module error, 2 usage
error, 3 unreadable input/config.  The INFENT_OUTPUT_DIR environment variable
sets the default directory for written reports.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import bounds as bounds_mod
from . import experiments as exp_mod
from .errors import InfentError
from .estimators import (
    barron_mixture,
    bgm_estimate,
    data_driven_estimate,
    plugin_entropy,
    power_rate_exponent,
)
from .measures import SupportStats
from .pmfs import Sample, load_symbols, pmf_from_spec


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=96)


@dataclass(frozen=True)
class CliInvocation:
    subcommand: str
    options: argparse.Namespace
    verbosity: int = 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infent",
        description="Entropy estimation on countably infinite alphabets.",
        formatter_class=_formatter,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="echo resolved inputs to stderr (repeatable)")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    est = sub.add_parser(
        "estimate", formatter_class=_formatter,
        help="estimate entropy from a newline-delimited integer sample file",
    )
    est.add_argument("--input", required=True, help="sample file, one positive integer per line")
    est.add_argument("--estimator", default="plugin",
                     choices=["plugin", "data-driven", "barron", "bgm"],
                     help="estimator to apply (default: plugin)")
    est.add_argument("--eps", type=float, help="threshold for the data-driven estimator")
    est.add_argument("--a", type=float, help="mixture weight a_n for barron/bgm")
    est.add_argument("--h", type=float, help="cell mass floor h_n for bgm")
    est.add_argument("--reference", help="reference pmf spec as inline JSON (barron/bgm)")
    est.add_argument("--delta", type=float,
                     help="also print a confidence half-width at this miss probability")
    est.add_argument("--true-support-stats",
                     help='true-law stats as JSON {"m": min_mass, "size": support_size}')
    est.add_argument("--json", action="store_true", help="emit full-precision JSON instead of text")

    for name, help_text in [
        ("trajectory", "run a Monte Carlo error trajectory and write the report"),
        ("rate", "run a trajectory and fit the error decay rate"),
        ("coverage", "measure confidence-interval coverage for the plug-in estimator"),
    ]:
        p = sub.add_parser(name, formatter_class=_formatter, help=help_text)
        p.add_argument("--config", required=True, help="experiment config JSON file")
        p.add_argument("--trials", type=int, help="override: trials per grid point")
        p.add_argument("--base-seed", type=int, help="override: base seed")
        p.add_argument("--n-grid", help="override: comma-separated sample sizes")
        p.add_argument("--output", help="override: report JSON path")
        p.add_argument("--csv", help="override: CSV export path")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
        if name == "coverage":
            p.add_argument("--delta", type=float, required=True, help="miss probability")

    bnd = sub.add_parser("bounds", formatter_class=_formatter,
                         help="print deviation-bound curves as CSV")
    bnd.add_argument("--quantity", required=True,
                     choices=["tv", "entropy", "reverse_kl", "direct_kl", "dd_entropy"],
                     help="which deviation bound to evaluate")
    bnd.add_argument("--size", type=int, required=True, help="support size k")
    bnd.add_argument("--min-mass", type=float,
                     help="minimum support mass m (all quantities but tv)")
    bnd.add_argument("--n", type=int, required=True, help="sample size")
    bnd.add_argument("--eps-grid", required=True, help="comma-separated epsilon values")
    bnd.add_argument("--trials", type=int,
                     help="add an empirical-frequency column from uniform(size) trials")
    bnd.add_argument("--seed", type=int, default=0, help="seed for the empirical column")
    bnd.add_argument("--output", help="write CSV here instead of stdout")

    lec = sub.add_parser("lecam", formatter_class=_formatter,
                         help="table of two-point minimax lower bounds")
    lec.add_argument("--p-uniform", type=int, help="base law P = uniform over this many symbols")
    lec.add_argument("--p-weights", help="base law P as inline JSON weights")
    lec.add_argument("--m-list", required=True, help="comma-separated perturbation sizes M")
    lec.add_argument("--n", type=int, required=True, help="sample size for the risk bound")

    dia = sub.add_parser("diagnose", formatter_class=_formatter,
                         help="dump threshold-set diagnostics for one sample")
    dia.add_argument("--input", required=True, help="sample file")
    dia.add_argument("--truth", required=True, help="true pmf spec as inline JSON")
    dia.add_argument("--eps", type=float, required=True, help="threshold")
    return parser


def parse_invocation(argv: list[str]) -> CliInvocation:
    ns = build_parser().parse_args(argv)
    return CliInvocation(subcommand=ns.subcommand, options=ns, verbosity=ns.verbose)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _load_json_file(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise _IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _IoFailure(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


class _IoFailure(Exception):
    pass


def _run_estimate(opt) -> int:
    try:
        symbols = load_symbols(opt.input)
    except OSError as exc:
        raise _IoFailure(f"cannot read {opt.input}: {exc}") from exc
    smp = Sample(symbols=symbols, seed=0, source=f"file:{opt.input}")
    if opt.estimator == "plugin":
        result = plugin_entropy(smp)
    elif opt.estimator == "data-driven":
        if opt.eps is None:
            raise InfentError("data-driven estimator needs --eps")
        result = data_driven_estimate(smp, opt.eps)
    else:
        if opt.reference is None or opt.a is None:
            raise InfentError(f"{opt.estimator} needs --reference and --a")
        ref = pmf_from_spec(json.loads(opt.reference))
        if opt.estimator == "barron":
            result = barron_mixture(smp, ref, opt.a)
        else:
            if opt.h is None:
                raise InfentError("bgm needs --h")
            result = bgm_estimate(smp, ref, opt.a, opt.h)
    halfwidth = None
    if opt.delta is not None and opt.true_support_stats:
        raw = json.loads(opt.true_support_stats)
        stats = SupportStats(
            min_mass=float(raw["m"]),
            min_mass_bits=-math.log2(float(raw["m"])),
            size=int(raw["size"]),
        )
        halfwidth = bounds_mod.plugin_confidence_halfwidth(stats, len(smp), opt.delta)
    if opt.json:
        payload = {
            "entropy_bits": result.entropy_bits,
            "degenerate": result.degenerate,
            "n": len(smp),
            "estimator": opt.estimator,
        }
        if halfwidth is not None:
            payload["ci_halfwidth_bits"] = halfwidth
            payload["delta"] = opt.delta
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"{result.entropy_bits:.6f} bits")
        if halfwidth is not None:
            print(f"ci_halfwidth={halfwidth:.6f} bits delta={opt.delta:g}")
    return 1 if result.degenerate else 0


def _config_from_flags(opt) -> exp_mod.ExperimentConfig:
    raw = _load_json_file(opt.config)
    if opt.trials is not None:
        raw["trials"] = opt.trials
    if opt.base_seed is not None:
        raw["base_seed"] = opt.base_seed
    if opt.n_grid is not None:
        raw["n_grid"] = [int(s) for s in opt.n_grid.split(",") if s]
    outputs = dict(raw.get("outputs", {}))
    if opt.output is not None:
        outputs["report"] = opt.output
    if opt.csv is not None:
        outputs["csv"] = opt.csv
    if "report" not in outputs:
        outputs["report"] = os.path.join(os.environ.get("INFENT_OUTPUT_DIR", "."), "report.json")
    raw["outputs"] = outputs
    return exp_mod.config_from_dict(raw)


def _rate_target(cfg: exp_mod.ExperimentConfig) -> float:
    pmf_kind = cfg.pmf_spec.get("kind")
    est_kind = cfg.estimator_spec.get("kind")
    if est_kind == "data_driven" and pmf_kind == "power":
        return power_rate_exponent(float(cfg.pmf_spec["p"]))
    if est_kind == "data_driven" and pmf_kind == "exp":
        return float(cfg.estimator_spec["eps"].get("t", 0.5))
    return 0.5


def _run_trajectory(opt, fit: bool) -> int:
    cfg = _config_from_flags(opt)
    report = exp_mod.run_error_trajectory(cfg, jobs=opt.jobs)
    degenerate = sum(1 for r in report.records if r.degenerate)
    if fit:
        if report.fitted_rate is None:
            print("rate fit unavailable (need >= 3 grid points with positive mean errors)")
            return 1
        print(
            "slope={slope:.6f} r2={r2:.6f} target={target:.6f}".format(
                slope=report.fitted_rate["slope"],
                r2=report.fitted_rate["r2"],
                target=_rate_target(cfg),
            )
        )
    else:
        means = report.mean_abs_errors()
        summary = " ".join(f"err@{n}={means[n]:.6f}" for n in sorted(means))
        print(f"records={len(report.records)} degenerate={degenerate} {summary}")
    print(f"report={cfg.outputs['report']}")
    return 1 if degenerate == len(report.records) else 0


def _run_coverage(opt) -> int:
    cfg = _config_from_flags(opt)
    frac = exp_mod.coverage_experiment(cfg, opt.delta)
    print(f"coverage={frac:.6f} delta={opt.delta:g} trials={cfg.trials} n_grid={list(cfg.n_grid)}")
    return 0


def _run_bounds(opt) -> int:
    eps_grid = [float(s) for s in opt.eps_grid.split(",") if s]
    needs_mass = opt.quantity != "tv"
    if needs_mass and opt.min_mass is None:
        raise InfentError(f"--quantity {opt.quantity} needs --min-mass")
    stats = None
    if needs_mass:
        stats = SupportStats(
            min_mass=opt.min_mass, min_mass_bits=-math.log2(opt.min_mass), size=opt.size
        )

    def bound_at(eps: float) -> float:
        if opt.quantity == "tv":
            return bounds_mod.tv_hoeffding(opt.size, opt.n, eps).probability_bound
        if opt.quantity == "dd_entropy":
            return bounds_mod.data_driven_finite_support_bound(stats, opt.n, eps).probability_bound
        rev, ent, direct = bounds_mod.plugin_bounds(stats, opt.n, eps)
        return {"reverse_kl": rev, "entropy": ent, "direct_kl": direct}[opt.quantity].probability_bound

    empirical = None
    if opt.trials:
        empirical = _empirical_frequencies(opt, eps_grid)
    lines = ["eps,bound" + (",empirical_frequency" if empirical is not None else "")]
    for i, eps in enumerate(eps_grid):
        row = f"{eps!r},{bound_at(eps)!r}"
        if empirical is not None:
            row += f",{empirical[i]!r}"
        lines.append(row)
    text = "\n".join(lines) + "\n"
    if opt.output:
        with open(opt.output, "w") as fh:
            fh.write(text)
        print(f"wrote {opt.output}")
    else:
        sys.stdout.write(text)
    return 0


def _empirical_frequencies(opt, eps_grid):
    from .measures import empirical_measure, entropy, kl_divergence, total_variation
    from .pmfs import make_finite_pmf, pmf_entropy, sample

    pmf = make_finite_pmf({i: 1.0 for i in range(1, opt.size + 1)})
    h_true = pmf_entropy(pmf)
    values = np.empty(opt.trials)
    for t in range(opt.trials):
        smp = sample(pmf, opt.n, exp_mod.derive_seed(opt.seed, opt.n, t))
        emp = empirical_measure(smp)
        if opt.quantity == "tv":
            values[t] = total_variation(emp, pmf)
        elif opt.quantity == "reverse_kl":
            values[t] = kl_divergence(emp, pmf)
        elif opt.quantity == "direct_kl":
            values[t] = kl_divergence(pmf, emp)
        else:
            values[t] = abs(entropy(emp) - h_true)
    return [float(np.mean(values > eps)) for eps in eps_grid]


def _run_lecam(opt) -> int:
    from .measures import FiniteMeasure
    from .pmfs import make_finite_pmf

    if (opt.p_uniform is None) == (opt.p_weights is None):
        raise InfentError("give exactly one of --p-uniform or --p-weights")
    if opt.p_uniform is not None:
        pmf = make_finite_pmf({i: 1.0 for i in range(1, opt.p_uniform + 1)})
    else:
        pmf = make_finite_pmf({int(k): float(v) for k, v in json.loads(opt.p_weights).items()})
    base = FiniteMeasure(mass={s: pmf.mass(s) for s in pmf.support()})
    for m_raw in opt.m_list.split(","):
        m_param = int(m_raw)
        lb = bounds_mod.lecam_two_point(base, m_param)
        print(
            f"M={m_param} d={lb.divergence_bits:.6f} gap={lb.entropy_gap_bits:.6f} "
            f"risk_lb={lb.risk_lower_bound(opt.n):.6g}"
        )
    return 0


def _run_diagnose(opt) -> int:
    try:
        symbols = load_symbols(opt.input)
    except OSError as exc:
        raise _IoFailure(f"cannot read {opt.input}: {exc}") from exc
    truth = pmf_from_spec(json.loads(opt.truth))
    smp = Sample(symbols=symbols, seed=0, source=f"file:{opt.input}")
    diag = exp_mod.compute_diagnostics(smp, truth, opt.eps)
    print(json.dumps(diag.to_dict(), sort_keys=True))
    return 0


_HANDLERS = {
    "estimate": lambda opt: _run_estimate(opt),
    "trajectory": lambda opt: _run_trajectory(opt, fit=False),
    "rate": lambda opt: _run_trajectory(opt, fit=True),
    "coverage": lambda opt: _run_coverage(opt),
    "bounds": lambda opt: _run_bounds(opt),
    "lecam": lambda opt: _run_lecam(opt),
    "diagnose": lambda opt: _run_diagnose(opt),
}


def dispatch(inv: CliInvocation) -> int:
    try:
        if inv.verbosity:
            shown = {k: v for k, v in vars(inv.options).items()
                     if k not in ("subcommand", "verbose") and v is not None}
            print(f"infent {inv.subcommand} {shown}", file=sys.stderr)
        return _HANDLERS[inv.subcommand](inv.options)
    except _IoFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InfentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: invalid inline JSON: {exc.msg}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> None:
    inv = parse_invocation(sys.argv[1:] if argv is None else argv)
    sys.exit(dispatch(inv))


if __name__ == "__main__":
    main()
