"""The four plug-in entropy estimators and their schedule constructors.

All estimators consume a :class:`~infent.pmfs.Sample` and return an
:class:`EstimatorResult` carrying the entropy estimate in bits, the estimated
measure, the support actually used, and the realized schedule values.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AbsoluteContinuityError, DomainError
from .measures import FiniteMeasure
from .pmfs import Pmf, Sample

_CELL_SCAN_CAP = 10**7


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

_ROLES = ("a_n", "h_n", "eps_n")


@dataclass(frozen=True)
class Schedule:
    """A decaying design sequence: value_at(n) = c * n**(-t) (t = 0 for constants)."""

    role: str
    kind: str  # "constant" | "power_decay"
    c: float
    t: float

    def value_at(self, n: int) -> float:
        v = self.c * float(n) ** -self.t
        if not (0.0 < v < 1.0):
            raise DomainError(f"{self.role} schedule leaves (0,1) at n={n}: value {v!r}")
        return v

    def to_spec(self) -> dict:
        if self.kind == "constant":
            return {"value": self.c}
        return {"c": self.c, "t": self.t}


def make_schedule(role: str, *, value: float | None = None,
                  c: float | None = None, t: float | None = None) -> Schedule:
    """Build a constant or power-decay schedule for role a_n, h_n, or eps_n."""
    if role not in _ROLES:
        raise DomainError(f"unknown schedule role {role!r}; expected one of {_ROLES}")
    if value is not None:
        if not (0.0 < value < 1.0):
            raise DomainError(f"constant schedule value must lie in (0,1), got {value}")
        return Schedule(role=role, kind="constant", c=float(value), t=0.0)
    if t is None:
        raise DomainError("power-decay schedule requires exponent t")
    if t < 0:
        raise DomainError(f"decay exponent must be >= 0, got {t}")
    c = 1.0 if c is None else float(c)
    if c <= 0:
        raise DomainError(f"coefficient must be positive, got {c}")
    return Schedule(role=role, kind="power_decay", c=c, t=float(t))


def schedule_from_spec(role: str, spec: dict) -> Schedule:
    if "value" in spec:
        return make_schedule(role, value=float(spec["value"]))
    return make_schedule(role, c=float(spec.get("c", 1.0)), t=float(spec["t"]))


def tau_star(p: float) -> float:
    """Optimal threshold exponent 1/(2 + 1/p) for a p-power tail."""
    if p <= 1:
        raise DomainError(f"requires p > 1, got {p}")
    return 1.0 / (2.0 + 1.0 / p)


def power_rate_exponent(p: float) -> float:
    """Error decay exponent (1 - 1/p) / (2 + 1/p) for a p-power tail."""
    if p <= 1:
        raise DomainError(f"requires p > 1, got {p}")
    return (1.0 - 1.0 / p) / (2.0 + 1.0 / p)


@dataclass(frozen=True)
class ValidityReport:
    """Checks on an (a_n, h_n) pair for the histogram estimator.

    ``o_small_ok``: 1/(a_n h_n) is o(n**tau) for the given tau < 1/2.
    ``limsup_ok``: limsup 1/(n a_n h_n) <= 1 (the weaker condition that
    suffices for distribution estimation alone).
    """

    o_small_ok: bool
    limsup_ok: bool
    decay_exponent_sum: float
    tau: float


def schedule_validity(a: Schedule, h: Schedule, tau: float) -> ValidityReport:
    if not (0.0 < tau < 0.5):
        raise DomainError(f"tau must lie in (0, 1/2), got {tau}")
    tsum = a.t + h.t
    o_small = tsum < tau
    if tsum < 1.0:
        limsup_ok = True
    elif tsum == 1.0:
        limsup_ok = 1.0 / (a.c * h.c) <= 1.0
    else:
        limsup_ok = False
    return ValidityReport(o_small_ok=o_small, limsup_ok=limsup_ok,
                          decay_exponent_sum=tsum, tau=tau)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimatorResult:
    entropy_bits: float
    measure: object  # FiniteMeasure | BgmMeasure | None when degenerate
    support_used: frozenset[int] | None
    schedule_values: dict = field(default_factory=dict)
    degenerate: bool = False


def _counts(smp: Sample) -> tuple[np.ndarray, np.ndarray, int]:
    symbols, counts = np.unique(smp.symbols, return_counts=True)
    return symbols, counts, int(smp.symbols.size)


# ---------------------------------------------------------------------------
# Classical plug-in
# ---------------------------------------------------------------------------

def plugin_entropy(smp: Sample) -> EstimatorResult:
    """Entropy of the empirical measure."""
    symbols, counts, n = _counts(smp)
    masses = counts / n
    h = float(-np.sum(masses * np.log2(masses)))
    measure = FiniteMeasure(
        mass={int(s): float(m) for s, m in zip(symbols, masses)}, n_source=n
    )
    return EstimatorResult(
        entropy_bits=h,
        measure=measure,
        support_used=frozenset(int(s) for s in symbols),
    )


# ---------------------------------------------------------------------------
# Mixture with a finite reference measure
# ---------------------------------------------------------------------------

def barron_mixture(smp: Sample, v: Pmf, a_n: float) -> EstimatorResult:
    """Convex mixture (1 - a_n) * empirical + a_n * v on the support of v.

    Requires v with finite support and every sample symbol inside it, so the
    mixture dominates the sampled law.  a_n = 1 degenerates to the pure prior.
    """
    if not v.has_finite_support:
        raise DomainError("mixture reference must have finite support")
    if not (0.0 < a_n <= 1.0):
        raise DomainError(f"a_n must lie in (0, 1], got {a_n}")
    v_syms = np.array(v.support(), dtype=np.int64)
    symbols, counts, n = _counts(smp)
    pos = np.searchsorted(v_syms, symbols)
    bad = (pos >= v_syms.size) | (v_syms[np.minimum(pos, v_syms.size - 1)] != symbols)
    if np.any(bad):
        offender = int(symbols[np.nonzero(bad)[0][0]])
        raise AbsoluteContinuityError(
            f"sample symbol {offender} lies outside the reference support"
        )
    emp = np.zeros(v_syms.size, dtype=np.float64)
    emp[pos] = counts / n
    prior = v.mass_array(v_syms)
    mix = (1.0 - a_n) * emp + a_n * prior
    h = float(-np.sum(mix * np.log2(mix)))
    measure = FiniteMeasure(
        mass={int(s): float(m) for s, m in zip(v_syms, mix)}, n_source=n
    )
    return EstimatorResult(
        entropy_bits=h,
        measure=measure,
        support_used=frozenset(int(s) for s in v_syms),
        schedule_values={"a_n": float(a_n)},
    )


# ---------------------------------------------------------------------------
# Histogram estimator on a reference-balanced partition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """Ordered partition of {1, 2, ...} into contiguous cells.

    Cell i covers [starts[i], starts[i+1]) and the final cell is the tail
    segment [starts[-1], infinity).  Every cell carries reference mass
    >= the h_n it was built with, and the cell count is <= 1/h_n.
    """

    starts: tuple[int, ...]
    masses: tuple[float, ...]
    reference: Pmf

    @property
    def size(self) -> int:
        return len(self.starts)

    def cell_index(self, x: int) -> int:
        return bisect.bisect_right(self.starts, x) - 1

    def cell_indices(self, xs: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.starts), xs, side="right") - 1


def build_bgm_partition(v: Pmf, h_n: float) -> Partition:
    """Greedy maximal-cardinality partition with v-mass >= h_n per cell.

    Symbols are scanned in increasing order; a cell closes as soon as its
    mass reaches h_n, provided the remaining tail can still support one more
    cell.  Otherwise the tail segment absorbs the rest.  For reference
    measures that are non-increasing in the symbol index (both built-in tail
    families) this attains the maximal cardinality; for arbitrary tables it
    is a deterministic heuristic with the same mass guarantees.
    """
    if not (0.0 < h_n < 1.0):
        raise DomainError(f"h_n must lie in (0, 1), got {h_n}")
    starts = [1]
    masses: list[float] = []
    run = 0.0
    x = 1
    while True:
        run += v.mass(x)
        remaining = v.tail_mass(x + 1)
        if run >= h_n:
            if remaining >= h_n:
                masses.append(run)
                starts.append(x + 1)
                run = 0.0
            else:
                masses.append(run + remaining)
                return Partition(starts=tuple(starts), masses=tuple(masses), reference=v)
        x += 1
        if x > _CELL_SCAN_CAP:
            raise DomainError("partition scan failed to terminate; h_n too small")


@dataclass(frozen=True)
class BgmMeasure:
    """Histogram-smoothed measure: f(x) = f_v(x) * coeff(cell of x).

    coeff_i = (1 - a_n) * emp(cell_i) / v(cell_i) + a_n, so within each cell
    the mass profile is proportional to the reference measure.
    """

    partition: Partition
    coefficients: tuple[float, ...]

    def mass(self, x: int) -> float:
        if x < 1:
            return 0.0
        return self.partition.reference.mass(x) * self.coefficients[self.partition.cell_index(x)]

    def mass_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs)
        coeff = np.asarray(self.coefficients)[self.partition.cell_indices(xs)]
        return self.partition.reference.mass_array(xs) * coeff

    def total_mass(self) -> float:
        return math.fsum(c * m for c, m in zip(self.coefficients, self.partition.masses))

    def entropy_bits(self) -> float:
        """Exact entropy by per-cell decomposition.

        Within cell i the mass is c_i * f_v, so the cell contributes
        -w_i log2 c_i + c_i * hv_i with w_i = c_i v(A_i) and hv_i the
        reference partial entropy over the cell; the tail cell's hv is
        analytic.
        """
        part = self.partition
        v = part.reference
        acc = 0.0
        for i, (c, vm) in enumerate(zip(self.coefficients, part.masses)):
            lo = part.starts[i]
            if i + 1 < part.size:
                xs = np.arange(lo, part.starts[i + 1], dtype=np.int64)
                fv = v.mass_array(xs)
                fv = fv[fv > 0.0]
                hv = float(-np.sum(fv * np.log2(fv))) if fv.size else 0.0
            else:
                hv = v.entropy_tail_sum(lo)
            if c > 0.0:
                acc += -c * vm * math.log2(c) + c * hv
        return acc


def bgm_estimate(smp: Sample, v: Pmf, a_n: float, h_n: float) -> EstimatorResult:
    """Histogram estimate on the v-balanced partition, then entropy in closed form."""
    if not (0.0 < a_n <= 1.0):
        raise DomainError(f"a_n must lie in (0, 1], got {a_n}")
    partition = build_bgm_partition(v, h_n)
    if v.has_finite_support:
        v_syms = set(v.support())
        outside = [int(s) for s in np.unique(smp.symbols) if int(s) not in v_syms]
        if outside:
            raise AbsoluteContinuityError(
                f"sample symbol {outside[0]} lies outside the reference support"
            )
    n = int(smp.symbols.size)
    cell_idx = partition.cell_indices(smp.symbols)
    cell_emp = np.bincount(cell_idx, minlength=partition.size) / n
    coeffs = tuple(
        (1.0 - a_n) * float(e) / m + a_n for e, m in zip(cell_emp, partition.masses)
    )
    measure = BgmMeasure(partition=partition, coefficients=coeffs)
    support = frozenset(v.support()) if v.has_finite_support else None
    return EstimatorResult(
        entropy_bits=measure.entropy_bits(),
        measure=measure,
        support_used=support,
        schedule_values={"a_n": float(a_n), "h_n": float(h_n)},
    )


# ---------------------------------------------------------------------------
# Data-driven thresholded plug-in
# ---------------------------------------------------------------------------

def data_driven_estimate(smp: Sample, eps_n: float) -> EstimatorResult:
    """Conditional plug-in on the set of symbols with empirical mass >= eps_n.

    An empty threshold set flags the result degenerate with entropy 0 instead
    of raising, keeping Monte Carlo loops total.
    """
    if not (0.0 < eps_n < 1.0):
        raise DomainError(f"eps_n must lie in (0, 1), got {eps_n}")
    symbols, counts, n = _counts(smp)
    masses = counts / n
    keep = masses >= eps_n
    if not np.any(keep):
        return EstimatorResult(
            entropy_bits=0.0,
            measure=None,
            support_used=frozenset(),
            schedule_values={"eps_n": float(eps_n)},
            degenerate=True,
        )
    head = masses[keep]
    cond = head / head.sum()
    h = float(-np.sum(cond * np.log2(cond)))
    gamma = symbols[keep]
    measure = FiniteMeasure(
        mass={int(s): float(m) for s, m in zip(gamma, cond)}, n_source=n
    )
    return EstimatorResult(
        entropy_bits=h,
        measure=measure,
        support_used=frozenset(int(s) for s in gamma),
        schedule_values={"eps_n": float(eps_n)},
    )
