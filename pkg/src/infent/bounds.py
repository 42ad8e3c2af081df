"""Closed-form finite-sample deviation bounds, confidence widths, and the
two-point minimax lower-bound construction.

Bounds are returned verbatim (they may exceed 1, in which case they are
vacuous); "log e" constants follow the bits convention as log2(e), while
exponents stated in nats stay in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .measures import FiniteMeasure, SupportStats
from .pmfs import LOG2E

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class DeviationBound:
    epsilon: float
    probability_bound: float
    formula_id: str


def _exp_bound(log_factor_bits: float, exponent_nats: float) -> float:
    """exp(log_factor_bits * ln2 + exponent_nats), overflow-safe."""
    e = log_factor_bits * _LN2 + exponent_nats
    if e > 700.0:
        return math.inf
    return math.exp(e)


def tv_hoeffding(k: int, n: int, eps: float) -> DeviationBound:
    """P(V(emp, mu) > eps) <= 2**(k+1) * exp(-2 n eps**2) for |supp(mu)| = k."""
    if k < 1 or n < 1:
        raise DomainError("k and n must be >= 1")
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return DeviationBound(eps, _exp_bound(k + 1, -2.0 * n * eps * eps), "tv_hoeffding")


def tv_expected_bound(k: int, n: int) -> float:
    """Companion bound E[V(emp, mu)] <= 2 * sqrt((k+1) ln2 / n)."""
    if k < 1 or n < 1:
        raise DomainError("k and n must be >= 1")
    return 2.0 * math.sqrt((k + 1) * _LN2 / n)


def plugin_bounds(stats: SupportStats, n: int, eps: float
                  ) -> tuple[DeviationBound, DeviationBound, DeviationBound]:
    """Deviation bounds for the plug-in estimator on a finite-support law.

    Returns (reverse_kl, entropy, direct_kl) bounds:
      P(D(emp||mu) > eps)   <= 2**(k+1) exp(-2 m^2 n eps^2 / log2(e)^2)
      P(|dH| > eps)         <= 2**(k+1) exp(-2 n eps^2 / (M + log2(e)/m)^2)
      P(D(mu||emp) > eps)   <= 2**(k+1) [exp(-2 n eps^2 / (log2(e)^2 (1/m+1)^2))
                                         + exp(-n m^2)]
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    m, big_m, k = stats.min_mass, stats.min_mass_bits, stats.size
    reverse = _exp_bound(k + 1, -2.0 * m * m * n * eps * eps / LOG2E**2)
    entropy_b = _exp_bound(k + 1, -2.0 * n * eps * eps / (big_m + LOG2E / m) ** 2)
    direct = _exp_bound(k + 1, -2.0 * n * eps * eps / (LOG2E**2 * (1.0 / m + 1.0) ** 2)) \
        + _exp_bound(k + 1, -n * m * m)
    return (
        DeviationBound(eps, reverse, "plugin_reverse_kl"),
        DeviationBound(eps, entropy_b, "plugin_entropy"),
        DeviationBound(eps, direct, "plugin_direct_kl"),
    )


def plugin_confidence_halfwidth(stats: SupportStats, n: int, delta: float) -> float:
    """Half-width (M + log2(e)/m) sqrt(ln(2**(k+1)/delta) / (2n)); coverage >= 1 - delta."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0,1), got {delta}")
    m, big_m, k = stats.min_mass, stats.min_mass_bits, stats.size
    log_term = (k + 1) * _LN2 - math.log(delta)
    return (big_m + LOG2E / m) * math.sqrt(log_term / (2.0 * n))


def data_driven_finite_support_bound(stats: SupportStats, n: int, eps: float) -> DeviationBound:
    """Entropy deviation bound for the thresholded estimator on finite support.

    2**(k+1) [exp(-2 n eps^2 / (M + log2(e)/m)^2) + exp(-n m^2 / 4)]; the
    second term accounts for support detection.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    m, big_m, k = stats.min_mass, stats.min_mass_bits, stats.size
    val = _exp_bound(k + 1, -2.0 * n * eps * eps / (big_m + LOG2E / m) ** 2) \
        + _exp_bound(k + 1, -n * m * m / 4.0)
    return DeviationBound(eps, val, "data_driven_entropy")


# ---------------------------------------------------------------------------
# Two-point minimax lower bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeCamBound:
    """Perturbed measure Q_M against a base P, with the induced risk lower bound.

    Q_M removes mass p1/sqrt(M) from P's first symbol and spreads it evenly
    over the other original symbols plus a block of 2**M fresh symbols, so
    the divergence d = D(P||Q_M) vanishes while the entropy gap
    H(Q_M) - H(P) grows like p1 * sqrt(M).  The tail block is kept in closed
    form (count and per-symbol log-mass); ``materialize`` expands it to an
    explicit FiniteMeasure when small enough.
    """

    divergence_bits: float
    entropy_gap_bits: float
    head: dict
    tail_count_log2: int
    tail_log2_mass: float
    tail_total_mass: float
    base_symbols: tuple[int, ...]

    def risk_lower_bound(self, n: int) -> float:
        """n -> gap^2/4 * exp(-n * d) with d converted to nats."""
        return 0.25 * self.entropy_gap_bits**2 * math.exp(-n * self.divergence_bits * _LN2)

    def total_mass(self) -> float:
        return math.fsum(self.head.values()) + self.tail_total_mass

    def materialize(self, limit: int = 1 << 21) -> FiniteMeasure:
        count = 1 << self.tail_count_log2
        if count > limit:
            raise DomainError(
                f"tail block has 2**{self.tail_count_log2} symbols; too large to materialize"
            )
        s = 2.0**self.tail_log2_mass
        first_new = max(self.base_symbols) + 1
        mass = dict(self.head)
        for j in range(count):
            mass[first_new + j] = s
        return FiniteMeasure(mass=mass)


def lecam_two_point(p_measure: FiniteMeasure, m_param: int) -> LeCamBound:
    """Build the two-point pair (P, Q_M) and its risk lower bound.

    The returned risk function n -> gap^2/4 * exp(-n d ln2) lower-bounds the
    minimax mean-square error of any entropy estimator at sample size n; its
    supremum over M is unbounded.
    """
    if m_param < 2:
        raise DomainError(f"M must be >= 2, got {m_param}")
    symbols = p_measure.support()
    big_l = len(symbols)
    first = symbols[0]
    p1 = p_measure.mass[first]
    removed = p1 / math.sqrt(m_param)

    # log2 of the number of slots receiving an equal share of the removed mass
    log2_slots = m_param + math.log1p((big_l - 1) * 2.0 ** -min(m_param, 1074)) / _LN2
    s_log2 = math.log2(removed) - log2_slots
    s = 2.0**s_log2  # underflows to 0.0 for large M, which is exact enough pointwise

    head = {first: p1 * (1.0 - 1.0 / math.sqrt(m_param))}
    for sym in symbols[1:]:
        head[sym] = p_measure.mass[sym] + s
    tail_total = removed - (big_l - 1) * s

    d = p1 * math.log2(p1 / head[first])
    for sym in symbols[1:]:
        pi = p_measure.mass[sym]
        d += pi * math.log2(pi / head[sym])

    h_p = -math.fsum(v * math.log2(v) for v in p_measure.mass.values())
    h_q_head = -math.fsum(v * math.log2(v) for v in head.values() if v > 0.0)
    h_q = h_q_head - tail_total * s_log2
    return LeCamBound(
        divergence_bits=d,
        entropy_gap_bits=h_q - h_p,
        head=head,
        tail_count_log2=int(m_param),
        tail_log2_mass=s_log2,
        tail_total_mass=tail_total,
        base_symbols=symbols,
    )
