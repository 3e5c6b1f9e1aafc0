"""Polarization lower bounds for the scalar chain, plus Monte Carlo checks.

All bounds are computed and stored in log space; probabilities this small
(down to exp(-20000)) have no float64 representation, so `BoundResult.value`
is the saturating exp of the log and the log field is the source of truth.

Conventions pinned by the reference tables:
  s = c * m * ln m, kept unrounded (natural log);
  log eta = log P(|N(0, sigma^2)| <= rho), via erf/erfc in whichever branch
  keeps precision;
  level-l event bound:   log p_i  = s log eta - s exp(-l log C);
  non-degenerate-start:  log p_ii = log p_i + log(1 - m^(1 - c))  (c > 1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .chain import default_initial_state, mc_step, validate_initial
from .metrics import PolarizationConstants, is_level_polarized

__all__ = [
    "constants",
    "BoundQuery",
    "BoundResult",
    "theorem2_bounds",
    "lemma_behave_log_bound",
    "lemma_pol_log_bound",
    "theorem1_log_bound",
    "generate_tables",
    "reference_table",
    "write_bounds_csv",
    "McEstimate",
    "monte_carlo_polarization",
    "TABLE_SPECS",
]


def _log_gauss_interval(a):
    """log P(|N(0,1)| <= a) = log erf(a / sqrt 2), branch-stable for large a."""
    if not (a > 0.0 and math.isfinite(a)):
        raise ValueError("interval half-width must be positive and finite")
    z = a / math.sqrt(2.0)
    tail = math.erfc(z)
    if tail < 0.5:
        return math.log1p(-tail)
    return math.log(math.erf(z))


def _log_eta(rho, sigma):
    return _log_gauss_interval(rho / sigma)


def _log_xi(rho, sigma, r):
    return _log_gauss_interval(rho / (2.0 * r * sigma))


def _log_C(rho, sigma):
    return 2.0 * (1.0 - rho) / sigma**2


def _log_B(rho, sigma):
    return 2.0 * (1.0 + rho) / sigma**2


def constants(rho, sigma, r):
    """All derived chain constants at (rho, sigma, r); rho strictly in
    (0, 1/2).  The table generators accept rho = 1/2 and bypass this."""
    rho = float(rho)
    sigma = float(sigma)
    r = int(r)
    if not (0.0 < rho < 0.5):
        raise ValueError("rho must lie strictly in (0, 1/2)")
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValueError("sigma must be positive and finite")
    if r < 1:
        raise ValueError("r must be >= 1")
    log_eta = _log_eta(rho, sigma)
    log_xi = _log_xi(rho, sigma, r)
    return PolarizationConstants(
        rho=rho,
        sigma=sigma,
        r=r,
        eta=math.exp(log_eta),
        xi=math.exp(log_xi),
        log_eta=log_eta,
        log_xi=log_xi,
        log_C=_log_C(rho, sigma),
        log_B=_log_B(rho, sigma),
    )


@dataclass(frozen=True)
class BoundQuery:
    """Inputs of the long-run polarization bound.  rho = 1/2 is allowed here
    (the reference tables use it); the chain constants object itself
    requires rho < 1/2."""

    m: int
    r: int
    rho: float
    sigma: float
    c: float
    ell: int

    def __post_init__(self):
        if not (isinstance(self.m, int) and self.m >= 2):
            raise ValueError("m must be an integer >= 2")
        if not (isinstance(self.r, int) and self.r >= 1):
            raise ValueError("r must be an integer >= 1")
        if not (0.0 < self.rho <= 0.5):
            raise ValueError("rho must lie in (0, 1/2]")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be positive and finite")
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ValueError("c must be positive and finite")
        if not (isinstance(self.ell, int) and self.ell >= 1):
            raise ValueError("ell must be an integer >= 1")


@dataclass(frozen=True)
class BoundResult:
    """A probability lower bound as (log_value, value, provenance).

    value == exp(log_value) up to float saturation (exp underflows to 0.0 for
    log values below about -745).  log_value == -inf marks a vacuous bound.
    """

    log_value: float
    value: float
    provenance: str

    def __post_init__(self):
        if self.log_value > 0.0:
            raise ValueError("log of a probability bound must be <= 0")
        if not (0.0 <= self.value <= 1.0):
            raise ValueError("a probability bound must lie in [0, 1]")


def _result(log_value, provenance):
    return BoundResult(
        log_value=log_value, value=math.exp(log_value), provenance=provenance
    )


def theorem2_bounds(query):
    """Probability the chain is level-l polarized after s = c m ln m steps.

    Returns (part_i, part_ii): part_i conditions on no weight starting inside
    I_l; part_ii multiplies in the probability (1 - m^(1-c)) that a uniformly
    placed start is non-degenerate, and is None for c <= 1 where that factor
    is vacuous.
    """
    q = query
    s = q.c * q.m * math.log(q.m)
    log_eta = _log_eta(q.rho, q.sigma)
    log_c_const = _log_C(q.rho, q.sigma)
    log_part_i = s * log_eta - s * math.exp(-q.ell * log_c_const)
    part_i = _result(
        log_part_i,
        f"level-{q.ell} polarization after s = c m ln m steps, "
        "conditional on an interior start",
    )
    if q.c <= 1.0:
        return part_i, None
    log_start = math.log1p(-math.exp((1.0 - q.c) * math.log(q.m)))
    part_ii = _result(
        log_part_i + log_start,
        f"level-{q.ell} polarization after s = c m ln m steps "
        "from a uniform random start",
    )
    return part_i, part_ii


def _validate_lemma_args(m, r, rho, sigma):
    if not (isinstance(m, int) and m >= 1):
        raise ValueError("m must be an integer >= 1")
    if not (isinstance(r, int) and r >= 1):
        raise ValueError("r must be an integer >= 1")
    if not (0.0 < rho <= 0.5):
        raise ValueError("rho must lie in (0, 1/2]")
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValueError("sigma must be positive and finite")


def lemma_behave_log_bound(m, r, rho, sigma):
    """Probability all m RAGs become well behaved within m r steps.

    log bound = log m! - m r log m + r m (log((m/2 - 1)/m) + log xi).
    Vacuous (log -inf) for m <= 2 where the (m/2 - 1) factor dies.
    """
    _validate_lemma_args(m, r, rho, sigma)
    if m <= 2:
        return BoundResult(
            log_value=-math.inf,
            value=0.0,
            provenance=f"vacuous for m = {m}: the (m/2 - 1)/m factor is <= 0",
        )
    log_xi = _log_xi(rho, sigma, r)
    log_value = (
        math.lgamma(m + 1)
        - m * r * math.log(m)
        + r * m * (math.log(m / 2.0 - 1.0) - math.log(m) + log_xi)
    )
    return _result(log_value, f"all {m} RAGs well behaved within m r = {m * r} steps")


def lemma_pol_log_bound(m, r, rho, sigma):
    """Probability a well-behaved system reaches level-1 polarization within
    (4r + 2) m further steps.

    With q = 4r + 2 and N = q m:
    log bound = log(N! / (q!)^m) - N log m
                + N (log(floor(m/2)/m) + log eta - log(1 + C B^r)).
    """
    _validate_lemma_args(m, r, rho, sigma)
    if m == 1:
        return BoundResult(
            log_value=-math.inf,
            value=0.0,
            provenance="vacuous for m = 1: floor(m/2) = 0",
        )
    q = 4 * r + 2
    big_n = q * m
    log_multinomial = (
        math.lgamma(big_n + 1) - m * math.lgamma(q + 1) - big_n * math.log(m)
    )
    log_eta = _log_eta(rho, sigma)
    log_one_plus_cbr = float(
        np.logaddexp(0.0, _log_C(rho, sigma) + r * _log_B(rho, sigma))
    )
    log_value = log_multinomial + big_n * (
        math.log(m // 2) - math.log(m) + log_eta - log_one_plus_cbr
    )
    return _result(
        log_value,
        f"well-behaved system level-1 polarized within (4r + 2) m = {big_n} steps",
    )


def theorem1_log_bound(m, r, rho, sigma):
    """Probability of level-1 polarization within (5r + 2) m steps of any
    start: product (log sum) of the two lemma bounds."""
    behave = lemma_behave_log_bound(m, r, rho, sigma)
    pol = lemma_pol_log_bound(m, r, rho, sigma)
    log_value = behave.log_value + pol.log_value
    horizon = (5 * r + 2) * m
    if not math.isfinite(log_value):
        return BoundResult(
            log_value=-math.inf,
            value=0.0,
            provenance=f"vacuous at m = {m}: a lemma factor is zero",
        )
    return _result(
        log_value, f"level-1 polarization within (5r + 2) m = {horizon} steps"
    )


# Reproduction tables: (c, sigmas); all use m = 30, rho = 1/2, ell = 1..5.
TABLE_SPECS = {
    1: {"c": 10.0, "m": 30, "rho": 0.5, "sigmas": (0.3, 0.2, 0.1, 0.05)},
    2: {"c": 2.0, "m": 30, "rho": 0.5, "sigmas": (0.4, 0.3, 0.2, 0.1, 0.05)},
    3: {"c": 2.0, "m": 30, "rho": 0.5, "sigmas": (0.4, 0.3, 0.2, 0.1, 0.05)},
}
_TABLE_ELLS = (1, 2, 3, 4, 5)


def generate_tables(c, m, rho, sigmas, ells, r=1):
    """Rows of the bound table: one dict per (sigma, ell), sigma outer."""
    rows = []
    for sigma in sigmas:
        for ell in ells:
            query = BoundQuery(m=int(m), r=int(r), rho=float(rho), sigma=float(sigma), c=float(c), ell=int(ell))
            part_i, part_ii = theorem2_bounds(query)
            rows.append(
                {
                    "sigma": float(sigma),
                    "ell": int(ell),
                    "c": float(c),
                    "m": int(m),
                    "rho": float(rho),
                    "bound_part_i": part_i.value,
                    "bound_part_ii": part_ii.value if part_ii else "",
                    "log_part_i": part_i.log_value,
                    "log_part_ii": part_ii.log_value if part_ii else "",
                }
            )
    return rows


def reference_table(index):
    """Rows of reference table 1, 2, or 3 (tables 2 and 3 share constants
    and differ only in which bound part is displayed; the rows carry both)."""
    if index not in TABLE_SPECS:
        raise ValueError("table index must be 1, 2, or 3")
    spec = TABLE_SPECS[index]
    return generate_tables(spec["c"], spec["m"], spec["rho"], spec["sigmas"], _TABLE_ELLS)


BOUNDS_CSV_COLUMNS = [
    "sigma",
    "ell",
    "c",
    "m",
    "rho",
    "bound_part_i",
    "bound_part_ii",
    "log_part_i",
    "log_part_ii",
]


def write_bounds_csv(rows, fileobj):
    writer = csv.DictWriter(fileobj, fieldnames=BOUNDS_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: row[key] for key in BOUNDS_CSV_COLUMNS})


@dataclass(frozen=True)
class McEstimate:
    successes: int
    trials: int
    frequency: float
    ci_low: float
    ci_high: float


def _wilson(successes, trials, z=1.96):
    p_hat = successes / trials
    denom = 1.0 + z**2 / trials
    center = (p_hat + z**2 / (2.0 * trials)) / denom
    half = (
        z
        * math.sqrt(p_hat * (1.0 - p_hat) / trials + z**2 / (4.0 * trials**2))
        / denom
    )
    return max(0.0, center - half), min(1.0, center + half)


def monte_carlo_polarization(
    config, chain_constants, ell, horizon, trials, initial=None
):
    """Empirical frequency of level-l polarization at step ``horizon``.

    Each trial runs an independent chain whose generator is spawned from
    (config.seed, trial).  ``initial`` is None (fresh default start per
    trial), a fixed McState, or a callable trial -> McState.  Returns an
    McEstimate with a 95% Wilson interval.
    """
    horizon = int(horizon)
    trials = int(trials)
    if horizon < 0 or trials < 1:
        raise ValueError("need horizon >= 0 and trials >= 1")
    successes = 0
    for trial in range(trials):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(config.seed, spawn_key=(trial,)))
        )
        if initial is None:
            state = default_initial_state(config, rng)
        elif callable(initial):
            state = initial(trial)
        else:
            state = initial
        validate_initial(state, config)
        for _ in range(horizon):
            state, _rec = mc_step(state, config, rng)
        if is_level_polarized(state, ell, chain_constants):
            successes += 1
    freq = successes / trials
    low, high = _wilson(successes, trials)
    return McEstimate(
        successes=successes, trials=trials, frequency=freq, ci_low=low, ci_high=high
    )
