"""Observables on belief states: silos, stability, polarization, convergence.

A *silo* is the argmax component of an agent's weight vector (ties break to
the lowest index).  A silo system over a time window is *stable* when no agent
changes silo and the number of occupied silos is constant, *unstable* when the
count is constant but membership churns, and *neither* otherwise.

Level-l polarization for the two-component scalar chain follows the interval
family I_l = (1/(1 + C^l), 1/(1 + C^(-l))) with log C = 2(1 - rho)/sigma^2.
Because the chain saturates weights to exact 0.0 / 1.0 in floating point, the
membership tests here are boundary-inclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "silo",
    "silo_trace",
    "stability",
    "silo_count",
    "classify_silo_system",
    "PolarizationConstants",
    "interval_I",
    "is_level_polarized",
    "well_behaved",
    "convergence_time",
]


def silo(weights):
    """Argmax component of one weight vector; ties go to the lowest index."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-d vector")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    return int(np.argmax(w))


def silo_trace(weight_snapshots):
    """Silo labels for a (T+1, m, n) stack of weight snapshots -> (T+1, m)."""
    w = np.asarray(weight_snapshots, dtype=float)
    if w.ndim != 3:
        raise ValueError("weight snapshots must have shape (T+1, m, n)")
    return np.argmax(w, axis=2)


def stability(prev_silos, cur_silos):
    """Fraction of agents whose silo changed between two label vectors."""
    a = np.asarray(prev_silos)
    b = np.asarray(cur_silos)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("silo label vectors must be 1-d and the same length")
    return float(np.mean(a != b))


def silo_count(silos):
    """Number of distinct silos occupied."""
    a = np.asarray(silos)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("silo labels must be a nonempty 1-d vector")
    return int(np.unique(a).size)


def classify_silo_system(trace, t0, horizon):
    """Classify the window [t0, t0 + horizon] of a (time, m) silo trace.

    Returns "stable", "unstable", or "neither".  A single-row window (horizon
    == 0) is trivially stable.
    """
    tr = np.asarray(trace)
    if tr.ndim != 2:
        raise ValueError("trace must have shape (time, m)")
    t0 = int(t0)
    horizon = int(horizon)
    if t0 < 0 or horizon < 0 or t0 + horizon >= tr.shape[0]:
        raise ValueError("window [t0, t0 + horizon] out of range")
    window = tr[t0 : t0 + horizon + 1]
    counts = np.array([silo_count(row) for row in window])
    if not np.all(counts == counts[0]):
        return "neither"
    if np.any(window[1:] != window[:-1]):
        return "unstable"
    return "stable"


@dataclass(frozen=True)
class PolarizationConstants:
    """Derived constants of the scalar chain at parameters (rho, sigma, r).

    eta  = P(|N(0, sigma^2)| <= rho)         (one query lands in mean +- rho)
    xi   = P(|N(0, sigma^2)| <= rho / (2r))  (the same, within rho/(2r))
    log C = 2 (1 - rho) / sigma^2, log B = 2 (1 + rho) / sigma^2.

    C and B themselves can overflow float64 at small sigma; the log fields are
    the source of truth and the properties saturate to inf.  Built by
    ``bounds.constants``; the constructor only checks internal consistency.
    """

    rho: float
    sigma: float
    r: int
    eta: float
    xi: float
    log_eta: float
    log_xi: float
    log_C: float
    log_B: float

    def __post_init__(self):
        if not (0.0 < self.rho < 0.5):
            raise ValueError("rho must lie in (0, 1/2)")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be positive and finite")
        if not (isinstance(self.r, int) and self.r >= 1):
            raise ValueError("r must be an integer >= 1")
        if not (0.0 < self.eta < 1.0 and 0.0 < self.xi < 1.0):
            raise ValueError("eta and xi must lie in (0, 1)")
        if self.xi > self.eta:
            raise ValueError("xi cannot exceed eta")
        if not (self.log_eta <= 0.0 and self.log_xi <= 0.0):
            raise ValueError("log_eta and log_xi must be <= 0")
        if not (self.log_C > 0.0 and self.log_B > self.log_C):
            raise ValueError("need 0 < log C < log B")

    @property
    def C(self):
        try:
            return math.exp(self.log_C)
        except OverflowError:
            return math.inf

    @property
    def B(self):
        try:
            return math.exp(self.log_B)
        except OverflowError:
            return math.inf


def interval_I(ell, constants):
    """Endpoints (1/(1 + C^l), 1/(1 + C^(-l))) of the exclusion interval I_l.

    Computed in log space; at large l * log C the endpoints round to exactly
    0.0 and 1.0, which is also where the chain itself saturates.
    """
    ell = int(ell)
    if ell < 1:
        raise ValueError("ell must be >= 1")
    t = ell * constants.log_C
    low = math.exp(-np.logaddexp(0.0, t))
    high = math.exp(-np.logaddexp(0.0, -t))
    return (low, high)


def is_level_polarized(state, ell, constants):
    """Level-l polarization: every weight outside I_l, and every agent's RAG
    concentrated around the mean its weight has (essentially) selected.

    ``state`` needs ``weights`` (m,) and ``rags`` (m, r) attributes.  Weights
    at or below the lower endpoint put all mass on the +1 component, so their
    RAG must lie in 1 +- rho; weights at or above the upper endpoint must have
    RAG in -1 +- rho.  Comparisons are closed on both sides.
    """
    low, high = interval_I(ell, constants)
    w = np.asarray(state.weights, dtype=float)
    rags = np.asarray(state.rags, dtype=float)
    below = w <= low
    above = w >= high
    if not np.all(below | above):
        return False
    rho = constants.rho
    near_plus = np.abs(rags - 1.0) <= rho
    near_minus = np.abs(rags + 1.0) <= rho
    if below.any() and not np.all(near_plus[below]):
        return False
    if above.any() and not np.all(near_minus[above]):
        return False
    return True


def well_behaved(state, rho):
    """True when every RAG point of every agent lies in (-1 +- rho) or
    (1 +- rho)."""
    rho = float(rho)
    if not (0.0 < rho < 1.0):
        raise ValueError("rho must lie in (0, 1)")
    rags = np.asarray(state.rags, dtype=float)
    return bool(np.all((np.abs(rags - 1.0) <= rho) | (np.abs(rags + 1.0) <= rho)))


def convergence_time(trace):
    """First time from which a silo trace stays unified in one silo.

    ``trace`` is a (time, m) label array for a single replicate.  Returns 0
    when every row is already unified, None when the final row is not, and
    otherwise 1 + the last time with more than one occupied silo.
    """
    tr = np.asarray(trace)
    if tr.ndim != 2 or tr.shape[0] == 0:
        raise ValueError("trace must have shape (time, m) with time >= 1")
    unified = np.all(tr == tr[:, :1], axis=1)
    if not unified[-1]:
        return None
    bad = np.nonzero(~unified)[0]
    return 0 if bad.size == 0 else int(bad[-1] + 1)
