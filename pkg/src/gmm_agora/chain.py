"""Scalar two-component chain: the tractable reduction of the full engine.

Every agent's belief collapses to one number w in [0, 1], the weight on the
component at -1 (means are fixed at -1 and +1, shared variance sigma^2).  A
step: pick agent i uniformly, pick a partner j (uniformly, or among the k
nearest in |w| distance when k is set), draw the answer from j's *current*
mixture, replace the farthest RAG element of i, and set w_i to the average of
the two-component posterior h_sigma over i's RAG.

States are immutable; `mc_step` is a pure function of (state, rng), which is
what the polarization estimators and the forced-path tests rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import k_nearest_gmms
from .mixture import h_sigma

__all__ = [
    "McConfig",
    "McState",
    "McRecord",
    "mc_weight_update",
    "mc_step",
    "mc_run",
    "default_initial_state",
]


@dataclass(frozen=True)
class McConfig:
    m: int
    r: int
    sigma: float
    seed: int = 0
    k: int | None = None  # None: partner uniform over all agents (incl. self)
    removal: str = "farthest"

    def __post_init__(self):
        if not (isinstance(self.m, int) and self.m >= 1):
            raise ValueError("m must be an integer >= 1")
        if not (isinstance(self.r, int) and self.r >= 1):
            raise ValueError("r must be an integer >= 1")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be positive and finite")
        if self.k is not None and not (
            isinstance(self.k, int) and 1 <= self.k <= self.m - 1
        ):
            raise ValueError("k must be None or an integer in [1, m - 1]")
        if self.removal not in ("farthest", "nearest"):
            raise ValueError('removal must be "farthest" or "nearest"')


@dataclass(frozen=True)
class McState:
    """weights: (m,) in [0, 1]; rags: (m, r); t: step counter.

    The closed interval is allowed because the dynamics saturate weights to
    exact 0.0 / 1.0 in floating point; *initial* states handed to `mc_run`
    are additionally required to be strictly interior (see
    `validate_initial`).
    """

    weights: np.ndarray
    rags: np.ndarray
    t: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        rags = np.asarray(self.rags, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-d vector")
        if rags.ndim != 2 or rags.shape[0] != w.size or rags.shape[1] < 1:
            raise ValueError("rags must have shape (m, r) with r >= 1")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(rags))):
            raise ValueError("weights and rags must be finite")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        w = w.copy()
        rags = rags.copy()
        w.setflags(write=False)
        rags.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rags", rags)

    @property
    def m(self):
        return self.weights.size

    @property
    def r(self):
        return self.rags.shape[1]


def validate_initial(state, config):
    """Initial states must match the config shape and be strictly interior."""
    if state.m != config.m or state.r != config.r:
        raise ValueError("state shape does not match config (m, r)")
    if np.any(state.weights <= 0.0) or np.any(state.weights >= 1.0):
        raise ValueError("initial weights must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class McRecord:
    i: int
    j: int
    y: float
    removed: int


def mc_weight_update(w, rag, sigma):
    """New weight: average of h_sigma(w, x) over the RAG points."""
    rag = np.asarray(rag, dtype=float)
    if rag.ndim != 1 or rag.size == 0:
        raise ValueError("rag must be a nonempty 1-d vector")
    return float(np.mean(h_sigma(w, rag, sigma)))


def mc_step(state, config, rng):
    """One chain transition; returns (new_state, record).  Draw order per
    step: acting agent, partner (one draw), component uniform, one normal."""
    m = config.m
    i = int(rng.integers(m))
    if config.k is None:
        j = int(rng.integers(m))
    else:
        neighbors = k_nearest_gmms(config.k, i, state.weights.reshape(m, 1))
        j = int(neighbors[rng.integers(neighbors.size)])
    # partner answers from its own current two-component mixture
    mean = -1.0 if rng.random() < state.weights[j] else 1.0
    y = mean + config.sigma * float(rng.standard_normal())
    dist = np.abs(state.rags[i] - y)
    slot = (
        int(np.argmax(dist)) if config.removal == "farthest" else int(np.argmin(dist))
    )
    rags = np.array(state.rags)
    rags[i, slot] = y
    weights = np.array(state.weights)
    weights[i] = mc_weight_update(weights[i], rags[i], config.sigma)
    return (
        McState(weights=weights, rags=rags, t=state.t + 1),
        McRecord(i=i, j=j, y=float(y), removed=slot),
    )


def default_initial_state(config, rng):
    """Weights uniform on (0.05, 0.95); each RAG drawn from the agent's own
    two-component mixture."""
    w = 0.05 + 0.9 * rng.random(config.m)
    means = np.where(rng.random((config.m, config.r)) < w[:, None], -1.0, 1.0)
    rags = means + config.sigma * rng.standard_normal((config.m, config.r))
    return McState(weights=w, rags=rags, t=0)


def mc_run(config, steps, initial=None, rng=None, record_every=1):
    """Run the chain; returns (trajectory, records).

    trajectory holds the initial state plus every ``record_every``-th state
    (the final state always included); records holds one McRecord per step.
    ``rng`` defaults to a fresh generator seeded from config.seed.
    """
    steps = int(steps)
    if steps < 0:
        raise ValueError("steps must be >= 0")
    record_every = int(record_every)
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    state = default_initial_state(config, rng) if initial is None else initial
    validate_initial(state, config)
    trajectory = [state]
    records = []
    for step in range(1, steps + 1):
        state, rec = mc_step(state, config, rng)
        records.append(rec)
        if step % record_every == 0 or step == steps:
            trajectory.append(state)
    return trajectory, records
