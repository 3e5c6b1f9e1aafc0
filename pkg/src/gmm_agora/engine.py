"""Multi-agent interaction engine.

m agents each hold a private mixture belief (weights over n shared component
means, plus per-agent covariances in variable-covariance mode) and a retrieval
bag (RAG) of r points.  One interaction by agent i:

  1. pick a partner j: itself with probability p, otherwise uniform among its
     k nearest peers in weight space;
  2. query: draw x from agent i's own current mixture and send it to j;
  3. answer: j pseudo-updates a copy of its RAG (x replaces the element
     farthest from x), runs one M-step on that copy, and replies with one
     sample y from the pseudo-updated mixture; j's stored state is untouched;
  4. update: y replaces the element of i's RAG farthest from y, then i
     re-fits its weights (and covariances, in variable mode) by one M-step.

Randomness: every agent owns an independent stream spawned from the base seed
and its index, so with p = 1 agents evolve independently of how many other
agents exist; sweep-order permutations draw from a separate stream keyed by m.

Agents carry their weights in log space and update them with a lightly
regularized M-step (WEIGHT_PSEUDOCOUNT added to each component's
responsibility total, and in variable-covariance mode COV_RIDGE * I added to
each updated covariance).  Iterating the plain M-step multiplies each weight
by a density ratio, so with well separated components the weights of
unobserved components decay geometrically; in linear float they underflow to
exact zeros, which the M-step can never regrow (responsibilities are
proportional to the prior weight), freezing the system in whatever silo split
it had when the underflow hit.  The pseudocount floors every weight near
WEIGHT_PSEUDOCOUNT / r, the convention of deployed EM implementations, so an
agent that stops hearing about a component retains a trace belief that later
evidence can rebuild in a handful of interactions; that is what lets isolated
holdout agents ever rejoin the majority and the system reach consensus.
Snapshots, partner distances, and sampling all use exponentiated weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mixture import (
    MixtureParams,
    sample_from_gmm,
    update_log_weights,
    update_log_weights_and_covariances,
    volume_rescale,
)

__all__ = [
    "SimulationConfig",
    "AgentState",
    "SystemState",
    "InteractionRecord",
    "Trajectory",
    "agent_streams",
    "init_weights",
    "init_rags",
    "k_nearest_gmms",
    "choose_partner",
    "rag_replace",
    "interaction_step",
    "sweep",
    "run_simulation",
    "WEIGHT_PSEUDOCOUNT",
    "COV_RIDGE",
]

# Responsibility-total pseudocount for the agents' weight M-step: ten float64
# epsilons, the floor deployed EM implementations put on component masses.
# Zero would make fully decayed weights absorbing (see module docstring).
WEIGHT_PSEUDOCOUNT = 10.0 * float(np.finfo(np.float64).eps)
# Diagonal added to every updated covariance in variable-covariance mode;
# keeps abandoned components' collapsing covariances positive definite.
COV_RIDGE = 1e-6


@dataclass(frozen=True)
class SimulationConfig:
    """Static parameters of one simulation run."""

    params: MixtureParams
    m: int  # number of agents
    T: int  # number of sweeps
    p: float  # self-interaction probability
    k: int  # neighborhood size for partner choice (ignored when m == 1)
    r: int  # RAG size
    epsilon: float = 0.01  # initial off-peak mass
    variable_covariance: bool = False
    volume_constraint: float | None = None
    sweep_order: str = "fixed"  # "fixed" (0..m-1) or "permuted"
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.params, MixtureParams):
            raise ValueError("params must be a MixtureParams")
        if not (isinstance(self.m, int) and self.m >= 1):
            raise ValueError("m must be an integer >= 1")
        if not (isinstance(self.T, int) and self.T >= 0):
            raise ValueError("T must be an integer >= 0")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("p must lie in [0, 1]")
        if not (isinstance(self.r, int) and self.r >= 1):
            raise ValueError("r must be an integer >= 1")
        if self.m == 1:
            if self.p != 1.0 or self.k != 0:
                raise ValueError("m == 1 requires p == 1.0 and k == 0")
        else:
            if not (isinstance(self.k, int) and 1 <= self.k <= self.m - 1):
                raise ValueError("k must be an integer in [1, m - 1]")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in [0, 1]")
        if self.volume_constraint is not None:
            if not self.variable_covariance:
                raise ValueError("volume_constraint requires variable_covariance")
            v = float(self.volume_constraint)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError("volume_constraint must be positive and finite")
        if self.sweep_order not in ("fixed", "permuted"):
            raise ValueError('sweep_order must be "fixed" or "permuted"')


@dataclass
class AgentState:
    """One agent: log mixture weights, RAG points, and (optionally) its own
    covariances in variable-covariance mode (None means using the shared
    config covariances)."""

    log_weights: np.ndarray  # (n,)
    rag: np.ndarray  # (r, d)
    covariances: np.ndarray | None = None  # (n, d, d)

    @property
    def weights(self):
        """Simplex view of the belief; deep log weights underflow to 0.0."""
        return np.exp(self.log_weights)


@dataclass
class SystemState:
    agents: list[AgentState]
    t: int = 0

    @property
    def m(self):
        return len(self.agents)

    def weight_matrix(self):
        return np.array([a.weights for a in self.agents])


@dataclass(frozen=True)
class InteractionRecord:
    t: int  # sweep index (0-based) this interaction belongs to
    i: int  # acting agent
    j: int  # partner (== i when mirrored)
    mirrored: bool
    removed: int  # RAG slot that was replaced


@dataclass
class Trajectory:
    """Snapshots at t = 0..T plus the full interaction log."""

    config: SimulationConfig
    weights: np.ndarray  # (T+1, m, n)
    covariances: np.ndarray | None  # (T+1, m, n, d, d) in variable mode
    records: list[InteractionRecord]


def agent_streams(seed, m):
    """Independent per-agent generators: SeedSequence(seed, spawn_key=(i,))."""
    return [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))
        for i in range(m)
    ]


def _order_stream(seed, m):
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(m,)))
    )


def init_weights(m, n, epsilon):
    """Initial beliefs: agent i puts 1 - eps (plus its share of eps) on
    component i mod n and spreads eps uniformly; returns (m, n)."""
    if not (isinstance(m, int) and m >= 1 and isinstance(n, int) and n >= 1):
        raise ValueError("m and n must be integers >= 1")
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError("epsilon must lie in [0, 1]")
    w = np.full((m, n), epsilon / n)
    w[np.arange(m), np.arange(m) % n] += 1.0 - epsilon
    return w


def init_rags(weights, params, r, rngs):
    """Draw each agent's initial RAG from its own mixture.

    ``rngs`` is either one generator (drawn from sequentially, agent 0 first)
    or a sequence of per-agent generators; the engine always passes the
    latter so agents stay independent.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise ValueError("weights must have shape (m, n)")
    m = w.shape[0]
    if isinstance(rngs, np.random.Generator):
        rngs = [rngs] * m
    if len(rngs) != m:
        raise ValueError("need one generator per agent")
    return [sample_from_gmm(w[i], params, r, rngs[i]) for i in range(m)]


def k_nearest_gmms(k, i, weights):
    """Indices of the k nearest agents to agent i in Euclidean weight
    distance, self excluded, distance ties broken toward lower index.
    Returned sorted ascending by index."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] < 2:
        raise ValueError("weights must have shape (m, n) with m >= 2")
    m = w.shape[0]
    if not (0 <= int(i) < m):
        raise ValueError("agent index out of range")
    k = int(k)
    if not (1 <= k <= m - 1):
        raise ValueError("k must lie in [1, m - 1]")
    d2 = np.sum((w - w[int(i)]) ** 2, axis=1)
    d2[int(i)] = np.inf
    order = np.argsort(d2, kind="stable")
    return np.sort(order[:k])


def choose_partner(i, p, k, weights, rng):
    """Partner for agent i: itself with probability p, else uniform among its
    k nearest peers.  Always consumes exactly one uniform draw for the mirror
    decision, so the stream layout does not depend on p."""
    if rng.random() < p:
        return int(i)
    neighbors = k_nearest_gmms(k, i, weights)
    return int(neighbors[rng.integers(neighbors.size)])


def _rag_replace(rag, y, removal="farthest"):
    """Replace the slot farthest from (or nearest to, per ``removal``) y;
    first such slot on ties.  Returns (new_rag, removed_slot)."""
    dist = np.linalg.norm(rag - y[None, :], axis=1)
    slot = int(np.argmax(dist)) if removal == "farthest" else int(np.argmin(dist))
    out = rag.copy()
    out[slot] = y
    return out, slot


def rag_replace(rag, y, removal="farthest"):
    """Public wrapper over the slot-replacement rule; validates shapes."""
    rag = np.asarray(rag, dtype=float)
    if rag.ndim == 1:
        rag = rag.reshape(-1, 1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if rag.ndim != 2 or rag.shape[0] == 0 or rag.shape[1] != y.size:
        raise ValueError("rag must have shape (r, d) matching y")
    if removal not in ("farthest", "nearest"):
        raise ValueError('removal must be "farthest" or "nearest"')
    return _rag_replace(rag, y, removal)


def _agent_params(agent, config):
    if config.variable_covariance and agent.covariances is not None:
        return config.params.with_covariances(agent.covariances)
    return config.params


def _pseudo_answer(partner, query, config, rng):
    """Partner's reply: insert the query into a copy of its RAG (replacing
    the element farthest from the query), M-step the copy, sample once from
    the result.  The partner's stored state never changes."""
    pseudo_rag, _ = _rag_replace(partner.rag, query)
    partner_params = _agent_params(partner, config)
    if config.variable_covariance:
        pseudo_lw, pseudo_covs = update_log_weights_and_covariances(
            partner.log_weights,
            pseudo_rag,
            partner_params,
            pseudocount=WEIGHT_PSEUDOCOUNT,
            ridge=COV_RIDGE,
        )
        if config.volume_constraint is not None:
            pseudo_covs = volume_rescale(pseudo_covs, config.volume_constraint)
        pseudo_params = config.params.with_covariances(pseudo_covs)
    else:
        pseudo_lw = update_log_weights(
            partner.log_weights, pseudo_rag, partner_params,
            pseudocount=WEIGHT_PSEUDOCOUNT,
        )
        pseudo_params = partner_params
    return sample_from_gmm(np.exp(pseudo_lw), pseudo_params, 1, rng)[0]


def interaction_step(state, i, config, rng):
    """One interaction by agent i, mutating ``state``; returns the record.

    Query, answer, RAG update, M-step, in that order (see the module
    docstring).  All randomness comes from ``rng`` (agent i's stream).
    """
    i = int(i)
    agents = state.agents
    # With m == 1 config validation forces p == 1, so choose_partner returns i
    # before touching the neighbor logic; the mirror draw is still consumed,
    # keeping each agent's stream layout independent of m.
    j = choose_partner(i, config.p, config.k, state.weight_matrix(), rng)
    me = agents[i]
    query = sample_from_gmm(me.weights, _agent_params(me, config), 1, rng)[0]
    y = _pseudo_answer(agents[j], query, config, rng)

    new_rag, slot = _rag_replace(me.rag, y)
    my_params = _agent_params(me, config)
    if config.variable_covariance:
        new_lw, new_covs = update_log_weights_and_covariances(
            me.log_weights,
            new_rag,
            my_params,
            pseudocount=WEIGHT_PSEUDOCOUNT,
            ridge=COV_RIDGE,
        )
        if config.volume_constraint is not None:
            new_covs = volume_rescale(new_covs, config.volume_constraint)
        me.covariances = new_covs
    else:
        new_lw = update_log_weights(
            me.log_weights, new_rag, my_params, pseudocount=WEIGHT_PSEUDOCOUNT
        )
    me.log_weights = new_lw
    me.rag = new_rag
    return InteractionRecord(t=state.t, i=i, j=j, mirrored=(j == i), removed=slot)


def sweep(state, config, rngs, order_rng=None):
    """One sweep: every agent acts once.  Order is 0..m-1, or a fresh
    permutation from ``order_rng`` when config.sweep_order == "permuted".
    Each agent draws only from its own stream.  Returns the records."""
    if config.sweep_order == "permuted":
        if order_rng is None:
            raise ValueError('sweep_order "permuted" needs an order generator')
        order = order_rng.permutation(state.m)
    else:
        order = np.arange(state.m)
    records = []
    for i in order:
        records.append(interaction_step(state, int(i), config, rngs[int(i)]))
    state.t += 1
    return records


def _initial_state(config, rngs):
    w = init_weights(config.m, config.params.n, config.epsilon)
    rags = init_rags(w, config.params, config.r, rngs)
    with np.errstate(divide="ignore"):
        log_w = np.log(w)  # epsilon == 0 legitimately gives -inf entries
    agents = []
    for i in range(config.m):
        covs = None
        if config.variable_covariance:
            covs = np.array(config.params.covariances, copy=True)
            if config.volume_constraint is not None:
                covs = volume_rescale(covs, config.volume_constraint)
        agents.append(AgentState(log_weights=log_w[i].copy(), rag=rags[i], covariances=covs))
    return SystemState(agents=agents, t=0)


def run_simulation(config):
    """Run T sweeps from the standard initial state; returns a Trajectory
    with T + 1 weight snapshots (and covariance snapshots in variable mode)
    plus every interaction record."""
    rngs = agent_streams(config.seed, config.m)
    order_rng = _order_stream(config.seed, config.m)
    state = _initial_state(config, rngs)

    m, n, d = config.m, config.params.n, config.params.d
    weights = np.empty((config.T + 1, m, n))
    covs = (
        np.empty((config.T + 1, m, n, d, d)) if config.variable_covariance else None
    )

    def snapshot(t):
        weights[t] = state.weight_matrix()
        if covs is not None:
            for i, a in enumerate(state.agents):
                covs[t, i] = a.covariances

    snapshot(0)
    records = []
    for t in range(config.T):
        records.extend(sweep(state, config, rngs, order_rng))
        snapshot(t + 1)
    return Trajectory(config=config, weights=weights, covariances=covs, records=records)
