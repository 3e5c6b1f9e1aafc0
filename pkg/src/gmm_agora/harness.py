"""Named experiments: configure, replicate, and write CSV/JSON outputs.

Each runner materializes a directory of flat CSV files plus one
``manifest.json`` recording every resolved parameter and derived seed, so a
rerun of the same command reproduces the directory byte for byte.  No
timestamps, hostnames, or float formatting shortcuts: floats are written with
repr round-trip fidelity.

Experiments (defaults follow the study configurations):
  silo-trace      one long run, per-sweep silo labels / counts / churn
  silos-vs-k      final silo count as a function of neighborhood size k
  phase-grid      one trace per (p, k) cell
  collapse        many replicates at fixed (p, k), time to single silo
  separation      time-to-consensus vs mean separation, three geometries
  adaptive-cov    variable-covariance runs, max component std over time
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import SimulationConfig, run_simulation
from .metrics import convergence_time, silo_count, silo_trace, stability
from .mixture import MixtureParams

__all__ = [
    "ExperimentSpec",
    "mean_geometry",
    "default_spec",
    "run_experiment",
    "EXPERIMENTS",
    "write_run_outputs",
    "write_manifest",
]

_BASE = {
    "n": 30,
    "m": 30,
    "sigma": 0.3,
    "delta_mu": 1.0,
    "epsilon": 0.01,
    "geometry": "linear",
    "r": 5,
    "sweep_order": "fixed",
}

# Per-experiment defaults layered over _BASE.
EXPERIMENTS = {
    "silo-trace": {"p": 0.4, "k": 29, "r": 5, "T": 100, "replicates": 1},
    "silos-vs-k": {
        "p": 0.0,
        "k": 29,  # overridden per arm
        "r": 5,
        "T": 80,
        "replicates": 50,
        "k_list": (1, 2, 4, 8, 16, 29),
    },
    "phase-grid": {
        "p": 0.0,
        "k": 2,
        "r": 5,
        "T": 200,
        "replicates": 1,
        "p_list": (0.0, 0.2, 0.4, 0.7),
        "k_list": (2, 5, 15, 29),
    },
    "collapse": {"p": 0.2, "k": 29, "r": 10, "T": 200, "replicates": 50},
    "separation": {
        "p": 0.0,
        "k": 29,
        "r": 5,
        "T": 400,
        "replicates": 50,
        "geometries": ("linear", "circle", "simplex"),
        "delta_over_sigma": {
            "linear": tuple(np.round(np.arange(0.75, 5.0 + 1e-9, 0.25), 4)),
            "circle": tuple(np.round(np.arange(0.5, 3.0 + 1e-9, 0.25), 4)),
            "simplex": tuple(np.round(np.arange(2.25, 6.0 + 1e-9, 0.25), 4)),
        },
    },
    "adaptive-cov": {
        "p": 0.2,
        "k": 29,
        "r": 10,
        "T": 200,
        "replicates": 1,
        "variable_covariance": True,
        # Component overlap (delta_mu / sigma = 1) keeps the system mixing
        # well enough to reach one silo comfortably inside T, after which the
        # abandoned components' covariances starve toward the ridge; the
        # smaller absolute separation speeds that last phase, whose clock is
        # set by the ridge scale rather than by delta_mu / sigma.
        "delta_mu": 0.5,
        "sigma": 0.5,
    },
}


def mean_geometry(kind, n, delta_mu, sigma, *, d=None):
    """Component means at pairwise separation delta_mu, isotropic sigma^2 I.

    linear:  d = 1, means delta_mu * (1..n) (adjacent separation delta_mu);
    circle:  d = 2, n points equally spaced on a circle of radius
             delta_mu / (2 sin(pi / n)) (adjacent chord length delta_mu);
    simplex: d = n, means (delta_mu / sqrt 2) e_i (all pairs at delta_mu).
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    delta_mu = float(delta_mu)
    if not (delta_mu > 0.0 and math.isfinite(delta_mu)):
        raise ValueError("delta_mu must be positive and finite")
    if kind == "linear":
        means = delta_mu * np.arange(1.0, n + 1.0).reshape(n, 1)
    elif kind == "circle":
        if n == 1:
            means = np.zeros((1, 2))
        else:
            radius = delta_mu / (2.0 * math.sin(math.pi / n))
            angles = 2.0 * math.pi * np.arange(n) / n
            means = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    elif kind == "simplex":
        means = (delta_mu / math.sqrt(2.0)) * np.eye(n)
    else:
        raise ValueError('geometry must be "linear", "circle", or "simplex"')
    if d is not None and int(d) != means.shape[1]:
        raise ValueError(f"geometry {kind!r} with n = {n} has d = {means.shape[1]}")
    return MixtureParams.isotropic(means, sigma)


@dataclass(frozen=True)
class ExperimentSpec:
    """A named experiment plus every knob a runner may read.

    Sweep fields (k_list / p_list / delta lists / geometries) apply only to
    the experiments that sweep them; scalar fields configure the base run.
    """

    experiment: str
    out_dir: str
    seed: int = 0
    replicates: int | None = None
    jobs: int = 1
    weights_csv: bool = False
    # base run parameters (None -> experiment default)
    n: int | None = None
    m: int | None = None
    p: float | None = None
    k: int | None = None
    r: int | None = None
    T: int | None = None
    sigma: float | None = None
    delta_mu: float | None = None
    epsilon: float | None = None
    geometry: str | None = None
    sweep_order: str | None = None
    variable_covariance: bool | None = None
    volume_constraint: float | None = None
    # sweep overrides
    k_list: tuple | None = None
    p_list: tuple | None = None
    delta_over_sigma: tuple | None = None
    geometries: tuple | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; "
                f"choose from {sorted(EXPERIMENTS)}"
            )
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.replicates is not None and self.replicates < 1:
            raise ValueError("replicates must be >= 1")


def default_spec(experiment, out_dir, **overrides):
    return ExperimentSpec(experiment=experiment, out_dir=out_dir, **overrides)


def _resolved(spec):
    """Scalar settings: experiment defaults overlaid with explicit fields."""
    exp = EXPERIMENTS[spec.experiment]
    out = dict(_BASE)
    out.update({k: v for k, v in exp.items() if not isinstance(v, (tuple, dict))})
    for name in (
        "n",
        "m",
        "p",
        "k",
        "r",
        "T",
        "sigma",
        "delta_mu",
        "epsilon",
        "geometry",
        "sweep_order",
        "variable_covariance",
        "replicates",
    ):
        value = getattr(spec, name)
        if value is not None:
            out[name] = value
    out.setdefault("variable_covariance", False)
    # strictly opt-in: a default here would pin every determinant and freeze
    # the max-std trace that the adaptive-cov experiment exists to record
    out["volume_constraint"] = spec.volume_constraint
    return out


def _geometry_dim(kind, n):
    return {"linear": 1, "circle": 2, "simplex": n}[kind]


def _config(settings, seed):
    params = mean_geometry(
        settings["geometry"], settings["n"], settings["delta_mu"], settings["sigma"]
    )
    return SimulationConfig(
        params=params,
        m=int(settings["m"]),
        T=int(settings["T"]),
        p=float(settings["p"]),
        k=int(settings["k"]),
        r=int(settings["r"]),
        epsilon=float(settings["epsilon"]),
        variable_covariance=bool(settings["variable_covariance"]),
        volume_constraint=settings["volume_constraint"],
        sweep_order=settings["sweep_order"],
        seed=int(seed),
    )


def _derive_seed(base, *key):
    seq = np.random.SeedSequence(int(base), spawn_key=tuple(int(x) for x in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _run_all(configs, jobs):
    if jobs <= 1 or len(configs) <= 1:
        return [run_simulation(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_simulation, configs))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_manifest(out_dir, payload):
    """Deterministic manifest.json: sorted keys, no timestamps."""
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_settings(settings):
    out = {}
    for key, value in settings.items():
        if isinstance(value, (bool, np.bool_)):
            out[key] = bool(value)
        elif isinstance(value, (np.floating, float)):
            out[key] = float(value)
        elif isinstance(value, (np.integer, int)):
            out[key] = int(value)
        else:
            out[key] = value
    return out


def _silo_rows(trajectories):
    rows = []
    for rep, traj in enumerate(trajectories):
        labels = silo_trace(traj.weights)
        for t in range(labels.shape[0]):
            for agent in range(labels.shape[1]):
                rows.append((rep, t, agent, int(labels[t, agent])))
    return rows


def _count_rows(trajectories, n):
    rows = []
    for rep, traj in enumerate(trajectories):
        labels = silo_trace(traj.weights)
        for t in range(labels.shape[0]):
            occupied, counts = np.unique(labels[t], return_counts=True)
            per_silo = dict(zip(occupied.tolist(), counts.tolist()))
            for s in range(n):
                rows.append((rep, t, s, per_silo.get(s, 0)))
    return rows


def _stability_rows(trajectories):
    rows = []
    for rep, traj in enumerate(trajectories):
        labels = silo_trace(traj.weights)
        for t in range(1, labels.shape[0]):
            rows.append((rep, t, _fmt(stability(labels[t - 1], labels[t]))))
    return rows


def _weight_rows(trajectories):
    rows = []
    for rep, traj in enumerate(trajectories):
        snaps = traj.weights
        for t in range(snaps.shape[0]):
            for agent in range(snaps.shape[1]):
                for comp in range(snaps.shape[2]):
                    rows.append((rep, t, agent, comp, _fmt(snaps[t, agent, comp])))
    return rows


def _tstar_rows(trajectories):
    rows = []
    for rep, traj in enumerate(trajectories):
        t_star = convergence_time(silo_trace(traj.weights))
        rows.append((rep, _fmt(None if t_star is None else t_star)))
    return rows


def _maxstd_rows(trajectories):
    rows = []
    for rep, traj in enumerate(trajectories):
        # max over agents and components of sqrt(largest eigenvalue)
        covs = traj.covariances
        for t in range(covs.shape[0]):
            eig = np.linalg.eigvalsh(covs[t].reshape(-1, covs.shape[-2], covs.shape[-1]))
            rows.append((rep, t, _fmt(float(np.sqrt(eig.max())))))
    return rows


def write_run_outputs(out_dir, trajectories, *, weights=False):
    """The standard per-run CSV set shared by `run` and several experiments:
    silos, silo_counts, stability, tstar (+ weights, + maxstd when variable
    covariance snapshots exist).  Returns the list of files written."""
    os.makedirs(out_dir, exist_ok=True)
    n = trajectories[0].config.params.n
    files = []

    def emit(name, header, rows):
        _write_csv(os.path.join(out_dir, name), header, rows)
        files.append(name)

    emit("silos.csv", ["replicate", "t", "agent", "silo"], _silo_rows(trajectories))
    emit(
        "silo_counts.csv",
        ["replicate", "t", "silo", "count"],
        _count_rows(trajectories, n),
    )
    emit(
        "stability.csv",
        ["replicate", "t", "changed_fraction"],
        _stability_rows(trajectories),
    )
    emit("tstar.csv", ["replicate", "t_star"], _tstar_rows(trajectories))
    if weights:
        emit(
            "weights.csv",
            ["replicate", "t", "agent", "component", "weight"],
            _weight_rows(trajectories),
        )
    if trajectories[0].covariances is not None:
        emit("maxstd.csv", ["replicate", "t", "max_std"], _maxstd_rows(trajectories))
    return files


def _mean_se(values):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return None, None
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def _run_silo_trace(spec, settings):
    reps = int(settings["replicates"])
    seeds = [_derive_seed(spec.seed, rep) for rep in range(reps)]
    trajectories = _run_all([_config(settings, s) for s in seeds], spec.jobs)
    files = write_run_outputs(
        spec.out_dir, trajectories, weights=spec.weights_csv
    )
    return files, {"seeds": seeds}


def _run_silos_vs_k(spec, settings):
    ks = [int(k) for k in (spec.k_list or EXPERIMENTS["silos-vs-k"]["k_list"])]
    reps = int(settings["replicates"])
    final_rows = []
    summary_rows = []
    seeds = {}
    for arm, k in enumerate(ks):
        arm_settings = dict(settings, k=k)
        arm_seeds = [_derive_seed(spec.seed, arm, rep) for rep in range(reps)]
        seeds[str(k)] = arm_seeds
        trajectories = _run_all(
            [_config(arm_settings, s) for s in arm_seeds], spec.jobs
        )
        finals = []
        for rep, traj in enumerate(trajectories):
            count = silo_count(silo_trace(traj.weights)[-1])
            finals.append(count)
            final_rows.append((k, rep, count))
        mean, se = _mean_se(finals)
        summary_rows.append((k, _fmt(mean), _fmt(se), reps))
    os.makedirs(spec.out_dir, exist_ok=True)
    _write_csv(
        os.path.join(spec.out_dir, "final_silos.csv"),
        ["k", "replicate", "final_silos"],
        final_rows,
    )
    _write_csv(
        os.path.join(spec.out_dir, "silos_vs_k.csv"),
        ["k", "mean_final_silos", "se", "replicates"],
        summary_rows,
    )
    return ["final_silos.csv", "silos_vs_k.csv"], {"k_list": ks, "seeds": seeds}


def _run_phase_grid(spec, settings):
    ps = [float(p) for p in (spec.p_list or EXPERIMENTS["phase-grid"]["p_list"])]
    ks = [int(k) for k in (spec.k_list or EXPERIMENTS["phase-grid"]["k_list"])]
    cells = []
    seeds = {}
    for arm, (p, k) in enumerate((p, k) for p in ps for k in ks):
        seed = _derive_seed(spec.seed, arm)
        seeds[f"p={p}_k={k}"] = seed
        # build every config first so a bad cell fails before any file exists
        cells.append((p, k, _config(dict(settings, p=p, k=k), seed)))
    trajectories = _run_all([cfg for _, _, cfg in cells], spec.jobs)
    files = []
    for (p, k, _cfg), traj in zip(cells, trajectories):
        cell_dir = os.path.join(spec.out_dir, f"p={p}_k={k}")
        os.makedirs(cell_dir, exist_ok=True)
        _write_csv(
            os.path.join(cell_dir, "silos.csv"),
            ["replicate", "t", "agent", "silo"],
            _silo_rows([traj]),
        )
        files.append(f"p={p}_k={k}/silos.csv")
    return files, {"p_list": ps, "k_list": ks, "seeds": seeds}


def _run_collapse(spec, settings):
    reps = int(settings["replicates"])
    seeds = [_derive_seed(spec.seed, rep) for rep in range(reps)]
    trajectories = _run_all([_config(settings, s) for s in seeds], spec.jobs)
    os.makedirs(spec.out_dir, exist_ok=True)
    _write_csv(
        os.path.join(spec.out_dir, "silos.csv"),
        ["replicate", "t", "agent", "silo"],
        _silo_rows(trajectories),
    )
    collapse_rows = []
    for rep, traj in enumerate(trajectories):
        t_star = convergence_time(silo_trace(traj.weights))
        collapsed = int(t_star is not None)
        collapse_rows.append((rep, collapsed, _fmt(t_star)))
    _write_csv(
        os.path.join(spec.out_dir, "collapse.csv"),
        ["replicate", "collapsed", "t_star"],
        collapse_rows,
    )
    return ["silos.csv", "collapse.csv"], {"seeds": seeds}


def _run_separation(spec, settings):
    defaults = EXPERIMENTS["separation"]
    geometries = [str(g) for g in (spec.geometries or defaults["geometries"])]
    reps = int(settings["replicates"])
    rows = []
    summary_rows = []
    seeds = {}
    arm = 0
    for geometry in geometries:
        if spec.delta_over_sigma is not None:
            deltas = [float(x) for x in spec.delta_over_sigma]
        else:
            deltas = [float(x) for x in defaults["delta_over_sigma"][geometry]]
        for delta in deltas:
            arm_settings = dict(
                settings,
                geometry=geometry,
                delta_mu=delta * float(settings["sigma"]),
            )
            arm_seeds = [_derive_seed(spec.seed, arm, rep) for rep in range(reps)]
            seeds[f"{geometry}_{delta}"] = arm_seeds
            trajectories = _run_all(
                [_config(arm_settings, s) for s in arm_seeds], spec.jobs
            )
            t_stars = []
            for rep, traj in enumerate(trajectories):
                t_star = convergence_time(silo_trace(traj.weights))
                if t_star is not None:
                    t_stars.append(t_star)
                rows.append((geometry, _fmt(delta), rep, _fmt(t_star)))
            mean, se = _mean_se(t_stars)
            summary_rows.append(
                (
                    geometry,
                    _fmt(delta),
                    _fmt(mean),
                    _fmt(se),
                    len(t_stars),
                    reps,
                )
            )
            arm += 1
    os.makedirs(spec.out_dir, exist_ok=True)
    _write_csv(
        os.path.join(spec.out_dir, "tstar.csv"),
        ["geometry", "delta_mu_over_sigma", "replicate", "t_star"],
        rows,
    )
    _write_csv(
        os.path.join(spec.out_dir, "tstar_summary.csv"),
        [
            "geometry",
            "delta_mu_over_sigma",
            "mean_t_star",
            "se",
            "n_converged",
            "replicates",
        ],
        summary_rows,
    )
    return ["tstar.csv", "tstar_summary.csv"], {
        "geometries": geometries,
        "seeds": seeds,
    }


def _run_adaptive_cov(spec, settings):
    reps = int(settings["replicates"])
    seeds = [_derive_seed(spec.seed, rep) for rep in range(reps)]
    trajectories = _run_all([_config(settings, s) for s in seeds], spec.jobs)
    os.makedirs(spec.out_dir, exist_ok=True)
    _write_csv(
        os.path.join(spec.out_dir, "silos.csv"),
        ["replicate", "t", "agent", "silo"],
        _silo_rows(trajectories),
    )
    _write_csv(
        os.path.join(spec.out_dir, "maxstd.csv"),
        ["replicate", "t", "max_std"],
        _maxstd_rows(trajectories),
    )
    return ["silos.csv", "maxstd.csv"], {"seeds": seeds}


_RUNNERS = {
    "silo-trace": _run_silo_trace,
    "silos-vs-k": _run_silos_vs_k,
    "phase-grid": _run_phase_grid,
    "collapse": _run_collapse,
    "separation": _run_separation,
    "adaptive-cov": _run_adaptive_cov,
}


def run_experiment(spec):
    """Run one named experiment; returns the manifest dict (also written to
    ``out_dir/manifest.json``)."""
    settings = _resolved(spec)
    os.makedirs(spec.out_dir, exist_ok=True)
    files, extra = _RUNNERS[spec.experiment](spec, settings)
    manifest = {
        "experiment": spec.experiment,
        "base_seed": int(spec.seed),
        "jobs": int(spec.jobs),
        "settings": _manifest_settings(settings),
        "files": sorted(files) + ["manifest.json"],
    }
    manifest.update(extra)
    write_manifest(spec.out_dir, manifest)
    return manifest
