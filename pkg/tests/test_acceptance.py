"""Acceptance suite: one test per headline claim, at full problem size.

Each test is self-contained and prints one pass/fail line under pytest -v.
Stated runtime budgets are asserted alongside the numeric tolerances, so a
regression in either shows up here.  Statistical checks run at fixed seeds;
the thresholds leave the slack quoted with each claim, and a failure should
be treated as a real regression rather than rerolled.

Golden table cells are quoted at the six significant figures of the
reference tables and compared at relative 5e-7.
"""

import csv
import hashlib
import io
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from gmm_agora.bounds import constants, theorem1_log_bound
from gmm_agora.chain import McConfig, McState, mc_step
from gmm_agora.cli import main as cli_main
from gmm_agora.engine import SimulationConfig, run_simulation
from gmm_agora.harness import default_spec, mean_geometry, run_experiment
from gmm_agora.metrics import is_level_polarized
from gmm_agora.mixture import (
    MixtureParams,
    ball_update_bounds,
    g_j_sigma,
    h_sigma,
    update_weights,
)

# ---------------------------------------------------------------------------
# reference table cells (six significant figures), keyed (sigma, ell)


def _spread(sigma, values):
    return {(sigma, ell): val for ell, val in zip((1, 2, 3, 4, 5), values)}


TABLE1_PART_I = {
    **_spread(0.3, (2.984834e-45, 3.030700e-45, 3.030701e-45, 3.030701e-45, 3.030701e-45)),
    **_spread(0.2, (2.897895e-06,) * 5),
    **_spread(0.1, (9.994152e-01,) * 5),
    **_spread(0.05, (1.0,) * 5),
}
TABLE2_PART_I = {
    **_spread(0.4, (6.188271e-22, 9.169169e-22, 9.176131e-22, 9.176144e-22, 9.176144e-22)),
    **_spread(0.3, (1.244469e-09, 1.248270e-09, 1.248270e-09, 1.248270e-09, 1.248270e-09)),
    **_spread(0.2, (7.805784e-02,) * 5),
    **_spread(0.1, (9.998830e-01,) * 5),
    **_spread(0.05, (1.0,) * 5),
}
TABLE3_PART_II = {
    **_spread(0.4, (5.981996e-22, 8.863530e-22, 8.870260e-22, 8.870273e-22, 8.870273e-22)),
    **_spread(0.3, (1.202987e-09, 1.206661e-09, 1.206661e-09, 1.206661e-09, 1.206661e-09)),
    **_spread(0.2, (7.545591e-02,) * 5),
    **_spread(0.1, (9.665536e-01,) * 5),
    **_spread(0.05, (9.666667e-01,) * 5),
}


def _cli_table(index):
    runner = CliRunner()
    result = runner.invoke(cli_main, ["bounds", "--table", str(index)])
    assert result.exit_code == 0, result.output
    reader = csv.DictReader(io.StringIO(result.output))
    return {(float(row["sigma"]), int(row["ell"])): row for row in reader}


def test_01_bound_tables_match_reference_cells():
    start = time.perf_counter()
    checks = (
        (1, "bound_part_i", TABLE1_PART_I),
        (1, "bound_part_ii", TABLE1_PART_I),  # identical at table precision
        (2, "bound_part_i", TABLE2_PART_I),
        (3, "bound_part_ii", TABLE3_PART_II),
    )
    for index, column, expected in checks:
        rows = _cli_table(index)
        assert len(rows) == len(expected)
        for key, target in expected.items():
            got = float(rows[key][column])
            assert got == pytest.approx(target, rel=5e-7), (
                f"table {index} {column} at (sigma, ell) = {key}: "
                f"{got!r} vs {target!r}"
            )
    assert time.perf_counter() - start < 1.0


def test_02_weight_update_is_the_mean_posterior():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    worst_update = 0.0
    worst_posterior = 0.0
    for _ in range(10_000):
        sigma = float(rng.uniform(0.05, 1.5))
        w = float(rng.uniform(1e-6, 1.0 - 1e-6))
        r = int(rng.integers(1, 9))
        params = MixtureParams.isotropic(np.array([[-1.0], [1.0]]), sigma)
        centers = rng.choice([-1.0, 1.0], size=r)
        rag = (centers + sigma * rng.standard_normal(r)).reshape(r, 1)

        updated = update_weights(np.array([w, 1.0 - w]), rag, params)
        reference = float(h_sigma(w, rag[:, 0], sigma).mean())
        worst_update = max(worst_update, abs(updated[0] - reference))

        x = rag[0]
        post = g_j_sigma(np.array([w, 1.0 - w]), 0, x, params)
        worst_posterior = max(
            worst_posterior, abs(post - h_sigma(w, float(x[0]), sigma))
        )
    assert worst_update <= 1e-12
    assert worst_posterior <= 1e-12
    assert time.perf_counter() - start < 10.0


# ---------------------------------------------------------------------------
# chain update, vectorized over instance batches


def _chain_update(w, rags, y, sigma):
    """Insert y into each row's farthest-from-y slot; return the new weights
    (mean posterior over the post-replacement RAG) and the mutated rags."""
    idx = np.argmax(np.abs(rags - y[:, None]), axis=1)
    rags[np.arange(rags.shape[0]), idx] = y
    return h_sigma(w[:, None], rags, sigma).mean(axis=1), rags


def _interior_logits(rng, log_c, size):
    """Logits of weights strictly inside I_1 that stay interior in float64:
    logit magnitudes are capped at 36 so 1/(1 + e^-s) rounds below 1.0."""
    cap = min(log_c * (1.0 - 1e-9), 36.0)
    lo = -log_c * (1.0 - 1e-9)
    return rng.uniform(lo, cap, size)


def test_03_interval_propositions_hold():
    start = time.perf_counter()
    n_inst = 10_000
    for rho, sigma in ((0.49, 0.1), (0.25, 0.2)):
        for r in (1, 3, 5):
            cc = constants(rho, sigma, r)
            log_c, log_b = cc.log_C, cc.log_B
            rng = np.random.default_rng(hash((rho, r)) % 2**32)

            # one update from inside I_1 with a well-behaved RAG lands in
            # (1/(1 + C B), 1/(1 + (C B)^-1))
            w = np.exp(-np.logaddexp(0.0, -_interior_logits(rng, log_c, n_inst)))
            sides = rng.choice([-1.0, 1.0], size=(n_inst, r))
            rags = sides + rng.uniform(-rho, rho, size=(n_inst, r))
            y = rng.choice([-1.0, 1.0], size=n_inst) + rng.uniform(
                -rho, rho, size=n_inst
            )
            w1, _ = _chain_update(w, rags, y, sigma)
            lower = math.exp(-np.logaddexp(0.0, log_c + log_b))
            upper = math.exp(-np.logaddexp(0.0, -(log_c + log_b)))
            assert np.all(w1 >= lower) and np.all(w1 <= upper), (rho, sigma, r)

            # r updates in side +- rho/(2r) leave the whole RAG in side +- rho
            w = rng.uniform(0.0, 1.0, n_inst)
            rags = rng.uniform(-3.0, 3.0, size=(n_inst, r))
            side = rng.choice([-1.0, 1.0], size=n_inst)
            half = rho / (2.0 * r)
            for _ in range(r):
                y = side + rng.uniform(-half, half, size=n_inst)
                w, rags = _chain_update(w, rags, y, sigma)
            assert np.all(np.abs(rags - side[:, None]) <= rho), (rho, sigma, r)

            # 4r + 2 one-sided updates push the weight past the I_1 endpoint
            for pole, compare in ((1.0, "le"), (-1.0, "ge")):
                w = np.exp(
                    -np.logaddexp(0.0, -_interior_logits(rng, log_c, n_inst))
                )
                rags = rng.uniform(-3.0, 3.0, size=(n_inst, r))
                for _ in range(4 * r + 2):
                    y = pole + rng.uniform(-rho, rho, size=n_inst)
                    w, rags = _chain_update(w, rags, y, sigma)
                if compare == "le":
                    bound = math.exp(-np.logaddexp(0.0, log_c))
                    assert np.all(w <= bound), (rho, sigma, r, pole)
                else:
                    bound = math.exp(-np.logaddexp(0.0, -log_c))
                    assert np.all(w >= bound), (rho, sigma, r, pole)
    assert time.perf_counter() - start < 60.0


def test_04_ball_update_bounds_sandwich_the_posterior():
    start = time.perf_counter()
    rng = np.random.default_rng(404)
    for d in (2, 5, 30):
        for _ in range(3334):
            m = int(rng.integers(2, min(d + 1, 6) + 1))
            sigma = float(rng.uniform(0.1, 1.0))
            radius = float(rng.uniform(0.05, 0.5))
            r = int(rng.integers(1, 7))

            focal = rng.choice([-1.0, 1.0], size=d)
            flips = rng.choice(d, size=m - 1, replace=False)
            means = np.tile(focal, (m, 1))
            j = int(rng.integers(m))
            order = [j] + [idx for idx in range(m) if idx != j]
            for neighbor, flip in zip(order[1:], flips):
                means[neighbor, flip] *= -1.0
            means[j] = focal

            weights = rng.dirichlet(np.ones(m))
            params = MixtureParams.isotropic(means, sigma)

            direction = rng.standard_normal((r, d))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            radii = radius * rng.uniform(0.0, 1.0, r) ** (1.0 / d)
            points = focal + direction * radii[:, None]

            new_w = update_weights(weights, points, params)[j]
            low, high = ball_update_bounds(weights, j, sigma, radius)
            assert low - 1e-12 <= new_w <= high + 1e-12, (
                d,
                m,
                sigma,
                radius,
                r,
                new_w,
                (low, high),
            )
    assert time.perf_counter() - start < 60.0


def test_05_chain_polarizes_from_a_split_start():
    start = time.perf_counter()
    trials, steps, window = 200, 5000, 100
    config = McConfig(m=3, r=2, sigma=0.1, seed=0)
    cc = constants(0.49, 0.1, 2)
    log_bound = theorem1_log_bound(3, 2, 0.49, 0.1).log_value

    hit = np.zeros(trials, dtype=bool)
    window_flags = np.zeros((trials, steps // window), dtype=bool)
    for trial in range(trials):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(config.seed, spawn_key=(trial,)))
        )
        state = McState(weights=np.full(3, 0.5), rags=np.zeros((3, 2)))
        for step in range(1, steps + 1):
            state, _ = mc_step(state, config, rng)
            at_window = step % window == 0
            if (not hit[trial]) or at_window:
                polarized = is_level_polarized(state, 1, cc)
                hit[trial] |= polarized
                if at_window:
                    window_flags[trial, step // window - 1] = polarized

    assert hit.sum() >= 0.95 * trials, f"only {hit.sum()}/{trials} trials polarized"
    floor = math.exp(log_bound)  # underflows to 0.0; kept as the honest float
    for freq in window_flags.mean(axis=0):
        se = math.sqrt(freq * (1.0 - freq) / trials)
        assert freq >= floor - 3.0 * se
    assert time.perf_counter() - start < 120.0


def test_06_connected_runs_collapse_to_one_silo(tmp_path):
    start = time.perf_counter()
    spec = default_spec("collapse", str(tmp_path), replicates=20, seed=0)
    run_experiment(spec)
    with open(tmp_path / "collapse.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 20
    collapsed = sum(int(row["collapsed"]) for row in rows)
    assert collapsed >= 18, f"only {collapsed}/20 replicates collapsed"
    assert time.perf_counter() - start < 300.0


def test_07_larger_neighborhoods_leave_fewer_silos(tmp_path):
    start = time.perf_counter()
    spec = default_spec(
        "silos-vs-k", str(tmp_path), k_list=(2, 29), replicates=20, seed=0
    )
    run_experiment(spec)
    with open(tmp_path / "silos_vs_k.csv", newline="") as fh:
        rows = {int(row["k"]): row for row in csv.DictReader(fh)}
    mean2, se2 = float(rows[2]["mean_final_silos"]), float(rows[2]["se"])
    mean29, se29 = float(rows[29]["mean_final_silos"]), float(rows[29]["se"])
    assert mean29 < mean2
    assert mean29 + 2.0 * se29 < mean2 - 2.0 * se2, (
        f"k = 29 band [{mean29 - 2 * se29:.3f}, {mean29 + 2 * se29:.3f}] overlaps "
        f"k = 2 band [{mean2 - 2 * se2:.3f}, {mean2 + 2 * se2:.3f}]"
    )
    assert time.perf_counter() - start < 300.0


def test_08_separation_slows_collapse_then_saturates(tmp_path):
    start = time.perf_counter()
    spec = default_spec(
        "separation",
        str(tmp_path),
        geometries=("linear",),
        delta_over_sigma=(0.75, 2.0, 4.75, 5.0),
        replicates=20,
        seed=0,
    )
    run_experiment(spec)
    with open(tmp_path / "tstar_summary.csv", newline="") as fh:
        rows = {
            float(row["delta_mu_over_sigma"]): row for row in csv.DictReader(fh)
        }
    means = {key: float(row["mean_t_star"]) for key, row in rows.items()}
    ses = {key: float(row["se"]) for key, row in rows.items()}
    assert all(int(rows[key]["n_converged"]) == 20 for key in rows)
    assert means[0.75] > means[2.0], f"{means[0.75]} vs {means[2.0]}"
    gap = abs(means[4.75] - means[5.0])
    band = 2.0 * math.hypot(ses[4.75], ses[5.0])
    assert gap <= band, f"saturation gap {gap:.3f} exceeds 2 SE band {band:.3f}"
    assert time.perf_counter() - start < 600.0


def test_09_adaptive_covariances_shrink_and_respect_volume(tmp_path):
    start = time.perf_counter()
    spec = default_spec("adaptive-cov", str(tmp_path), replicates=10, seed=0)
    run_experiment(spec)
    with open(tmp_path / "maxstd.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    finals = {}
    for row in rows:
        finals[int(row["replicate"])] = float(row["max_std"])  # last t wins
    assert len(finals) == 10
    shrunk = sum(1 for value in finals.values() if value < 0.05)
    assert shrunk >= 9, f"only {shrunk}/10 replicates shrank below 0.05"

    params = mean_geometry("linear", 30, 0.5, 0.5)
    config = SimulationConfig(
        params=params,
        m=30,
        T=200,
        p=0.2,
        k=29,
        r=10,
        epsilon=0.01,
        variable_covariance=True,
        volume_constraint=0.25,
        sweep_order="fixed",
        seed=0,
    )
    trajectory = run_simulation(config)
    dets = np.linalg.det(
        trajectory.covariances.reshape(-1, params.d, params.d)
    )
    np.testing.assert_allclose(dets, 0.25, rtol=1e-6)
    assert time.perf_counter() - start < 300.0


def _hash_tree(root):
    out = {}
    for path in sorted(Path(root).rglob("*")):
        if path.is_file():
            out[str(path.relative_to(root))] = hashlib.sha256(
                path.read_bytes()
            ).hexdigest()
    return out


def test_10_cli_reruns_are_byte_identical(tmp_path):
    runner = CliRunner()
    commands = {
        "run": ["run", "--n", "6", "--m", "6", "--k", "5", "--T", "10", "--seed", "2"],
        "mc": ["mc", "--steps", "50", "--seed", "3"],
        "experiment": [
            "experiment",
            "silos-vs-k",
            "--k-list",
            "2,3",
            "--n",
            "6",
            "--m",
            "6",
            "--T",
            "5",
            "--replicates",
            "2",
            "--seed",
            "4",
        ],
    }
    for name, argv in commands.items():
        hashes = []
        for attempt in ("a", "b"):
            out = tmp_path / f"{name}-{attempt}"
            result = runner.invoke(cli_main, [*argv, "--out", str(out)])
            assert result.exit_code == 0, result.output
            hashes.append(_hash_tree(out))
        assert hashes[0] == hashes[1], f"{name} rerun differs"

    tables = []
    for attempt in ("a", "b"):
        path = tmp_path / f"bounds-{attempt}.csv"
        result = runner.invoke(cli_main, ["bounds", "--table", "1", "--out", str(path)])
        assert result.exit_code == 0, result.output
        tables.append(hashlib.sha256(path.read_bytes()).hexdigest())
    assert tables[0] == tables[1]
