"""Command line entry points.

Exit codes: 0 success; 2 parameter/validation problems (nothing written);
3 numeric failures during a run (degenerate covariance, density underflow).

Seeds resolve as: --seed flag > config file > GMM_AGORA_SEED env > 0.
``--config FILE`` supplies defaults from a flat JSON object keyed by option
names (underscores); explicit flags win over the file.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys

import click
import numpy as np

from .bounds import (
    generate_tables,
    lemma_behave_log_bound,
    lemma_pol_log_bound,
    reference_table,
    theorem1_log_bound,
    write_bounds_csv,
)
from .chain import McConfig, mc_run
from .engine import SimulationConfig, run_simulation
from .harness import (
    EXPERIMENTS,
    ExperimentSpec,
    mean_geometry,
    run_experiment,
    write_manifest,
    write_run_outputs,
)

__all__ = ["main"]


class NumericFailure(click.ClickException):
    exit_code = 3


def _load_config_file(path, allowed):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise click.UsageError("config file must hold a JSON object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise click.UsageError(f"unknown config keys: {', '.join(unknown)}")
    return data


def _resolve(defaults, file_values, flag_values):
    out = dict(defaults)
    out.update(file_values)
    out.update({k: v for k, v in flag_values.items() if v is not None})
    return out


def _resolve_seed(settings):
    if settings.get("seed") is None:
        env = os.environ.get("GMM_AGORA_SEED")
        try:
            settings["seed"] = int(env) if env else 0
        except ValueError as exc:
            raise click.UsageError(f"GMM_AGORA_SEED must be an integer: {env!r}") from exc
    return settings


def _run_guarded(fn):
    """Map exceptions to the documented exit codes."""
    try:
        return fn()
    except click.ClickException:
        raise
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    except (FloatingPointError, np.linalg.LinAlgError, OverflowError) as exc:
        raise NumericFailure(f"numeric failure: {exc}") from exc


@click.group(context_settings={"show_default": True})
@click.version_option(package_name="gmm-agora")
def main():
    """Interacting mixture-model agents: simulate, bound, and measure."""


_RUN_DEFAULTS = {
    "n": 30,
    "m": 30,
    "p": 0.4,
    "k": 29,
    "r": 5,
    "T": 100,
    "sigma": 0.3,
    "delta_mu": 1.0,
    "epsilon": 0.01,
    "geometry": "linear",
    "sweep_order": "fixed",
    "variable_cov": False,
    "volume_constraint": None,
    "weights": True,
    "seed": None,
}


@main.command("run")
@click.option("--n", type=int, default=None, help=f"components [{_RUN_DEFAULTS['n']}]")
@click.option("--m", type=int, default=None, help=f"agents [{_RUN_DEFAULTS['m']}]")
@click.option("--p", type=float, default=None, help=f"self-interaction probability [{_RUN_DEFAULTS['p']}]")
@click.option("--k", type=int, default=None, help=f"neighborhood size [{_RUN_DEFAULTS['k']}]")
@click.option("--r", type=int, default=None, help=f"RAG size [{_RUN_DEFAULTS['r']}]")
@click.option("--T", "T", type=int, default=None, help=f"sweeps [{_RUN_DEFAULTS['T']}]")
@click.option("--sigma", type=float, default=None, help=f"component std [{_RUN_DEFAULTS['sigma']}]")
@click.option("--delta-mu", type=float, default=None, help=f"mean separation [{_RUN_DEFAULTS['delta_mu']}]")
@click.option("--eps", "epsilon", type=float, default=None, help=f"initial off-peak mass [{_RUN_DEFAULTS['epsilon']}]")
@click.option("--geometry", type=click.Choice(["linear", "circle", "simplex"]), default=None, help="mean layout [linear]")
@click.option("--sweep-order", type=click.Choice(["fixed", "permuted"]), default=None, help="agent order per sweep [fixed]")
@click.option("--variable-cov/--fixed-cov", "variable_cov", default=None, help="re-fit covariances each step [fixed]")
@click.option("--volume-constraint", type=float, default=None, help="hold covariance determinants at this value")
@click.option("--weights/--no-weights", "weights", default=None, help="also write per-component weights.csv [on]")
@click.option("--seed", type=int, default=None, help="base seed [GMM_AGORA_SEED or 0]")
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON file of option defaults")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="output directory")
def cmd_run(config_path, out_dir, **flags):
    """One simulation run; writes silo/stability/count/t* CSVs + manifest."""

    def body():
        file_values = _load_config_file(config_path, _RUN_DEFAULTS)
        settings = _resolve_seed(_resolve(_RUN_DEFAULTS, file_values, flags))
        params = mean_geometry(
            settings["geometry"], settings["n"], settings["delta_mu"], settings["sigma"]
        )
        # volume constraint stays opt-in; defaulting it on would pin every
        # determinant and defeat the point of --variable-cov
        volume = settings["volume_constraint"]
        config = SimulationConfig(
            params=params,
            m=int(settings["m"]),
            T=int(settings["T"]),
            p=float(settings["p"]),
            k=int(settings["k"]),
            r=int(settings["r"]),
            epsilon=float(settings["epsilon"]),
            variable_covariance=bool(settings["variable_cov"]),
            volume_constraint=volume,
            sweep_order=settings["sweep_order"],
            seed=int(settings["seed"]),
        )
        trajectory = run_simulation(config)
        os.makedirs(out_dir, exist_ok=True)
        files = write_run_outputs(out_dir, [trajectory], weights=settings["weights"])
        manifest_settings = {
            key: settings[key]
            for key in _RUN_DEFAULTS
            if key not in ("weights", "volume_constraint")
        }
        manifest_settings["volume_constraint"] = volume
        write_manifest(
            out_dir,
            {
                "command": "run",
                "settings": manifest_settings,
                "files": sorted(files) + ["manifest.json"],
            },
        )
        click.echo(f"wrote {len(files) + 1} files to {out_dir}")

    _run_guarded(body)


_MC_DEFAULTS = {
    "m": 3,
    "r": 2,
    "sigma": 0.1,
    "steps": 1000,
    "k": None,
    "removal": "farthest",
    "record_every": 1,
    "seed": None,
}


@main.command("mc")
@click.option("--m", type=int, default=None, help=f"agents [{_MC_DEFAULTS['m']}]")
@click.option("--r", type=int, default=None, help=f"RAG size [{_MC_DEFAULTS['r']}]")
@click.option("--sigma", type=float, default=None, help=f"component std [{_MC_DEFAULTS['sigma']}]")
@click.option("--steps", type=int, default=None, help=f"chain steps [{_MC_DEFAULTS['steps']}]")
@click.option("--k", type=int, default=None, help="restrict partners to k nearest [off]")
@click.option("--removal", type=click.Choice(["farthest", "nearest"]), default=None, help="RAG slot replacement rule [farthest]")
@click.option("--record-every", "record_every", type=int, default=None, help="state snapshot stride [1]")
@click.option("--seed", type=int, default=None, help="base seed [GMM_AGORA_SEED or 0]")
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON file of option defaults")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="output directory")
def cmd_mc(config_path, out_dir, **flags):
    """Run the scalar two-component chain; writes mc.csv + manifest."""

    def body():
        file_values = _load_config_file(config_path, _MC_DEFAULTS)
        settings = _resolve_seed(_resolve(_MC_DEFAULTS, file_values, flags))
        config = McConfig(
            m=int(settings["m"]),
            r=int(settings["r"]),
            sigma=float(settings["sigma"]),
            seed=int(settings["seed"]),
            k=None if settings["k"] is None else int(settings["k"]),
            removal=settings["removal"],
        )
        steps = int(settings["steps"])
        if steps < 0:
            raise ValueError("steps must be >= 0")
        trajectory, _records = mc_run(
            config, steps, record_every=int(settings["record_every"])
        )
        os.makedirs(out_dir, exist_ok=True)
        header = ["t", "agent", "weight"] + [f"x{idx}" for idx in range(config.r)]
        rows = []
        for state in trajectory:
            for agent in range(config.m):
                rows.append(
                    [state.t, agent, repr(float(state.weights[agent]))]
                    + [repr(float(v)) for v in state.rags[agent]]
                )
        with open(os.path.join(out_dir, "mc.csv"), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        write_manifest(
            out_dir,
            {
                "command": "mc",
                "settings": {key: settings[key] for key in _MC_DEFAULTS},
                "files": ["manifest.json", "mc.csv"],
            },
        )
        click.echo(f"wrote 2 files to {out_dir}")

    _run_guarded(body)


@main.command("bounds")
@click.option("--table", type=click.IntRange(1, 3), default=None, help="emit a reference table (1, 2, or 3)")
@click.option("--theorem1", is_flag=True, default=False, help="finite-horizon bound from the two lemmas")
@click.option("--c", type=float, default=2.0, help="steps multiplier: s = c m ln m")
@click.option("--m", type=int, default=30, help="agents")
@click.option("--r", type=int, default=1, help="RAG size")
@click.option("--rho", type=float, default=0.5, help="query half-width")
@click.option("--sigma", "sigmas", type=float, multiple=True, help="component std (repeatable)")
@click.option("--ell", "ells", type=int, multiple=True, help="polarization level (repeatable)")
@click.option("--out", "out_path", type=click.Path(), default=None, help="CSV file [stdout]")
def cmd_bounds(table, theorem1, c, m, r, rho, sigmas, ells, out_path):
    """Evaluate polarization lower bounds; writes one CSV."""

    def body():
        if table is not None and theorem1:
            raise ValueError("--table and --theorem1 are mutually exclusive")
        if table is not None:
            rows = reference_table(table)
            _emit_bounds_csv(rows, out_path)
            return
        if theorem1:
            if not sigmas:
                raise ValueError("--theorem1 needs --sigma")
            sigma = float(sigmas[0])
            results = [
                ("behave", lemma_behave_log_bound(m, r, rho, sigma)),
                ("polarize", lemma_pol_log_bound(m, r, rho, sigma)),
                ("theorem1", theorem1_log_bound(m, r, rho, sigma)),
            ]
            rows = [
                (name, _csv_float(res.log_value), _csv_float(res.value), res.provenance)
                for name, res in results
            ]

            def emit(fh):
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["quantity", "log_value", "value", "provenance"])
                writer.writerows(rows)

            if out_path is None:
                emit(sys.stdout)
            else:
                with open(out_path, "w", newline="") as fh:
                    emit(fh)
            return
        use_sigmas = sigmas or (0.3,)
        use_ells = ells or (1, 2, 3, 4, 5)
        rows = generate_tables(c, m, rho, use_sigmas, use_ells, r=r)
        _emit_bounds_csv(rows, out_path)

    _run_guarded(body)


def _csv_float(x):
    if isinstance(x, float) and (math.isinf(x) or math.isnan(x)):
        return str(x)
    return repr(float(x))


def _emit_bounds_csv(rows, out_path):
    if out_path is None:
        write_bounds_csv(rows, sys.stdout)
        return
    with open(out_path, "w", newline="") as fh:
        write_bounds_csv(rows, fh)


def _parse_list(text, cast):
    if text is None:
        return None
    try:
        return tuple(cast(part.strip()) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise click.UsageError(f"cannot parse list {text!r}") from exc


_EXPERIMENT_CONFIG_KEYS = (
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
    "replicates",
    "seed",
    "variable_covariance",
    "volume_constraint",
    "k_list",
    "p_list",
    "delta_over_sigma",
    "geometries",
)


@main.command("experiment")
@click.argument("name", type=click.Choice(sorted(EXPERIMENTS)))
@click.option("--out", "out_dir", required=True, type=click.Path(), help="output directory")
@click.option("--replicates", type=int, default=None, help="replicates per arm [experiment default]")
@click.option("--jobs", type=int, default=1, help="parallel worker processes")
@click.option("--weights-csv", is_flag=True, default=False, help="also write weights.csv where supported")
@click.option("--seed", type=int, default=None, help="base seed [GMM_AGORA_SEED or 0]")
@click.option("--n", type=int, default=None, help="components [experiment default]")
@click.option("--m", type=int, default=None, help="agents [experiment default]")
@click.option("--p", type=float, default=None, help="self-interaction probability")
@click.option("--k", type=int, default=None, help="neighborhood size")
@click.option("--r", type=int, default=None, help="RAG size")
@click.option("--T", "T", type=int, default=None, help="sweeps")
@click.option("--sigma", type=float, default=None, help="component std")
@click.option("--delta-mu", type=float, default=None, help="mean separation")
@click.option("--eps", "epsilon", type=float, default=None, help="initial off-peak mass")
@click.option("--geometry", type=click.Choice(["linear", "circle", "simplex"]), default=None, help="mean layout")
@click.option("--sweep-order", type=click.Choice(["fixed", "permuted"]), default=None, help="agent order per sweep")
@click.option("--variable-cov/--fixed-cov", "variable_covariance", default=None, help="re-fit covariances each step")
@click.option("--volume-constraint", type=float, default=None, help="hold covariance determinants at this value")
@click.option("--k-list", type=str, default=None, help="comma-separated k sweep values")
@click.option("--p-list", type=str, default=None, help="comma-separated p sweep values")
@click.option("--delta-list", "delta_over_sigma", type=str, default=None, help="comma-separated delta_mu/sigma sweep values")
@click.option("--geometries", type=str, default=None, help="comma-separated geometry names")
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON file of option defaults")
def cmd_experiment(name, out_dir, jobs, weights_csv, config_path, **flags):
    """Run a named experiment suite into OUT/."""

    def body():
        file_values = _load_config_file(config_path, _EXPERIMENT_CONFIG_KEYS)
        merged = dict(file_values)
        merged.update({k: v for k, v in flags.items() if v is not None})
        if merged.get("seed") is None:
            env = os.environ.get("GMM_AGORA_SEED")
            try:
                merged["seed"] = int(env) if env else 0
            except ValueError as exc:
                raise click.UsageError(
                    f"GMM_AGORA_SEED must be an integer: {env!r}"
                ) from exc
        for key in ("k_list", "p_list", "geometries", "delta_over_sigma"):
            if isinstance(merged.get(key), str):
                cast = {
                    "k_list": int,
                    "p_list": float,
                    "geometries": str,
                    "delta_over_sigma": float,
                }[key]
                merged[key] = _parse_list(merged[key], cast)
            elif isinstance(merged.get(key), list):
                merged[key] = tuple(merged[key])
        spec = ExperimentSpec(
            experiment=name, out_dir=out_dir, jobs=int(jobs), weights_csv=weights_csv, **merged
        )
        manifest = run_experiment(spec)
        click.echo(f"wrote {len(manifest['files'])} files to {out_dir}")

    _run_guarded(body)
