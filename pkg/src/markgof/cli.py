"""Command line interface.

Subcommands: ``simulate`` (write one pattern), ``estimate`` (covariance
matrix of a pattern file), ``test`` (one TMD or MGM decision) and
``experiment`` (the full error-rate sweep with CSV, metadata and figure
output).

Exit codes: 0 success, 2 invalid configuration or input, 3 when more than
20% of test outcomes were inconclusive.
"""

from __future__ import annotations

import json
import math
import sys
import time

import click
import numpy as np

from . import __version__
from .estimate import (
    KernelSpec,
    bandwidth_from_c,
    read_matrix_csv,
    sigma1_hat,
    sigma2_hat,
    sigma3_hat,
    write_matrix_csv,
)
from .exceptions import CalibrationError
from .geometry import Window
from .gof import mgm_test, monte_carlo_sigma, tmd_test
from .harness import (
    ScenarioConfig,
    default_scenario,
    emit_table,
    run_scenario,
    write_metadata,
)
from .patterns import MarkBins, MarkedPointPattern, NullMarkDistribution
from .simulate import BoundaryCoxConfig, simulate_pattern

_INCONCLUSIVE_EXIT_FRACTION = 0.2


def _fail_config(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        _fail_config(f"cannot read config {path}: {err}")


def _load_null(source: str, ell: int) -> NullMarkDistribution:
    if source == "uniform":
        return NullMarkDistribution.uniform(MarkBins(ell))
    data = _load_json(source)
    try:
        null0 = NullMarkDistribution(np.asarray(data, dtype=float))
    except (TypeError, ValueError) as err:
        _fail_config(f"invalid null distribution in {source}: {err}")
    if null0.ell != ell:
        _fail_config(f"null distribution has {null0.ell} entries, expected {ell}")
    return null0


@click.group()
@click.version_option(version=__version__, prog_name="markgof")
@click.option("--seed", type=int, default=None, help="Global seed override.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker processes for replicated simulations.")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file; command flags override its entries.")
@click.pass_context
def main(ctx, seed, threads, config_path):
    """Simulation and goodness-of-fit testing for direction-marked point
    patterns."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["threads"] = max(1, threads)
    ctx.obj["config_path"] = config_path


_MODEL_FLAGS = ("germ_intensity", "radius_scale", "radius_shape",
                "elongation", "boundary_intensity", "margin_quantile")


@main.command("simulate")
@click.option("--germ-intensity", type=float, default=None)
@click.option("--radius-scale", type=float, default=None)
@click.option("--radius-shape", type=float, default=None)
@click.option("--elongation", type=float, default=None)
@click.option("--boundary-intensity", type=float, default=None)
@click.option("--margin-quantile", type=float, default=None)
@click.option("--side", type=float, default=None, help="Square window side length.")
@click.option("--origin", nargs=2, type=float, default=None, help="Window lower-left corner.")
@click.option("--seed", type=int, default=None, help="Seed for this pattern.")
@click.option("--output", "-o", type=click.Path(), default="pattern.csv", show_default=True)
@click.pass_context
def simulate_cmd(ctx, side, origin, seed, output, **flags):
    """Simulate one direction-marked boundary pattern and write it as CSV."""
    file_cfg = {}
    if ctx.obj.get("config_path"):
        file_cfg = _load_json(ctx.obj["config_path"])
    model_kwargs = {k: file_cfg[k] for k in _MODEL_FLAGS if k in file_cfg}
    for key, value in flags.items():
        if value is not None:
            model_kwargs[key] = value
    if side is None:
        side = file_cfg.get("side")
    if origin is None:
        origin = tuple(file_cfg.get("origin", (0.0, 0.0)))
    if seed is None:
        seed = ctx.obj.get("seed")
    if seed is None:
        seed = file_cfg.get("seed", 0)
    if side is None:
        _fail_config("window side is required (--side or config)")
    if "germ_intensity" not in model_kwargs:
        _fail_config("germ_intensity is required (flag or config)")
    try:
        cfg = BoundaryCoxConfig(**model_kwargs)
        window = Window.square(side, origin=tuple(origin))
    except ValueError as err:
        _fail_config(str(err))
    pattern = simulate_pattern(cfg, window, seed)
    pattern.to_csv(output)
    click.echo(f"wrote {pattern.n} points to {output} (seed {seed})")


@main.command("estimate")
@click.option("--pattern", "pattern_path", type=click.Path(exists=True), required=True)
@click.option("--bins", "ell", type=int, default=8, show_default=True)
@click.option("--null", "null_spec", default="uniform", show_default=True,
              help="'uniform' or a JSON file with bin probabilities.")
@click.option("--estimator", type=click.Choice(["1", "2", "3"]), default="3",
              show_default=True)
@click.option("--kernel", type=click.Choice(["uniform", "triangular"]),
              default="uniform", show_default=True)
@click.option("--c", "c_const", type=float, default=1.0, show_default=True,
              help="Bandwidth constant for the smoothed estimator.")
@click.option("--output", "-o", type=click.Path(), default="covariance.csv",
              show_default=True)
def estimate_cmd(pattern_path, ell, null_spec, estimator, kernel, c_const, output):
    """Estimate the covariance matrix of the deviation vector of a pattern."""
    try:
        pattern = MarkedPointPattern.from_csv(pattern_path)
    except ValueError as err:
        _fail_config(str(err))
    bins = MarkBins(ell)
    null0 = _load_null(null_spec, ell)
    if estimator == "1":
        est = sigma1_hat(pattern, bins, null0)
    elif estimator == "2":
        est = sigma2_hat(pattern, bins, null0)
    else:
        kern = KernelSpec(shape=kernel)
        bw = bandwidth_from_c(c_const, pattern.window, kern)
        est = sigma3_hat(pattern, bins, null0, kernel=kern, bandwidth=bw)
    write_matrix_csv(est, output)
    click.echo(f"wrote {est.kind} covariance ({ell}x{ell}) to {output}")


@main.command("test")
@click.option("--mode", type=click.Choice(["tmd", "mgm"]), required=True)
@click.option("--pattern", "pattern_path", type=click.Path(exists=True), required=True)
@click.option("--bins", "ell", type=int, default=8, show_default=True)
@click.option("--null", "null_spec", default="uniform", show_default=True)
@click.option("--c", "c_const", type=float, default=1.0, show_default=True,
              help="TMD bandwidth constant.")
@click.option("--kernel", type=click.Choice(["uniform", "triangular"]),
              default="uniform", show_default=True)
@click.option("--sigma0", "sigma0_path", type=click.Path(exists=True), default=None,
              help="MGM: covariance matrix CSV.")
@click.option("--mc-model", "mc_model_path", type=click.Path(exists=True), default=None,
              help="MGM: JSON model config for Monte Carlo covariance estimation.")
@click.option("--mc-n", type=int, default=500, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Optional JSON report output.")
@click.pass_context
def test_cmd(ctx, mode, pattern_path, ell, null_spec, c_const, kernel,
             sigma0_path, mc_model_path, mc_n, alpha, report_path):
    """Run one goodness-of-fit test on a pattern file."""
    try:
        pattern = MarkedPointPattern.from_csv(pattern_path)
    except ValueError as err:
        _fail_config(str(err))
    bins = MarkBins(ell)
    null0 = _load_null(null_spec, ell)
    if pattern.n == 0:
        _fail_config("pattern is empty; test undefined")
    if mode == "tmd":
        result = tmd_test(pattern, bins, null0, c=c_const, alpha=alpha,
                          kernel=KernelSpec(shape=kernel))
    else:
        if sigma0_path is not None:
            try:
                sigma0 = read_matrix_csv(sigma0_path)
            except ValueError as err:
                _fail_config(str(err))
        elif mc_model_path is not None:
            try:
                model = BoundaryCoxConfig.from_dict(_load_json(mc_model_path))
            except ValueError as err:
                _fail_config(str(err))
            seed = ctx.obj.get("seed") or 0
            sigma0 = monte_carlo_sigma(model, pattern.window, bins, null0,
                                       n=mc_n, seed=seed,
                                       workers=ctx.obj.get("threads", 1))
        else:
            _fail_config("mgm mode needs --sigma0 or --mc-model")
        result = mgm_test(pattern, bins, null0, sigma0, alpha=alpha)

    reject_txt = "na" if result.inconclusive else str(int(result.reject))
    click.echo(
        f"T={result.statistic:.10g} df={result.df} p={result.p_value:.10g} "
        f"reject={reject_txt} cov={result.covariance_kind}"
    )
    if result.inconclusive and result.note:
        click.echo(f"note: {result.note}", err=True)
    if report_path:
        payload = {
            "statistic": None if math.isnan(result.statistic) else result.statistic,
            "df": result.df,
            "p_value": None if math.isnan(result.p_value) else result.p_value,
            "alpha": result.alpha,
            "reject": result.reject,
            "inconclusive": result.inconclusive,
            "covariance_kind": result.covariance_kind,
            "condition_number": (None if math.isnan(result.condition_number)
                                 else result.condition_number),
            "critical_value": result.critical_value,
            "note": result.note,
        }
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    if result.inconclusive:
        sys.exit(3)


@main.command("experiment")
@click.option("--full", is_flag=True,
              help="Full-scale sweep (1000 replications, up to 3000 points).")
@click.option("--output", "-o", type=click.Path(), default="experiment.csv",
              show_default=True)
@click.option("--no-plot", is_flag=True, help="Skip the figure next to the CSV.")
@click.pass_context
def experiment_cmd(ctx, full, output, no_plot):
    """Run the error-rate sweep; writes CSV, run metadata and a figure."""
    if ctx.obj.get("config_path"):
        try:
            cfg = ScenarioConfig.from_dict(_load_json(ctx.obj["config_path"]))
        except ValueError as err:
            _fail_config(str(err))
        if full:
            _fail_config("--full cannot be combined with --config")
    else:
        cfg = default_scenario(full=full)
    if ctx.obj.get("seed") is not None:
        cfg = ScenarioConfig.from_dict(
            {**cfg.to_dict(), "master_seed": ctx.obj["seed"]}
        )
    workers = ctx.obj.get("threads", 1)
    started = time.time()
    try:
        table, metadata = run_scenario(cfg, workers=workers)
    except (ValueError, CalibrationError) as err:
        _fail_config(str(err))
    emit_table(table, output)
    metadata["wall_seconds"] = round(time.time() - started, 3)
    metadata["versions"] = {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "markgof": __version__,
    }
    meta_path = _with_suffix(output, ".meta.json")
    write_metadata(metadata, meta_path)
    outputs = [output, meta_path]
    if not no_plot:
        from .report import render_error_rates

        fig_path = _with_suffix(output, ".png")
        render_error_rates(table, fig_path, alpha=cfg.alpha)
        outputs.append(fig_path)
    click.echo("wrote " + ", ".join(str(p) for p in outputs))
    frac = table.inconclusive_fraction
    if frac > _INCONCLUSIVE_EXIT_FRACTION:
        click.echo(f"warning: {frac:.1%} of outcomes inconclusive", err=True)
        sys.exit(3)


def _with_suffix(csv_path: str, suffix: str) -> str:
    base = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return base + suffix


if __name__ == "__main__":
    main()
