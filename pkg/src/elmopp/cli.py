"""Command-line pipeline: inflow synthesis, training, trials, sweeps, stats."""

import pathlib
import sys
from dataclasses import replace

import click
import numpy as np

from . import chaos, plots, simulation, stats
from .config import ConfigError, RunConfig, load_run_config, write_manifest
from .predictor import PredictorModel, load_checkpoint, save_checkpoint, train


def _load_context(config_path, seed, out_dir) -> tuple[RunConfig, int, pathlib.Path]:
    try:
        rc = load_run_config(config_path) if config_path else RunConfig()
    except ConfigError as exc:
        raise click.ClickException(f"config error: {exc}") from exc
    except OSError as exc:
        raise click.ClickException(str(exc)) from exc
    effective_seed = seed if seed is not None else rc.sim.seed
    rc.sim = replace(rc.sim, seed=effective_seed)
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return rc, effective_seed, out


@click.group()
@click.option("--seed", type=click.IntRange(min=0), default=None,
              help="Master seed; overrides the configured one.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Run configuration file.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out",
              help="Output directory (created if missing).")
@click.pass_context
def main(ctx, seed, config_path, out_dir):
    """Traffic-signal control experiments on a single four-leg intersection."""
    ctx.obj = _load_context(config_path, seed, out_dir)


@main.command("gen-inflow")
@click.option("--n-steps", type=int, default=2000, show_default=True)
@click.option("--total", type=float, default=800.0, show_default=True,
              help="Vehicle budget carried by the whole series.")
@click.option("--out-file", default="inflow.csv", show_default=True)
@click.pass_obj
def gen_inflow(obj, n_steps, total, out_file):
    """Write a chaotic inflow series CSV and print its vehicle total."""
    rc, seed, out = obj
    try:
        series = chaos.make_inflow(seed, n_steps=n_steps, total=total)
        path = out / out_file
        chaos.write_inflow_csv(path, series)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    write_manifest(out, "gen-inflow", seed, rc,
                   {"n_steps": n_steps, "total": total, "out_file": out_file})
    click.echo(f"wrote {path} (sum = {series.sum()!r})")


@main.command("train")
@click.option("--epochs", type=int, default=None, help="Override the configured epochs.")
@click.option("--model-file", default="model.npz", show_default=True)
@click.pass_obj
def cmd_train(obj, epochs, model_file):
    """Pre-train the inflow predictor and save a checkpoint plus loss log."""
    rc, seed, out = obj
    tc = rc.train if epochs is None else replace(rc.train, epochs=epochs)
    cfg = rc.sim
    try:
        series = chaos.experiment_series(seed, cfg.total_inflow(),
                                         n_train=cfg.n_train, n_sim=cfg.n_steps)
        model = PredictorModel.new(seed, depth=cfg.predictor_depth,
                                   hidden_size=tc.units, learning_rate=tc.learning_rate)
        losses = train(model, series, tc)
        save_checkpoint(model, out / model_file)
        with open(out / "training_loss.csv", "w", newline="") as fh:
            fh.write("epoch,loss\n")
            for i, loss in enumerate(losses, start=1):
                fh.write(f"{i},{loss!r}\n")
        plots.plot_training_loss(losses, out / "training_loss.png")
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    write_manifest(out, "train", seed, rc, {"epochs": tc.epochs, "model_file": model_file})
    click.echo(f"wrote {out / model_file} (final epoch loss = {losses[-1]!r})")


@main.command("simulate")
@click.option("--model", "model_path", type=click.Path(dir_okay=False), default=None,
              help="Predictor checkpoint (required for the elmopp controller).")
@click.option("--controller", type=click.Choice(simulation.CONTROLLERS), default=None,
              help="Override the configured controller.")
@click.option("--trace-file", default="trial.csv", show_default=True)
@click.pass_obj
def simulate(obj, model_path, controller, trace_file):
    """Run one trial and print its throughput."""
    rc, seed, out = obj
    cfg = rc.sim if controller is None else replace(rc.sim, controller=controller)
    model = None
    if cfg.controller == "elmopp":
        if model_path is None:
            raise click.ClickException("the elmopp controller needs --model CHECKPOINT")
        try:
            model = load_checkpoint(model_path)
        except (OSError, KeyError, ValueError) as exc:
            raise click.ClickException(f"cannot load checkpoint {model_path}: {exc}") from exc
    try:
        series = chaos.experiment_series(seed, cfg.total_inflow(),
                                         n_train=cfg.n_train, n_sim=cfg.n_steps)
        result = simulation.run_trial(cfg, series[cfg.n_train:], model)
        simulation.write_trial_csv(out / trace_file, result)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    write_manifest(out, "simulate", seed, rc,
                   {"controller": cfg.controller, "model": model_path or "-"})
    click.echo(f"throughput = {result.throughput!r} vehicles/s "
               f"(discharged {result.discharged_vehicles!r} of "
               f"{result.initial_vehicles + result.inflow_vehicles!r})")


@main.command("sweep")
@click.option("--totals", default=None,
              help="Comma-separated vehicle budgets (default from config).")
@click.option("--trials", type=int, default=None)
@click.option("--controllers", default=None,
              help="Comma-separated controller kinds (default from config).")
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.pass_obj
def sweep(obj, totals, trials, controllers, figures):
    """Run the budget sweep; write sweep CSV, pairwise t-tests, and figures."""
    rc, seed, out = obj
    sw = rc.sweep
    if totals is not None:
        sw = replace(sw, totals=tuple(float(t) for t in totals.split(",")))
    if trials is not None:
        sw = replace(sw, trials=trials)
    if controllers is not None:
        sw = replace(sw, controllers=tuple(c.strip() for c in controllers.split(",")))
    try:
        rows = simulation.run_sweep(rc.sim, sw.totals, sw.trials, sw.controllers,
                                    master_seed=seed, train_cfg=rc.train)
        simulation.write_sweep_csv(out / "sweep.csv", rows)
        tests = simulation.sweep_ttests(rows)
        stats.write_stats_csv(out / "stats.csv", tests)
        if figures:
            plots.plot_throughput_sweep(rows, out / "throughput_vs_total.png")
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    write_manifest(out, "sweep", seed, rc,
                   {"totals": ",".join(str(t) for t in sw.totals),
                    "trials": sw.trials,
                    "controllers": ",".join(sw.controllers)})
    for kind, summary in simulation.sweep_summaries(rows).items():
        click.echo(f"{kind}: mean {summary.mean!r} sd {summary.sd!r} (n={summary.n})")
    for name, result in tests:
        verdict = "significant" if result.significant else "not significant"
        click.echo(f"{name}: t = {result.t:.4f} vs critical {result.critical:.4f} -> {verdict}")


@main.command("paper-table")
@click.pass_obj
def paper_table(obj):
    """Recompute the benchmark t-test table from the published summaries."""
    rc, seed, out = obj
    table = stats.reference_table()
    try:
        stats.write_stats_csv(out / "paper_table.csv", table)
    except OSError as exc:
        raise click.ClickException(str(exc)) from exc
    write_manifest(out, "paper-table", seed, rc, {})
    click.echo(f"{'comparison':<18}{'t':>10}{'critical':>10}  significant")
    for name, r in table:
        click.echo(f"{name:<18}{r.t:>10.4f}{r.critical:>10.4f}  {r.significant}")


@main.command("report")
@click.option("--sweep-csv", default=None, help="Existing sweep CSV (default OUT/sweep.csv).")
@click.pass_obj
def report(obj, sweep_csv):
    """Render figures and stats from an existing sweep CSV."""
    rc, seed, out = obj
    path = sweep_csv if sweep_csv is not None else out / "sweep.csv"
    try:
        rows = simulation.read_sweep_csv(path)
        tests = simulation.sweep_ttests(rows)
        stats.write_stats_csv(out / "stats.csv", tests)
        plots.plot_throughput_sweep(rows, out / "throughput_vs_total.png")
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    write_manifest(out, "report", seed, rc, {"sweep_csv": str(path)})
    click.echo(f"wrote {out / 'stats.csv'} and {out / 'throughput_vs_total.png'}")


if __name__ == "__main__":
    sys.exit(main())
