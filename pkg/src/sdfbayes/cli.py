"""Command-line entry points: scenario inspection, simulation, serving."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import click
import numpy as np

from .core import BRANCH_TERMINATED, SdfConfig
from .reports import (FORMATS, emit_report, run_log_dict, write_heatmap_csv)
from .sampler import SamplerSettings
from .scenarios import SCENARIO_NAMES, builtin_scenario
from .simulate import Experiment, aggregate, parse_algorithm, run_replicates
from .simulate import run_trial as _run_trial  # noqa: F401  (re-exported for scripting)
from .suites import SUITE_NAMES, experiment_suite


@click.group()
@click.version_option(package_name="artifact", prog_name="sdfbayes")
def main():
    """Safe dose-combination finding: simulation suites and the trial service."""


@main.group()
def scenarios():
    """Inspect the built-in ground-truth scenarios."""


@scenarios.command("list")
def scenarios_list():
    for name in SCENARIO_NAMES:
        sc = builtin_scenario(name)
        mtds = ", ".join(f"({j},{k})" for j, k in sorted(sc.mtd_set))
        click.echo(f"{name:4s} {sc.grid.J}x{sc.grid.K}  MTD: {mtds}")


@scenarios.command("show")
@click.argument("name")
def scenarios_show(name):
    try:
        sc = builtin_scenario(name)
    except KeyError as exc:
        raise click.ClickException(str(exc.args[0]))
    click.echo(sc.to_json())


def _sampler_overrides(draws, burn, warm_burn) -> SamplerSettings | None:
    if draws is None and burn is None and warm_burn is None:
        return None
    base = SamplerSettings()
    return SamplerSettings(
        n_keep=draws if draws is not None else base.n_keep,
        n_burn=burn if burn is not None else base.n_burn,
        n_burn_warm=warm_burn if warm_burn is not None else base.n_burn_warm,
    )


def _slug(experiment: Experiment) -> str:
    label = experiment.row_label.replace(" ", "_").replace("=", "")
    return f"{label}-{experiment.algorithm}"


def _trace_single_run(experiment: Experiment, seed: int, settings, trace_path: Path):
    """One fully traced trial: per-round retained chain draws as CSV."""
    scenario = experiment.scenarios[0]
    outcome_seq, engine_seq = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.Generator(np.random.PCG64(outcome_seq))
    from .simulate import build_engine
    base, _ = parse_algorithm(experiment.algorithm)
    engine = build_engine(base, experiment.config, scenario.grid,
                           experiment.prior, settings, engine_seq)
    with trace_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "sweep", "theta0", "theta1", "theta2", "theta3"])
        for t in range(1, experiment.config.T + 1):
            decision = engine.decide()
            for sweep, theta in enumerate(engine.samples.thetas):
                writer.writerow([t, sweep] + [f"{x:.8g}" for x in theta])
            if decision.branch == BRANCH_TERMINATED:
                break
            j, k = decision.chosen
            y = int(rng.random() < scenario.true_tox[j - 1, k - 1])
            engine.record(decision.chosen, y)
    click.echo(f"wrote chain traces to {trace_path}")


@main.command()
@click.option("--suite", "suite_name", type=click.Choice(SUITE_NAMES), default=None,
              help="run a catalogued suite instead of a single arm")
@click.option("--scenario", "scenario_names", multiple=True,
              help="scenario name; repeat for multi-group algorithms")
@click.option("--algorithm", default=None, help="e.g. sdf, df, sota, sdf-ar, sdf-ep")
@click.option("--runs", default=500, show_default=True)
@click.option("--seed", default=42, show_default=True, help="seed base; run i uses seed+i")
@click.option("--workers", default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), envvar="SDFBAYES_OUT",
              default="results", show_default=True)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="csv",
              show_default=True)
@click.option("--budget", "trial_budget", type=int, default=None,
              help="patients per trial (default 60, or 80 for multi-group)")
@click.option("--draws", type=int, default=None, help="retained posterior draws per round")
@click.option("--burn", type=int, default=None, help="cold-start burn-in sweeps")
@click.option("--warm-burn", type=int, default=None, help="warm-start burn-in sweeps")
@click.option("--log-decisions", is_flag=True, help="write per-run JSON-lines logs")
@click.option("--heatmaps/--no-heatmaps", default=True, show_default=True,
              help="write mean-allocation CSV matrices")
@click.option("--trace-chains", type=click.Path(dir_okay=False), default=None,
              help="single traced run: per-round chain draws as CSV")
def simulate(suite_name, scenario_names, algorithm, runs, seed, workers, out, fmt,
             trial_budget, draws, burn, warm_burn, log_decisions, heatmaps,
             trace_chains):
    """Run Monte Carlo trial replicates and write an aggregate report."""
    settings = _sampler_overrides(draws, burn, warm_burn)
    if suite_name:
        if scenario_names or algorithm:
            raise click.UsageError("--suite and --scenario/--algorithm are exclusive")
        experiments = experiment_suite(suite_name)
        stem = suite_name
    else:
        if not scenario_names or not algorithm:
            raise click.UsageError("need --suite, or --scenario and --algorithm")
        try:
            scs = tuple(builtin_scenario(n) for n in scenario_names)
            _, mode = parse_algorithm(algorithm)
        except (KeyError, ValueError) as exc:
            raise click.ClickException(str(exc.args[0]))
        config = SdfConfig(T=trial_budget if trial_budget
                           else (60 if mode is None else 80))
        experiments = [Experiment(scenarios=scs, algorithm=algorithm, config=config)]
        stem = f"{'+'.join(s.name for s in scs)}-{algorithm}"

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if trace_chains:
        if suite_name or len(experiments) != 1:
            raise click.UsageError("--trace-chains needs a single --scenario arm")
        _trace_single_run(experiments[0], seed, settings, Path(trace_chains))
        return

    reports = []
    for experiment in experiments:
        results = run_replicates(experiment, runs, seed_base=seed, workers=workers,
                                 sampler_settings=settings)
        report = aggregate(results, experiment)
        reports.append(report)
        click.echo(f"{report.scenario:14s} {report.algorithm:10s} "
                   f"viol={report.safety_viol:.3f}±{report.safety_ci:.3f} "
                   f"err={report.err_rate:.3f}±{report.err_ci:.3f} "
                   f"dlt={report.dlt_rate:.3f}")
        if log_decisions:
            log_path = out_dir / f"{_slug(experiment)}-runs.jsonl"
            with log_path.open("w") as fh:
                for r in results:
                    fh.write(json.dumps(run_log_dict(r)) + "\n")
        if heatmaps:
            hm_dir = out_dir / "heatmaps"
            hm_dir.mkdir(exist_ok=True)
            write_heatmap_csv(report, hm_dir / f"{_slug(experiment)}.csv")

    suffix = {"csv": "csv", "json": "json", "md": "md"}[fmt]
    path = emit_report(reports, fmt, out_dir / f"{stem}.{suffix}")
    click.echo(f"wrote {path}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False), default="./sessions",
              show_default=True)
@click.option("--cors-origin", multiple=True,
              help="allowed console origin; repeatable")
@click.option("--console", type=click.Path(exists=True, file_okay=False),
              default=None, help="serve the built trial console from this directory")
def serve(host, port, data_dir, cors_origin, console):
    """Start the live trial HTTP service."""
    import uvicorn

    from .service import create_app
    app = create_app(Path(data_dir), cors_origins=list(cors_origin) or None,
                     console_dir=console)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
