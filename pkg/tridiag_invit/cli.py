""" Sets up command line commands """
import functools
import os

import click
from flask import Config, Flask, current_app
from flask.cli import FlaskGroup, with_appcontext

from .bench import (RunConfig, compare_backends, format_comparison, format_summary, format_sweep,
                    run_pipeline, sweep_sizes)
from .invit import BACKENDS
from .matgen import FAMILIES
from .spectrum import ToleranceError

# command line option -> config key
OPTION_KEYS = {
    "family": "FAMILY",
    "n": "N",
    "blocks": "BLOCKS",
    "delta": "DELTA",
    "backend": "BACKEND",
    "threads": "THREADS",
    "seed": "SEED",
    "tol": "TOL",
    "out": "OUTPUT_PATH",
    "verify": "VERIFY",
}


def experiment_options(func):
    """ Options shared by every experiment command; unset options fall back to the app config """
    options = [
        click.option("--family", type=click.Choice(FAMILIES), help="Matrix family."),
        click.option("--blocks", type=click.IntRange(min=1),
                     help="Number of 21x21 blocks of a glued Wilkinson matrix."),
        click.option("--delta", type=float, help="Glue value of a glued Wilkinson matrix."),
        click.option("--threads", type=click.IntRange(min=1), help="Worker threads."),
        click.option("--seed", type=int, help="Seed of the matrix and the starting vectors."),
        click.option("--tol", type=float, help="Bisection half-width."),
        click.option("--out", type=click.Path(dir_okay=False), help="CSV file to append to."),
        click.option("--verify/--no-verify", default=None,
                     help="Check results against thresholds and a dense solver."),
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="Python file of KEY = value settings."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def resolve_config(options: dict) -> RunConfig:
    """ App config, then the --config file, then command line flags """
    settings = Config(current_app.root_path, dict(current_app.config))

    config_path = options.pop("config_path", None)
    if config_path:
        try:
            settings.from_pyfile(os.path.abspath(config_path))
        except Exception as error:  # pylint: disable=broad-except
            raise click.BadParameter(
                f"{config_path} is not a valid settings file: {error}",
                param_hint="--config") from error

    for option, value in options.items():
        if value is not None and option in OPTION_KEYS:
            settings[OPTION_KEYS[option]] = value

    try:
        return RunConfig.from_mapping(settings)
    except (TypeError, ValueError) as error:
        raise click.BadParameter(str(error)) from error


def report_run_errors(func):
    """ Exit 2 on a tolerance the matrix cannot resolve, 1 when results cannot be written """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ToleranceError as error:
            raise click.BadParameter(str(error), param_hint="--tol") from error
        except OSError as error:
            current_app.logger.error("Could not write results: %s", error)
            click.echo(f"Could not write results: {error}", err=True)
            raise click.exceptions.Exit(1) from error
    return wrapper


@click.command("run")
@click.option("--n", type=click.IntRange(min=1), help="Matrix dimension (type1, type2).")
@click.option("--backend", type=click.Choice(BACKENDS), help="Reorthogonalization backend.")
@experiment_options
@with_appcontext
@report_run_errors
def run_command(**options):
    """ Run one experiment and append its metrics to the CSV file """
    cfg = resolve_config(options)
    current_app.logger.info("Running %s n=%d with %s", cfg.matrix.family,
                            cfg.matrix.dimension, cfg.backend)

    experiment = run_pipeline(cfg)
    click.echo(format_summary(cfg, experiment.metrics))

    verification = experiment.metrics.verification
    if verification is not None and not verification.passed:
        raise click.exceptions.Exit(1)


@click.command("compare")
@click.option("--n", type=click.IntRange(min=1), help="Matrix dimension (type1, type2).")
@click.option("--backend", "backends", type=click.Choice(BACKENDS), multiple=True,
              help="Backend to include; repeat for each. The first is the baseline.")
@experiment_options
@with_appcontext
@report_run_errors
def compare_command(backends, **options):
    """ Run several backends on the same matrix and print ratios against the first """
    if not backends:
        backends = ("mgs", "cwy_packed")
    if len(backends) < 2:
        raise click.BadParameter("give at least two backends", param_hint="--backend")

    cfg = resolve_config(options)
    report = compare_backends(cfg, backends)
    click.echo(format_comparison(report))

    if cfg.verify and any(not row.metrics.verification.passed for row in report.rows):
        raise click.exceptions.Exit(1)


@click.command("sweep")
@click.option("--n", "sizes", type=click.IntRange(min=1), multiple=True, required=True,
              help="Matrix size (blocks for glued_wilkinson); repeat for each.")
@click.option("--backend", "backends", type=click.Choice(BACKENDS), multiple=True,
              help="Backends to time; the first is t, the last is t_cwy.")
@experiment_options
@with_appcontext
@report_run_errors
def sweep_command(sizes, backends, **options):
    """ Compare backends over several matrix sizes """
    if not backends:
        backends = ("mgs", "cwy_packed")
    if len(backends) < 2:
        raise click.BadParameter("give at least two backends", param_hint="--backend")

    cfg = resolve_config(options)
    reports = sweep_sizes(cfg, sizes, backends)
    for report in reports:
        click.echo(format_comparison(report))
        click.echo()
    click.echo(format_sweep(reports))

    if cfg.verify and any(
            not row.metrics.verification.passed for report in reports for row in report.rows):
        raise click.exceptions.Exit(1)


def add_cli_commands(app: Flask):
    """ Add all cli commands to app """
    app.cli.add_command(run_command)
    app.cli.add_command(compare_command)
    app.cli.add_command(sweep_command)


def main():
    """ Entry point of the tridiag-bench console script """
    from . import create_app

    cli = FlaskGroup(
        create_app=create_app,
        add_default_commands=False,
        add_version_option=False,
        help="Benchmarks of inverse iteration with compact WY reorthogonalization.",
    )
    cli.main(prog_name="tridiag-bench")
