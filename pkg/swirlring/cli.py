"""
Command line: solve, sweep, kernel-check, validate, history.

Exit status: 0 ok, 2 configuration error, 3 non-convergence, 4 validation failure.
"""
import logging
from datetime import datetime
from functools import wraps
from pathlib import Path

import click
import pandas as pd
from flask import current_app
from flask.cli import with_appcontext

from swirlring.config import load_config
from swirlring.errors import (ConfigError, ConvergenceError, SweepError, SwirlringError,
                              ValidationFailure)

logger = logging.getLogger(__name__)


def exits_with_status(f):
    """Map library errors onto exit statuses."""
    @wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except SwirlringError as e:
            logger.error(f"{e.code}: {e.message}")
            click.echo(f"error [{e.code}]: {e.message}", err=True)
            raise SystemExit(e.exit_status)
    return wrapper


def output_root(config, override=None):
    """--output, then SWIRLRING_OUTPUT, then the config's output.directory."""
    return Path(override or current_app.config.get('SWIRLRING_OUTPUT') or config.output.directory)


def _parse_betas(text):
    try:
        return [float(b) for b in text.split(',') if b.strip()]
    except ValueError:
        raise ConfigError('--betas', f"expected comma-separated numbers (got {text!r})") from None


def solve_and_record(config, root, command='solve', sweep_id=None):
    """
    Solve the configured case, write its artifacts and ledger row.

    Returns:
        (solution, record, directory)
    """
    from swirlring.diagnostics import build_record
    from swirlring.helpers import record_run_start
    from swirlring.models import Run, db
    from swirlring.output import run_directory, write_solution
    from swirlring.variational import solve

    params = config.params
    label = config.label_for()
    run = record_run_start(db, Run, label, command, params, config.domain.kind.value, sweep_id=sweep_id)
    try:
        solution = solve(params, config.make_domain(), config.domain.n_r, config.domain.n_z,
                         **config.band_options())
        record = build_record(solution, n_tests=config.n_tests, seed=config.seed)
    except SwirlringError as e:
        run.mark_finished('failed', error=e)
        db.session.commit()
        raise

    directory = run_directory(root, label)
    write_solution(directory, solution, record, config=config, fields=config.output.fields,
                   write_grid_file=config.output.grid, precision=config.output.precision)
    run.output_dir = str(directory)
    if solution.converged:
        run.mark_finished('converged', solution=solution)
    else:
        error = ConvergenceError(f"not converged after {solution.iterations} iterations")
        run.mark_finished('not_converged', solution=solution, error=error)
    db.session.commit()
    return solution, record, directory


@click.command('solve')
@click.option('-c', '--config', 'config_path', required=True, type=click.Path(dir_okay=False),
              help='Run configuration (JSON)')
@click.option('--output', 'output_dir', default=None, help='Output root (overrides SWIRLRING_OUTPUT)')
@with_appcontext
@exits_with_status
def solve_command(config_path, output_dir):
    """Solve one case and write fields plus the diagnostics record."""
    config = load_config(config_path)
    root = output_root(config, output_dir)
    solution, record, directory = solve_and_record(config, root)
    click.echo(f"{directory}")
    for key in ('mu', 'E', 'circ', 'diam', 'dist_ring', 'iterations'):
        click.echo(f"  {key} = {record[key]}")
    if not solution.converged:
        raise ConvergenceError(f"fixed point not converged after {solution.iterations} iterations "
                               f"(artifacts written to {directory})")


@click.command('sweep')
@click.option('-c', '--config', 'config_path', required=True, type=click.Path(dir_okay=False),
              help='Run configuration (JSON)')
@click.option('--betas', default=None, help='Comma-separated beta values, e.g. 1e-2,3e-3,1e-3')
@click.option('--workers', type=int, default=None, help='Parallel members (default SWIRLRING_WORKERS)')
@click.option('--output', 'output_dir', default=None, help='Output root (overrides SWIRLRING_OUTPUT)')
@with_appcontext
@exits_with_status
def sweep_command(config_path, betas, workers, output_dir):
    """Solve over decreasing beta and fit mu and E against log(1/beta)."""
    from swirlring.asymptotics import check_betas, run_sweep, sweep_progress, sweep_table
    from swirlring.models import Run, Sweep, db
    from swirlring.output import format_record, run_directory, write_record, write_solution, write_table

    config = load_config(config_path)
    beta_list = _parse_betas(betas) if betas else list(config.betas or [config.params.beta])
    beta_list = check_betas(beta_list)
    root = output_root(config, output_dir)
    base_label = f"{config.output.label or config.domain.kind.value} sweep"
    directory = run_directory(root, base_label)

    sweep = Sweep(label=base_label, domain_kind=config.domain.kind.value,
                  betas=','.join(f'{b:g}' for b in beta_list), W=config.params.W,
                  alpha=config.params.alpha, status='running', output_dir=str(directory))
    db.session.add(sweep)
    db.session.commit()

    def member_done(beta, row, solution):
        label = config.label_for(beta)
        run = Run(label=label, command='sweep', domain_kind=config.domain.kind.value, beta=beta,
                  W=config.params.W, alpha=config.params.alpha, sweep_id=sweep.id)
        if solution is not None:
            member_dir = run_directory(directory, label)
            write_solution(member_dir, solution, {k: v for k, v in row.items() if k not in ('status', 'error', 'error_code')},
                           config=config, fields=config.output.fields,
                           write_grid_file=config.output.grid, precision=config.output.precision)
            run.output_dir = str(member_dir)
        error = SwirlringError(row['error']) if row.get('error') else None
        if error is not None:
            error.code = row.get('error_code', 'error')
        run.mark_finished(row['status'], solution=solution, error=error)
        db.session.add(run)
        db.session.commit()
        progress = sweep_progress(base_label)
        count = f" [{progress['done']}/{progress['total']}, {progress['failed']} failed]" if progress else ''
        click.echo(f"  beta={beta:g}: {row['status']}{count}")

    if workers is None:
        workers = current_app.config.get('SWIRLRING_WORKERS')
    try:
        records = run_sweep(config, beta_list, workers=workers, on_member_done=member_done, label=base_label)
    except SweepError as e:
        sweep.status = 'failed'
        sweep.error_message = e.message
        sweep.finished_at = datetime.utcnow()
        db.session.commit()
        raise

    write_table(directory / 'sweep.csv', sweep_table(records), precision=config.output.precision)
    summary = records.summary()
    write_record(directory / 'fit_summary.txt', summary)

    sweep.status = 'converged' if not records.failures else 'not_converged'
    sweep.mu_slope = summary.get('mu_slope')
    sweep.E_slope = summary.get('E_slope')
    sweep.diam_power = summary.get('diam_power_slope')
    sweep.predicted_r_star = summary.get('predicted_r_star')
    sweep.predicted_mu_slope = summary.get('predicted_mu_slope')
    sweep.predicted_E_slope = summary.get('predicted_E_slope')
    sweep.finished_at = datetime.utcnow()
    db.session.commit()

    click.echo(f"{directory}")
    click.echo(format_record(summary), nl=False)
    if records.failures:
        raise ConvergenceError(f"{len(records.failures)} of {len(beta_list)} sweep members did not converge")


@click.command('kernel-check')
@click.option('-n', '--samples', 'count', type=int, default=1000, show_default=True, help='Random point pairs')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--method', type=click.Choice(['quad', 'elliptic']), default='quad', show_default=True)
@click.option('--output', 'output_dir', default=None, help='Output root (overrides SWIRLRING_OUTPUT)')
@with_appcontext
@exits_with_status
def kernel_check_command(count, seed, method, output_dir):
    """Sample the ring kernel against the reference quadrature and the bound."""
    from swirlring.kernel import kernel_samples, ring_G_reference
    from swirlring.output import run_directory, write_table
    from swirlring.validation import KERNEL_ORACLE_RTOL

    if count < 1:
        raise ConfigError('--samples', "must be at least 1")
    rows = []
    for sample in kernel_samples(count, seed=seed, method=method):
        row = sample.to_dict()
        row['G_reference'] = ring_G_reference(sample.r, sample.z, sample.rp, sample.zp)
        row['rel_error'] = abs(sample.G / row['G_reference'] - 1.0)
        row['bound_ok'] = sample.G <= sample.bound
        rows.append(row)
    frame = pd.DataFrame(rows)
    root = Path(output_dir or current_app.config.get('SWIRLRING_OUTPUT') or 'runs')
    path = write_table(run_directory(root, 'kernel check') / 'kernel_samples.csv', frame)

    failed = []
    if frame['rel_error'].max() > KERNEL_ORACLE_RTOL:
        failed.append('kernel_oracle')
    if not frame['bound_ok'].all():
        failed.append('kernel_bound')
    click.echo(f"{path}")
    click.echo(f"  max rel error {frame['rel_error'].max():.3e}, bound holds on "
               f"{int(frame['bound_ok'].sum())}/{len(frame)} samples")
    if failed:
        raise ValidationFailure(failed)


@click.command('validate')
@with_appcontext
@exits_with_status
def validate_command():
    """Run the property suite; nonzero exit on any failure."""
    from swirlring.validation import run_validation

    def report(name, ok, detail):
        click.echo(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    run_validation(report=report)


@click.command('history')
@click.option('--limit', type=int, default=20, show_default=True)
@click.option('--kind', 'domain_kind', default=None, help='Only runs of this domain kind')
@with_appcontext
def history_command(limit, domain_kind):
    """Recent runs and sweeps from the ledger."""
    from swirlring.helpers import get_recent_runs, get_recent_sweeps, get_status_counts
    from swirlring.models import Run, Sweep, db

    counts = get_status_counts(db, Run)
    click.echo(' '.join(f"{status}={count}" for status, count in counts.items()))
    for run in get_recent_runs(Run, limit=limit, domain_kind=domain_kind):
        mu = f"{run.mu:.6g}" if run.mu is not None else '-'
        click.echo(f"{run.id:5d} {run.started_at:%Y-%m-%d %H:%M} {run.status:13s} "
                   f"{run.domain_kind:13s} beta={run.beta:<8g} mu={mu} {run.label}")
    for sweep in get_recent_sweeps(Sweep, limit=min(limit, 10)):
        click.echo(f"sweep {sweep.id}: {sweep.label} [{sweep.status}] betas={sweep.betas} "
                   f"mu_slope={sweep.mu_slope} predicted={sweep.predicted_mu_slope}")


COMMANDS = (solve_command, sweep_command, kernel_check_command, validate_command, history_command)


def run(command, config=None, **options):
    """
    Run a subcommand from Python and return its exit status.

    Must be called inside an app context. Options map to flags by name
    (samples=20 -> --samples 20); list values are comma-joined.

    Used by: scripts and tests that drive the pipeline without a shell.
    """
    commands = {c.name: c for c in COMMANDS}
    if command not in commands:
        raise ConfigError('command', f"unknown command {command!r} (expected one of {', '.join(commands)})")

    args = ['--config', str(config)] if config is not None else []
    for key, value in options.items():
        if value is None or value is False:
            continue
        flag = '--' + key.replace('_', '-')
        if value is True:
            args.append(flag)
        elif isinstance(value, (list, tuple)):
            args.extend([flag, ','.join(f'{v:g}' for v in value)])
        else:
            args.extend([flag, str(value)])

    logger.info(f"run {command} {' '.join(args)}")
    try:
        commands[command].main(args=args, prog_name=command, standalone_mode=False)
    except SystemExit as e:
        return e.code or 0
    except click.ClickException as e:
        e.show()
        return e.exit_code
    return 0


def register_commands(app):
    for command in COMMANDS:
        app.cli.add_command(command)
