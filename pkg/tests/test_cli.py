import copy

import pandas as pd
import pytest

import swirlring.validation as validation
from swirlring.errors import ConfigError, ValidationFailure
from swirlring.models import Run, Sweep, db
from swirlring.output import parse_record


def test_commands_registered(app):
    for name in ('solve', 'sweep', 'kernel-check', 'validate', 'history'):
        assert name in app.cli.commands


def test_solve_rejects_bad_beta(runner, write_config, small_config):
    config = copy.deepcopy(small_config)
    config['params']['beta'] = 1.5
    result = runner.invoke(args=['solve', '-c', write_config(config)])
    assert result.exit_code == 2
    assert 'params.beta' in result.output


def test_solve_missing_config(runner, tmp_path):
    result = runner.invoke(args=['solve', '-c', str(tmp_path / 'absent.json')])
    assert result.exit_code == 2


def test_solve_geometry_error_is_recorded(app, runner, write_config, small_config):
    config = copy.deepcopy(small_config)
    # a disc of radius ~0.006 cannot be resolved on a 33 x 33 uniform grid
    config['domain']['refine'] = False
    config['params']['beta'] = 0.01
    result = runner.invoke(args=['solve', '-c', write_config(config)])
    assert result.exit_code == 2
    with app.app_context():
        run = Run.query.one()
        assert run.status == 'failed'
        assert run.error_code == 'geometry'


def test_sweep_needs_three_betas(app, runner, write_config, small_config):
    result = runner.invoke(args=['sweep', '-c', write_config(small_config), '--betas', '0.01'])
    assert result.exit_code == 2
    with app.app_context():
        assert Sweep.query.count() == 0


def test_sweep_rejects_malformed_betas(runner, write_config, small_config):
    result = runner.invoke(args=['sweep', '-c', write_config(small_config), '--betas', '0.01,fast,0.001'])
    assert result.exit_code == 2


def test_kernel_check(runner, tmp_path):
    result = runner.invoke(args=['kernel-check', '-n', '20', '--seed', '4'])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(tmp_path / 'runs' / 'kernel-check' / 'kernel_samples.csv')
    assert len(frame) == 20
    assert frame['rel_error'].max() <= 1e-8
    assert frame['bound_ok'].all()


def test_kernel_check_needs_samples(runner):
    result = runner.invoke(args=['kernel-check', '-n', '0'])
    assert result.exit_code == 2


def test_validate_failure_exit_status(runner, monkeypatch):
    def failing(report=None):
        report('kernel_oracle', False, 'forced')
        raise ValidationFailure(['kernel_oracle'])

    monkeypatch.setattr(validation, 'run_validation', failing)
    result = runner.invoke(args=['validate'])
    assert result.exit_code == 4
    assert 'FAIL kernel_oracle' in result.output


def test_run_validation_collects_failures():
    def check_good():
        return 'good', True, ''

    def check_bad():
        return 'bad', False, 'off by one'

    def check_boom():
        raise RuntimeError('exploded')

    seen = []
    with pytest.raises(ValidationFailure) as excinfo:
        validation.run_validation(checks=(check_good, check_bad, check_boom),
                                  report=lambda name, ok, detail: seen.append((name, ok)))
    assert excinfo.value.failed == ['bad', 'boom']
    assert seen == [('good', True), ('bad', False), ('boom', False)]
    assert validation.run_validation(checks=(check_good,)) == [('good', True, '')]


def test_run_dispatches_commands(app, tmp_path):
    from swirlring.cli import run

    with app.app_context():
        assert run('kernel-check', samples=5, seed=1) == 0
        assert len(pd.read_csv(tmp_path / 'runs' / 'kernel-check' / 'kernel_samples.csv')) == 5
        assert run('solve', config=tmp_path / 'absent.json') == 2
        with pytest.raises(ConfigError):
            run('plot')


def test_history(app, runner):
    with app.app_context():
        db.session.add(Run(label='tube beta 0.01', command='solve', domain_kind='cylinder',
                           beta=0.01, W=0.1, status='converged', mu=0.25))
        db.session.commit()
    result = runner.invoke(args=['history'])
    assert result.exit_code == 0
    assert 'converged=1' in result.output
    assert 'tube beta 0.01' in result.output
    result = runner.invoke(args=['history', '--kind', 'whole_space'])
    assert 'tube beta 0.01' not in result.output


@pytest.mark.slow
def test_solve_writes_artifacts(app, runner, write_config, small_config, tmp_path):
    result = runner.invoke(args=['solve', '-c', write_config(small_config)])
    assert result.exit_code == 0, result.output
    directory = tmp_path / 'runs' / 'small-beta-0-05'
    for name in ('zeta.txt', 'psi.txt', 'xi.txt', 'grid.txt', 'diagnostics.txt', 'run.json'):
        assert (directory / name).is_file()
    record = parse_record((directory / 'diagnostics.txt').read_text())
    assert record['converged'] is True
    assert record['circ'] == pytest.approx(1.0, abs=1e-9)
    assert record['mu'] > 0
    with app.app_context():
        assert Run.query.one().status == 'converged'


@pytest.mark.slow
def test_validate_passes(runner):
    result = runner.invoke(args=['validate'])
    assert result.exit_code == 0, result.output
