import json
import math
from pathlib import Path

import numpy as np
import pytest

from swirlring.asymptotics import (active_sweeps, check_betas, fit_log_slope, fit_power, gamma2_prime,
                                   kelvin_hicks_speed, predict, r_star_exterior, r_star_interior,
                                   run_sweep, sweep_progress, sweep_table)
from swirlring.config import load_config, parse_config
from swirlring.errors import ConfigError, ConvergenceError, FitError, GeometryError, SweepError
from swirlring.validation import concentration_gates

CONFIGS = Path(__file__).resolve().parents[1] / 'configs'


def test_r_star_whole_space():
    assert r_star_interior(1.0 / (2 * math.pi)) == pytest.approx(0.5)


def test_r_star_cylinder():
    assert r_star_interior(1.0 / (4 * math.pi), d=2.0) == pytest.approx(1.0)
    # below the threshold the maximizer sits on the wall
    assert r_star_interior(1.0 / (16 * math.pi), d=2.0) == 2.0


def test_r_star_exterior_root():
    # W = 1/(12 pi), d = 1: r* is the root of 2t^3 - 6t^2 + 1 in [1, 6]
    t = r_star_exterior(1.0 / (12 * math.pi), 1.0)
    assert 2 * t ** 3 - 6 * t ** 2 + 1 == pytest.approx(0.0, abs=1e-10)
    assert t == pytest.approx(2.942, abs=1e-3)
    assert gamma2_prime(t, 1.0 / (12 * math.pi), 1.0) == pytest.approx(0.0, abs=1e-12)


def test_r_star_exterior_on_the_ball():
    assert r_star_exterior(1.0 / (6 * math.pi), 1.0) == 1.0
    assert r_star_exterior(1.0, 0.5) == 0.5


def test_kelvin_hicks_speed():
    assert kelvin_hicks_speed(1.0, 1.0, 8.0) == pytest.approx(-1.0 / (16 * math.pi))


@pytest.mark.parametrize('kind, W, d', [
    ('whole_space', 1.0 / (4 * math.pi), None),
    ('cylinder', 1.0 / (4 * math.pi), 2.0),
    ('cylinder', 1.0 / (16 * math.pi), 2.0),
    ('exterior_ball', 1.0 / (12 * math.pi), 1.0),
])
def test_slope_identity(kind, W, d):
    assert predict(kind, W, d).slope_identity_gap() == pytest.approx(0.0, abs=1e-15)


def test_whole_space_slopes():
    prediction = predict('whole_space', 1.0 / (4 * math.pi))
    assert prediction.r_star == pytest.approx(1.0)
    assert prediction.mu_slope == pytest.approx(3.0 / (8 * math.pi))
    assert prediction.E_slope == pytest.approx(1.0 / (8 * math.pi))
    assert prediction.translation_speed_coeff == pytest.approx(1.0 / (4 * math.pi))
    assert prediction.to_dict()['kind'] == 'whole_space'


def linear_rows(betas, slope=3.0, intercept=2.0):
    return [{'beta': b, 'mu': intercept + slope * math.log(1.0 / b), 'diam': 5.0 * b ** 0.5} for b in betas]


def test_fit_log_slope_exact():
    fit = fit_log_slope(linear_rows([1e-2, 3e-3, 1e-3]), 'mu')
    assert fit.slope == pytest.approx(3.0)
    assert fit.intercept == pytest.approx(2.0)
    assert fit.max_residual == pytest.approx(0.0, abs=1e-12)


def test_fit_power_exact():
    fit = fit_power(linear_rows([1e-2, 3e-3, 1e-3]), 'diam')
    assert fit.slope == pytest.approx(0.5)


def test_fit_skips_failed_members():
    rows = linear_rows([1e-2, 3e-3, 1e-3, 5e-4])
    for row in rows:
        row['status'] = 'converged'
    rows[-1].update(status='not_converged', mu=1e6)
    assert fit_log_slope(rows, 'mu').slope == pytest.approx(3.0)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_log_slope(linear_rows([1e-2, 1e-3]), 'mu')
    with pytest.raises(FitError):
        fit_log_slope(linear_rows([1e-2, 3e-3, 1e-3]), 'E')
    with pytest.raises(FitError):
        fit_power([{'beta': b, 'diam': -1.0} for b in (1e-2, 3e-3, 1e-3)], 'diam')


def test_check_betas():
    assert check_betas([1e-3, 1e-2, 3e-3]) == [1e-2, 3e-3, 1e-3]
    with pytest.raises(ConfigError):
        check_betas([1e-2, 1e-3])
    with pytest.raises(ConfigError):
        check_betas([1e-2, 1e-3, 1e-3])


@pytest.fixture
def sweep_config():
    return parse_config(json.dumps({
        'domain': {'kind': 'whole_space'},
        'params': {'beta': 0.01, 'W': 1.0 / (4 * math.pi)},
    }))


def fake_member(config, beta):
    x = math.log(1.0 / beta)
    record = {'beta': beta, 'W': config.params.W, 'alpha': 0.0, 'domain': 'whole_space',
              'mu': 0.1 + 2.0 * x, 'E': 0.05 + x, 'diam': 4.0 * beta}
    return None, record


def test_run_sweep_fits(sweep_config):
    done = []
    records = run_sweep(sweep_config, [1e-2, 3e-3, 1e-3], workers=2, member=fake_member,
                        on_member_done=lambda beta, row, solution: done.append(beta), label='fake')
    assert sorted(done) == [1e-3, 3e-3, 1e-2]
    assert len(records.succeeded) == 3
    assert 'fake' not in active_sweeps
    summary = records.summary()
    assert summary['mu_slope'] == pytest.approx(2.0)
    assert summary['E_slope'] == pytest.approx(1.0)
    assert summary['diam_power_slope'] == pytest.approx(1.0)
    assert summary['predicted_r_star'] == pytest.approx(1.0)
    table = sweep_table(records)
    assert list(table['beta']) == [1e-2, 3e-3, 1e-3]
    assert np.allclose(table['mu_fit_residual'], 0.0, atol=1e-12)
    assert 'predicted_mu_slope' in table


def test_run_sweep_records_failures(sweep_config):
    def member(config, beta):
        if beta == 1e-3:
            raise ConvergenceError("not converged", record={'beta': beta, 'mu': 1.0})
        return fake_member(config, beta)

    records = run_sweep(sweep_config, [1e-2, 3e-3, 1e-3], workers=1, member=member)
    assert len(records.failures) == 1
    failure = records.failures[0]
    assert failure['status'] == 'not_converged'
    assert failure['error_code'] == 'not_converged'


def test_run_sweep_all_failed(sweep_config):
    def member(config, beta):
        raise GeometryError("grid too coarse")

    with pytest.raises(SweepError):
        run_sweep(sweep_config, [1e-2, 3e-3, 1e-3], workers=1, member=member)


def test_sweep_progress_during_callbacks(sweep_config):
    seen = []
    run_sweep(sweep_config, [1e-2, 3e-3, 1e-3], workers=1, member=fake_member,
              on_member_done=lambda beta, row, solution: seen.append(sweep_progress('counted')),
              label='counted')
    assert [p['done'] for p in seen] == [1, 2, 3]
    assert all(p['total'] == 3 and p['failed'] == 0 for p in seen)
    assert sweep_progress('counted') is None


def test_run_sweep_none_converged(sweep_config):
    def member(config, beta):
        raise ConvergenceError("not converged", record={'beta': beta, 'mu': 1.0})

    with pytest.raises(SweepError) as excinfo:
        run_sweep(sweep_config, [1e-2, 3e-3, 1e-3], workers=1, member=member)
    records = excinfo.value.details['records']
    assert [row['status'] for row in records.rows] == ['not_converged'] * 3


@pytest.mark.slow
@pytest.mark.parametrize('name', ['whole_space.json', 'cylinder.json'])
def test_shipped_sweep_concentrates(name):
    config = load_config(CONFIGS / name)
    records = run_sweep(config, config.betas, workers=1, label=name)
    failed = [(gate, detail) for gate, ok, detail in concentration_gates(records) if not ok]
    assert failed == []
