import pytest

from swirlring.errors import (ConfigError, ConvergenceError, FitError, GeometryError, KernelError,
                              LinearSolverError, SweepError, ValidationFailure)


@pytest.mark.parametrize('error, code, status', [
    (ConfigError('params.beta', 'out of range'), 'config', 2),
    (GeometryError('grid too coarse'), 'geometry', 2),
    (LinearSolverError('cg stalled', residual=1e-3), 'linear_solver', 3),
    (ConvergenceError('not converged'), 'not_converged', 3),
    (SweepError('all failed'), 'sweep', 3),
    (FitError('degenerate'), 'fit', 3),
    (KernelError('quadrature'), 'kernel', 3),
    (ValidationFailure(['kernel_oracle']), 'validation', 4),
])
def test_codes_and_exit_status(error, code, status):
    assert error.code == code
    assert error.exit_status == status
    assert error.to_dict()['code'] == code


def test_config_error_names_the_key():
    error = ConfigError('domain.n_z', 'must be odd')
    assert str(error) == 'domain.n_z: must be odd'
    assert error.to_dict()['details'] == {'key': 'domain.n_z'}
    assert isinstance(error, ValueError)


def test_validation_failure_lists_checks():
    error = ValidationFailure(['a', 'b'])
    assert error.failed == ['a', 'b']
    assert error.message == '2 check(s) failed: a, b'
