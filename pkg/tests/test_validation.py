import math

import numpy as np
import pytest

from swirlring import validation
from swirlring.asymptotics import SweepRecords, predict


def test_mirrored_axis_is_exact():
    z = validation.mirrored_axis(10, 1.0)
    assert len(z) == 21
    assert np.array_equal(z, -z[::-1])
    assert z[10] == 0.0


def test_manufactured_pair_vanishes_on_boundary():
    grid = validation.manufactured_grid(1)
    psi, zeta = validation.manufactured_pair(grid)
    boundary = ~grid.interior
    assert np.abs(psi[boundary]).max() < 1e-12
    assert np.all(np.isfinite(zeta))


@pytest.mark.parametrize('check', [
    validation.check_polynomial_exactness,
    validation.check_expansion_remainder,
    validation.check_predictions,
    lambda: validation.check_kernel(count=40, seed=5),
])
def test_fast_checks_pass(check):
    name, ok, detail = check()
    assert ok, f"{name}: {detail}"


@pytest.mark.slow
@pytest.mark.parametrize('check', [
    validation.check_elliptic_order,
    validation.check_dipole_annihilation,
    validation.check_kernel_consistency,
    validation.check_small_solve,
    validation.check_cylinder_solve,
    validation.check_exterior_ball_solve,
    validation.check_residual_refinement,
    validation.check_concentration_sweep,
])
def test_slow_checks_pass(check):
    name, ok, detail = check()
    assert ok, f"{name}: {detail}"


def concentrating_records(dist=(0.08, 0.05, 0.03)):
    prediction = predict('whole_space', 1.0 / (2 * math.pi))
    rows = []
    for beta, d in zip((1e-2, 3e-3, 1e-3), dist):
        x = math.log(1.0 / beta)
        rows.append({'beta': beta, 'status': 'converged', 'dist_ring': d, 'diam': 4.0 * beta,
                     'mu': 0.3 + prediction.mu_slope * x, 'E': 0.1 + prediction.E_slope * x})
    return SweepRecords(rows=rows, prediction=prediction)


def test_concentration_gates_pass():
    gates = validation.concentration_gates(concentrating_records())
    assert [name for name, ok, _ in gates if not ok] == []


def test_concentration_gates_catch_a_drifting_core():
    gates = dict((name, ok) for name, ok, _ in validation.concentration_gates(concentrating_records((0.05, 0.08, 0.03))))
    assert not gates['dist_ring_decreasing']
    assert gates['mu_slope'] and gates['E_slope']
