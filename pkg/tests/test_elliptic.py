import math

import numpy as np
import pytest

from swirlring.elliptic import apply_K, apply_L, assemble, rayleigh_quotients, residual
from swirlring.validation import check_polynomial_exactness, manufactured_grid, manufactured_pair


def test_polynomials_are_exact(offset_grid):
    op = assemble(offset_grid)
    inner = offset_grid.interior
    assert np.abs(apply_L(op, offset_grid.R ** 2)[inner]).max() < 1e-9
    assert np.abs(apply_L(op, offset_grid.R ** 4)[inner] + 8.0).max() < 1e-9


def test_polynomial_check_passes():
    name, ok, detail = check_polynomial_exactness()
    assert name == 'polynomial_exactness'
    assert ok, detail


def test_interior_block_is_symmetric_positive(uniform_grid):
    op = assemble(uniform_grid)
    assert abs(op.matrix - op.matrix.T).max() < 1e-12
    assert min(rayleigh_quotients(op, count=6)) > 0.0


def test_K_inverts_L(offset_grid):
    op = assemble(offset_grid)
    psi, _ = manufactured_pair(offset_grid)
    zeta = apply_L(op, psi)
    recovered = apply_K(op, zeta)
    assert np.abs(recovered - psi).max() <= 1e-7 * np.abs(psi).max()
    assert residual(op, recovered, zeta) < 1e-8


def test_K_of_zero_is_zero(uniform_grid):
    op = assemble(uniform_grid)
    assert not np.any(apply_K(op, uniform_grid.zeros()))


def test_K_preserves_sign_and_symmetry(uniform_grid):
    op = assemble(uniform_grid)
    zeta = np.where((uniform_grid.R - 1.0) ** 2 + uniform_grid.Z ** 2 < 0.04, 1.0, 0.0)
    psi = apply_K(op, zeta)
    assert psi.min() >= -1e-12
    assert psi.max() > 0.0
    assert np.allclose(psi, psi[:, ::-1], rtol=0.0, atol=1e-9 * psi.max())
    assert np.all(psi[~uniform_grid.interior] == 0.0)


@pytest.mark.parametrize('preconditioner', ['ilu', 'jacobi'])
def test_preconditioners_agree(uniform_grid, preconditioner):
    zeta = np.exp(-((uniform_grid.R - 1.0) ** 2 + uniform_grid.Z ** 2) / 0.05)
    reference = apply_K(assemble(uniform_grid), zeta)
    other = apply_K(assemble(uniform_grid, preconditioner=preconditioner), zeta)
    assert np.abs(other - reference).max() <= 1e-4 * reference.max()


def test_unknown_preconditioner(uniform_grid):
    with pytest.raises(ValueError):
        assemble(uniform_grid, preconditioner='amg')


def test_second_order_convergence():
    errors = []
    for k in (1, 2):
        grid = manufactured_grid(k)
        psi, zeta = manufactured_pair(grid)
        errors.append(np.abs(apply_K(assemble(grid), zeta) - psi).max())
    assert math.log2(errors[0] / errors[1]) > 1.5
