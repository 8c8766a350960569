import math

import numpy as np
import pytest

from swirlring.diagnostics import (RECORD_KEYS, SwirlField, beltrami_deviation, bump_functions,
                                   far_field_line, far_field_vz, helicity, kelvin_hicks_gap, rescaled_profile,
                                   support_stats, velocity_swirl, vorticity_center, weak_residuals)
from swirlring.errors import GeometryError
from swirlring.geometry import make_domain
from swirlring.variational import SolverParams


def core_stream(grid):
    return grid.R ** 2 * np.exp(-((grid.R - 1.0) ** 2 + grid.Z ** 2) / 0.05) - 0.05 * grid.R ** 2


def test_record_key_order():
    assert RECORD_KEYS[:5] == ('beta', 'W', 'alpha', 'domain', 'mu')
    assert len(set(RECORD_KEYS)) == len(RECORD_KEYS)


def test_support_stats_single_node(uniform_grid):
    zeta = uniform_grid.zeros()
    zeta[30, 20] = 1.0  # (r, z) = (1.5, 0)
    stats = support_stats(zeta, uniform_grid, r_star=1.0)
    assert stats.A == stats.B == pytest.approx(1.5)
    assert stats.diam == 0.0
    assert stats.dist_ring == pytest.approx(0.5)
    assert stats.centroid == pytest.approx((1.5, 0.0))
    assert stats.nodes == 1


def test_support_stats_pair(uniform_grid):
    zeta = uniform_grid.zeros()
    zeta[20, 30] = 1.0  # (1, 0.5)
    zeta[20, 10] = 1.0  # (1, -0.5)
    stats = support_stats(zeta, uniform_grid, r_star=1.0)
    assert stats.diam == pytest.approx(1.0)
    assert stats.dist_ring == pytest.approx(0.5)
    assert stats.centroid[1] == pytest.approx(0.0, abs=1e-15)


def test_support_stats_block_diameter(uniform_grid):
    zeta = uniform_grid.zeros()
    zeta[18:23, 17:24] = 2.0  # r in [0.9, 1.1], z in [-0.15, 0.15]
    stats = support_stats(zeta, uniform_grid, r_star=1.0)
    assert stats.diam == pytest.approx(math.hypot(0.2, 0.3))
    assert stats.A == pytest.approx(0.9)
    assert stats.B == pytest.approx(1.1)


def test_vorticity_center_needs_mass(uniform_grid):
    with pytest.raises(GeometryError):
        vorticity_center(uniform_grid.zeros(), uniform_grid)
    with pytest.raises(GeometryError):
        support_stats(uniform_grid.zeros(), uniform_grid, 1.0)


def test_vorticity_center_weights_by_area(uniform_grid):
    zeta = uniform_grid.zeros()
    zeta[10, 20] = 1.0  # (0.5, 0)
    zeta[30, 20] = 1.0  # (1.5, 0); weighting by nu would give r = 1.25
    assert vorticity_center(zeta, uniform_grid) == pytest.approx((1.0, 0.0))


def test_rescaled_profile_of_a_disc(uniform_grid):
    beta = 0.2
    inside = (uniform_grid.R - 1.0) ** 2 + uniform_grid.Z ** 2 < 0.1 ** 2
    zeta = np.where(inside, 1.0 / beta ** 2, 0.0)
    profile = rescaled_profile(zeta, uniform_grid, (1.0, 0.0), beta)
    assert profile.g.max() == pytest.approx(1.0)
    assert profile.score == 1.0
    assert not profile.escaped


def test_rescaled_profile_of_an_annulus(uniform_grid):
    beta = 0.1
    rho = np.hypot(uniform_grid.R - 1.0, uniform_grid.Z)
    zeta = np.where((rho > 0.15) & (rho < 0.3), 1.0 / beta ** 2, 0.0)
    profile = rescaled_profile(zeta, uniform_grid, (1.0, 0.0), beta)
    assert profile.score < 1.0
    assert not profile.escaped


def test_rescaled_profile_keeps_mass(uniform_grid):
    beta = 0.2
    rho = np.hypot(uniform_grid.R - 1.0, uniform_grid.Z)
    zeta = np.maximum(0.0, 1.0 - rho ** 2 / 0.3 ** 2) ** 2
    profile = rescaled_profile(zeta, uniform_grid, (1.0, 0.0), beta)
    assert profile.mass == pytest.approx(profile.reference_mass, rel=1e-2)
    assert profile.score == 1.0
    assert not profile.escaped


def test_velocity_of_background_stream(uniform_grid):
    W, beta = 0.2, 0.01
    psi = -0.5 * W * math.log(1.0 / beta) * uniform_grid.R ** 2
    swirl = velocity_swirl(psi, uniform_grid, beta)
    assert np.allclose(swirl.v_z, -W * math.log(1.0 / beta))
    assert np.allclose(swirl.v_r, 0.0)
    assert not np.any(swirl.v_theta)
    assert not np.any(swirl.xi)
    assert far_field_vz(swirl, uniform_grid) == pytest.approx(-W * math.log(1.0 / beta))


def test_far_field_reads_an_interior_row(uniform_grid):
    W, beta, eps = 0.2, 0.01, 0.1
    # the perturbation vanishes on the truncation row z = 1
    psi = (-0.5 * W * math.log(1.0 / beta) + eps * (1.0 - uniform_grid.Z ** 2)) * uniform_grid.R ** 2
    swirl = velocity_swirl(psi, uniform_grid, beta)
    background = -W * math.log(1.0 / beta)
    assert far_field_vz(swirl, uniform_grid, z_line=0.5) == pytest.approx(background + 1.5 * eps)
    assert far_field_vz(swirl, uniform_grid, z_line=5.0) == pytest.approx(background + 2 * eps * (1 - 0.95 ** 2))


def test_far_field_line_sits_beyond_the_support_box():
    domain = make_domain('cylinder', d=2.0, W=1.0 / (4 * math.pi))
    line = far_field_line(domain)
    assert domain.box_z < line < domain.z_max


def test_swirl_from_positive_stream(uniform_grid):
    beta = 0.1
    psi = core_stream(uniform_grid)
    swirl = velocity_swirl(psi, uniform_grid, beta)
    assert np.allclose(swirl.xi, np.maximum(psi, 0.0) / beta)
    assert np.all(swirl.v_theta[0] == 0.0)
    assert np.all(swirl.v_theta >= 0.0)


def test_helicity_zero_without_swirl(uniform_grid):
    psi = -uniform_grid.R ** 2 + 0.3 * uniform_grid.R ** 2 * uniform_grid.Z
    swirl = velocity_swirl(psi, uniform_grid, 0.1)
    assert helicity(swirl, uniform_grid) == 0.0


def test_helicity_flips_with_swirl_direction(uniform_grid):
    swirl = velocity_swirl(core_stream(uniform_grid), uniform_grid, 0.1)
    mirrored = SwirlField(v_r=swirl.v_r, v_theta=-swirl.v_theta, v_z=swirl.v_z, xi=-swirl.xi)
    h = helicity(swirl, uniform_grid)
    assert helicity(mirrored, uniform_grid) == pytest.approx(-h, abs=1e-12 * max(1.0, abs(h)))


def test_helicity_flips_under_axial_mirror(uniform_grid):
    R, Z = uniform_grid.R, uniform_grid.Z
    psi = R ** 2 * np.exp(-((R - 1.0) ** 2 + (Z - 0.2) ** 2) / 0.05) * (1.0 + Z) - 0.05 * R ** 2
    swirl = velocity_swirl(psi, uniform_grid, 0.1)
    # z -> -z keeps v_r and v_theta, reverses v_z
    mirrored = SwirlField(v_r=swirl.v_r[:, ::-1], v_theta=swirl.v_theta[:, ::-1],
                          v_z=-swirl.v_z[:, ::-1], xi=swirl.xi[:, ::-1])
    h = helicity(swirl, uniform_grid)
    assert abs(h) > 0.0
    assert helicity(mirrored, uniform_grid) == pytest.approx(-h, rel=1e-9)


def test_beltrami_deviation(uniform_grid):
    beta = 0.1
    psi = core_stream(uniform_grid)
    psi_pos = np.maximum(psi, 0.0)
    zeta = np.zeros(uniform_grid.shape)
    off_axis = uniform_grid.R > 0
    zeta[off_axis] = psi_pos[off_axis] / (uniform_grid.R[off_axis] ** 2 * beta ** 2)
    assert beltrami_deviation(psi, zeta, uniform_grid, beta, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert beltrami_deviation(psi, 2 * zeta, uniform_grid, beta, 0.0) == pytest.approx(1.0)
    assert beltrami_deviation(psi, zeta, uniform_grid, beta, 1.0) is None


def test_weak_residuals(uniform_grid):
    assert weak_residuals(uniform_grid.zeros(), uniform_grid.zeros(), uniform_grid.zeros(),
                          uniform_grid) == (0.0, 0.0)
    psi = 1.0 + core_stream(uniform_grid)
    xi = psi / 0.1
    res1, res2 = weak_residuals(psi, xi, uniform_grid.zeros(), uniform_grid, n_tests=5,
                                center=(1.0, 0.0), scale=0.05)
    assert res1 < 1e-10
    assert res2 > 0.0


def test_bump_functions(uniform_grid):
    bumps = bump_functions(uniform_grid, 8, seed=2, center=(1.0, 0.0), scale=0.05)
    assert len(bumps) == 8
    for phi in bumps:
        assert phi.min() >= 0.0
        assert phi.max() > 0.0
        assert not np.any(phi[~uniform_grid.interior])


def test_kelvin_hicks_gap():
    params = SolverParams(beta=0.01, W=0.1)
    gap = kelvin_hicks_gap(1.0, params)
    assert gap['imposed_speed'] == pytest.approx(0.1 * math.log(100.0))
    expected = (math.log(800.0) - 0.25) / (4 * math.pi)
    assert gap['kh_speed'] == pytest.approx(expected)
    assert gap['kh_gap'] == pytest.approx((gap['imposed_speed'] - expected) / expected)
