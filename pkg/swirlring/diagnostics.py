"""
Diagnostics of a computed ring: support geometry, centre of vorticity,
rescaled core profile, velocity and swirl, weak-form residuals of the
steady Euler system, Beltrami deviation, helicity and the comparisons
with the asymptotic predictions.

All functions are pure in their field inputs.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from swirlring.asymptotics import kelvin_hicks_speed, predict
from swirlring.errors import GeometryError
from swirlring.geometry import DomainKind, NodeKind
from swirlring.kernel import ring_G_elliptic

logger = logging.getLogger(__name__)

DEFAULT_R_LOCAL = 4.0
PROFILE_SAMPLES = 81
PROFILE_RADII = 41
PROFILE_ANGLES = 64
MONOTONICITY_EPS = 1e-3
DEFAULT_TESTS = 20
BUMP_WIDTHS = (2.0, 6.0)  # test-function half-widths in units of beta
GREEN_NEAR = 5.0
GREEN_FAR = 10.0

# Order of the keys in a diagnostics record
RECORD_KEYS = (
    'beta', 'W', 'alpha', 'domain', 'mu', 'E', 'circ', 'A', 'B', 'diam', 'dist_ring',
    'X_r', 'X_z', 'xi_max_times_beta', 'mono_score', 'res1', 'res2', 'beltrami', 'helicity',
    'iterations', 'converged', 'cap_active_measure', 'identity_gap', 'r_star',
    'kh_speed', 'imposed_speed', 'kh_gap', 'green_gap', 'sphere_psi_defect',
    'vz_far', 'energy_disc', 'energy_above_disc',
)


@dataclass(frozen=True)
class SupportStats:
    A: float
    B: float
    diam: float
    dist_ring: float
    centroid: tuple
    nodes: int

    def to_dict(self):
        return {'A': self.A, 'B': self.B, 'diam': self.diam, 'dist_ring': self.dist_ring,
                'X_r': self.centroid[0], 'X_z': self.centroid[1], 'nodes': self.nodes}


@dataclass(frozen=True)
class RescaledProfile:
    x: np.ndarray  # local coordinates along r
    y: np.ndarray  # local coordinates along z
    g: np.ndarray  # beta^2 zeta(X + beta x)
    radii: np.ndarray
    angular_mean: np.ndarray
    score: float
    mass: float
    reference_mass: float
    escaped: bool


@dataclass(frozen=True)
class SwirlField:
    v_r: np.ndarray
    v_theta: np.ndarray
    v_z: np.ndarray
    xi: np.ndarray


def _support_points(zeta, grid):
    support = zeta > 0
    if not np.any(support):
        raise GeometryError("vorticity has empty support")
    return np.column_stack([grid.R[support], grid.Z[support]])


def _diameter(points):
    if len(points) < 2:
        return 0.0
    try:
        hull = ConvexHull(points)
        points = points[hull.vertices]
    except (QhullError, ValueError):
        pass
    return float(pdist(points).max())


def vorticity_center(zeta, grid):
    """Centroid of zeta against dr dz (normalized)."""
    mass = grid.integrate_area(zeta)
    if not mass > 0:
        raise GeometryError("vorticity has zero mass; no centre")
    return (grid.integrate_area(zeta * grid.R) / mass, grid.integrate_area(zeta * grid.Z) / mass)


def support_stats(zeta, grid, r_star):
    """
    Exact grid support statistics of zeta.

    dist_ring is the largest distance from a support node to the circle of
    radius r_star in the plane z = 0, i.e. sqrt((r - r*)^2 + z^2).
    """
    points = _support_points(zeta, grid)
    r, z = points[:, 0], points[:, 1]
    return SupportStats(
        A=float(r.min()),
        B=float(r.max()),
        diam=_diameter(points),
        dist_ring=float(np.sqrt((r - r_star) ** 2 + z ** 2).max()),
        centroid=vorticity_center(zeta, grid),
        nodes=len(points),
    )


def rescaled_profile(zeta, grid, center, beta, R_local=DEFAULT_R_LOCAL):
    """
    Core profile g(x) = beta^2 zeta(X + beta x) on |x| <= R_local.

    The monotonicity score is the fraction of radius pairs rho1 < rho2 whose
    angular means satisfy g(rho1) >= g(rho2) - 1e-3 max g.
    """
    interp = RegularGridInterpolator((grid.r, grid.z), zeta, bounds_error=False, fill_value=0.0)
    x = np.linspace(-R_local, R_local, PROFILE_SAMPLES)
    X, Y = np.meshgrid(x, x, indexing='ij')
    g = beta ** 2 * interp(np.column_stack([(center[0] + beta * X).ravel(),
                                            (center[1] + beta * Y).ravel()])).reshape(X.shape)

    radii = np.linspace(0.0, R_local, PROFILE_RADII)
    angles = np.linspace(0.0, 2 * math.pi, PROFILE_ANGLES, endpoint=False)
    ring_r = center[0] + beta * radii[:, None] * np.cos(angles)[None, :]
    ring_z = center[1] + beta * radii[:, None] * np.sin(angles)[None, :]
    means = beta ** 2 * interp(np.column_stack([ring_r.ravel(), ring_z.ravel()])).reshape(ring_r.shape).mean(axis=1)

    eps = MONOTONICITY_EPS * max(float(g.max()), float(means.max()))
    i, j = np.triu_indices(len(radii), k=1)
    score = float(np.mean(means[i] >= means[j] - eps))

    points = _support_points(zeta, grid)
    escaped = bool(np.hypot(points[:, 0] - center[0], points[:, 1] - center[1]).max() > R_local * beta)
    if escaped:
        logger.warning(f"Support leaves the local window of radius {R_local}β around the centre")

    dx = x[1] - x[0]
    return RescaledProfile(x=x, y=x, g=g, radii=radii, angular_mean=means, score=score,
                           mass=float(g.sum() * dx * dx), reference_mass=grid.integrate_area(zeta),
                           escaped=escaped)


def velocity_swirl(psi, grid, beta):
    """
    Velocity and swirl from the stream function.

    v_r = -(1/r) dpsi/dz, v_z = (1/r) dpsi/dr, xi = psi_+/beta, v_theta = xi/r.
    On the axis v_r = v_theta = 0 and v_z is extrapolated linearly.
    """
    dpsi_dr, dpsi_dz = np.gradient(psi, grid.r, grid.z, edge_order=2)
    xi = np.maximum(psi, 0.0) / beta
    R = grid.R
    off_axis = R > 0
    v_r = np.zeros(grid.shape)
    v_z = np.zeros(grid.shape)
    v_theta = np.zeros(grid.shape)
    v_r[off_axis] = -dpsi_dz[off_axis] / R[off_axis]
    v_z[off_axis] = dpsi_dr[off_axis] / R[off_axis]
    v_theta[off_axis] = xi[off_axis] / R[off_axis]
    if grid.r[0] == 0.0:
        r = grid.r
        v_z[0] = v_z[1] + (v_z[1] - v_z[2]) * (r[1] - r[0]) / (r[2] - r[1])
    return SwirlField(v_r=v_r, v_theta=v_theta, v_z=v_z, xi=xi)


def _jacobian(a, b, grid):
    a_r, a_z = np.gradient(a, grid.r, grid.z, edge_order=2)
    b_r, b_z = np.gradient(b, grid.r, grid.z, edge_order=2)
    return a_r * b_z - a_z * b_r


def _bump(t):
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def bump_functions(grid, count, seed=0, center=None, scale=None):
    """
    Smooth compactly supported tensor bumps placed near a centre.

    Centres lie within 4 scale of the centre; half-widths are drawn from
    BUMP_WIDTHS times scale. Bumps stay off the axis and the truncation.
    """
    rng = np.random.default_rng(seed)
    if center is None:
        center = (0.5 * (grid.r[0] + grid.r[-1]), 0.0)
    if scale is None:
        scale = 0.05 * (grid.r[-1] - grid.r[0])
    r_lim = (grid.r[1], grid.r[-2])
    z_lim = (grid.z[1], grid.z[-2])
    bumps = []
    attempts = 0
    while len(bumps) < count:
        attempts += 1
        if attempts > 100 * count:
            raise GeometryError("cannot place test functions inside the domain")
        width = scale * rng.uniform(*BUMP_WIDTHS)
        rc = center[0] + scale * rng.uniform(-4.0, 4.0)
        zc = center[1] + scale * rng.uniform(-4.0, 4.0)
        if rc - width <= r_lim[0] or rc + width >= r_lim[1] or zc - width <= z_lim[0] or zc + width >= z_lim[1]:
            continue
        phi = np.outer(_bump((grid.r - rc) / width), _bump((grid.z - zc) / width))
        if grid.kind == DomainKind.EXTERIOR_BALL and np.any(phi[grid.mask != NodeKind.INTERIOR] != 0):
            continue
        bumps.append(phi)
    return bumps


def weak_residuals(psi, xi, zeta, grid, n_tests=DEFAULT_TESTS, seed=0, center=None, scale=None):
    """
    Weak-form residuals of the steady system on random test bumps.

    res1 = max |int d(psi, xi) phi dr dz|
    res2 = max |int [zeta d(psi, phi) - (1/2r^2) d(xi^2, phi)] dr dz|
    with d(a, b) = a_r b_z - a_z b_r by central differences.
    """
    if not np.any(psi) and not np.any(xi) and not np.any(zeta):
        return 0.0, 0.0
    R2 = grid.R ** 2
    inv_r2 = np.zeros(grid.shape)
    inv_r2[R2 > 0] = 1.0 / R2[R2 > 0]
    j_psi_xi = _jacobian(psi, xi, grid)
    xi2 = xi ** 2
    res1 = 0.0
    res2 = 0.0
    for phi in bump_functions(grid, n_tests, seed=seed, center=center, scale=scale):
        res1 = max(res1, abs(grid.integrate_area(j_psi_xi * phi)))
        integrand = zeta * _jacobian(psi, phi, grid) - 0.5 * inv_r2 * _jacobian(xi2, phi, grid)
        res2 = max(res2, abs(grid.integrate_area(integrand)))
    return res1, res2


def beltrami_deviation(psi, zeta, grid, beta, alpha):
    """max over the core of |zeta r^2 beta^2 - psi_+| / max psi_+; None unless alpha = 0."""
    if alpha != 0:
        return None
    psi_pos = np.maximum(psi, 0.0)
    scale = float(psi_pos.max())
    core = zeta > 0
    if scale == 0.0 or not np.any(core):
        return 0.0
    defect = np.abs(zeta * grid.R ** 2 * beta ** 2 - psi_pos)
    return float(defect[core].max()) / scale


def helicity(swirl, grid):
    """2 pi int v . omega r dr dz with omega_r = -dv_theta/dz, omega_theta = dv_r/dz - dv_z/dr, omega_z = (1/r) d(r v_theta)/dr."""
    dvr_dr, dvr_dz = np.gradient(swirl.v_r, grid.r, grid.z, edge_order=2)
    dvz_dr, _ = np.gradient(swirl.v_z, grid.r, grid.z, edge_order=2)
    _, dvt_dz = np.gradient(swirl.v_theta, grid.r, grid.z, edge_order=2)
    drvt_dr, _ = np.gradient(grid.R * swirl.v_theta, grid.r, grid.z, edge_order=2)
    omega_r = -dvt_dz
    omega_theta = dvr_dz - dvz_dr
    omega_z = np.zeros(grid.shape)
    off_axis = grid.R > 0
    omega_z[off_axis] = drvt_dr[off_axis] / grid.R[off_axis]
    density = swirl.v_r * omega_r + swirl.v_theta * omega_theta + swirl.v_z * omega_z
    return 2 * math.pi * grid.integrate_area(density * grid.R)


def multiplier_identity(solution):
    """
    Both sides of mu int zeta = 2E - int zeta bg - alpha beta int r^2 (zeta - alpha/beta)_+
    - (Lambda/beta^2) int [psi - (Lambda - alpha beta) r^2]_+ and their relative gap.
    """
    from swirlring.variational import background_stream

    grid, params = solution.grid, solution.params
    bg = background_stream(solution.domain, params, grid)
    R2 = grid.R ** 2
    mass = grid.integrate(solution.zeta)
    alpha_term = params.alpha * params.beta * grid.integrate(R2 * np.maximum(solution.zeta - params.alpha / params.beta, 0.0))
    excess = np.where(solution.zeta > 0, np.maximum(solution.psi - (params.Lambda - params.alpha * params.beta) * R2, 0.0), 0.0)
    cap_term = params.cap * grid.integrate(excess)
    lhs = solution.mu * mass
    rhs = 2 * solution.energy - grid.integrate(solution.zeta * bg) - alpha_term - cap_term
    gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    return {'lhs': lhs, 'rhs': rhs, 'alpha_term': alpha_term, 'cap_term': cap_term, 'gap': gap}


def kelvin_hicks_gap(centroid_r, params):
    """Kelvin-Hicks speed at the measured radius (eps = beta) against the imposed W log(1/beta)."""
    kh = kelvin_hicks_speed(1.0, centroid_r, params.beta)
    imposed = params.W * params.log_inv_beta
    return {'kh_speed': kh, 'imposed_speed': imposed, 'kh_gap': (imposed - kh) / kh}


def green_gap(solution, center, diam):
    """
    Relative max deviation between K zeta and the ring kernel at the centre,
    over interior nodes between 5 and 10 core diameters from the centre.
    """
    grid = solution.grid
    distance = np.hypot(grid.R - center[0], grid.Z - center[1])
    reach = max(diam, grid.min_spacing)
    far = grid.interior & (distance >= GREEN_NEAR * reach) & (distance <= GREEN_FAR * reach)
    if not np.any(far):
        return None
    green = ring_G_elliptic(grid.R[far], grid.Z[far], center[0], center[1])
    return float(np.max(np.abs(solution.psi_K[far] - green) / np.abs(green)))


def sphere_psi_defect(solution):
    """max |psi + mu| on the staircase boundary of the ball, relative to mu; None for other domains."""
    grid = solution.grid
    if grid.kind != DomainKind.EXTERIOR_BALL:
        return None
    boundary = (grid.mask == NodeKind.DIRICHLET) & (grid.R ** 2 + grid.Z ** 2 < (grid.d + 2 * grid.min_spacing) ** 2)
    boundary &= grid.R > 0
    if not np.any(boundary):
        return None
    scale = max(abs(solution.mu), 1e-300)
    return float(np.max(np.abs(solution.psi[boundary] + solution.mu))) / scale


def far_field_line(domain):
    """Height halfway between the support box and the upper truncation."""
    return 0.5 * (domain.box_z + domain.z_max)


def far_field_vz(swirl, grid, z_line=None):
    """
    Mean v_z across the interior row nearest z_line, away from the axis and the outer wall.

    Defaults to the last interior row; the truncation row itself carries
    the Dirichlet data and is never sampled.
    """
    top = len(grid.z) - 2
    j = top if z_line is None else min(int(np.argmin(np.abs(grid.z - z_line))), top)
    return float(swirl.v_z[2:-2, j].mean())


def build_record(solution, n_tests=DEFAULT_TESTS, seed=0):
    """
    Flat diagnostics record of a solution, keys in RECORD_KEYS order.
    """
    from swirlring.variational import disc_energy_bound

    grid, params, domain = solution.grid, solution.params, solution.domain
    prediction = predict(domain.kind, params.W, domain.d)
    stats = support_stats(solution.zeta, grid, prediction.r_star)
    swirl = velocity_swirl(solution.psi, grid, params.beta)
    profile = rescaled_profile(solution.zeta, grid, stats.centroid, params.beta)
    res1, res2 = weak_residuals(solution.psi, swirl.xi, solution.zeta, grid, n_tests=n_tests,
                                seed=seed, center=stats.centroid, scale=params.beta)
    identity = multiplier_identity(solution)
    kh = kelvin_hicks_gap(stats.centroid[0], params)
    try:
        e_disc = disc_energy_bound(params, domain, grid, prediction.r_star)
    except GeometryError as e:
        logger.info(f"Disc energy bound skipped: {e}")
        e_disc = None

    record = {
        'beta': params.beta,
        'W': params.W,
        'alpha': params.alpha,
        'domain': domain.kind.value,
        'mu': solution.mu,
        'E': solution.energy,
        'circ': solution.circulation,
        'A': stats.A,
        'B': stats.B,
        'diam': stats.diam,
        'dist_ring': stats.dist_ring,
        'X_r': stats.centroid[0],
        'X_z': stats.centroid[1],
        'xi_max_times_beta': float(swirl.xi.max()) * params.beta,
        'mono_score': profile.score,
        'res1': res1,
        'res2': res2,
        'beltrami': beltrami_deviation(solution.psi, solution.zeta, grid, params.beta, params.alpha),
        'helicity': helicity(swirl, grid),
        'iterations': solution.iterations,
        'converged': solution.converged,
        'cap_active_measure': solution.cap_active_measure,
        'identity_gap': identity['gap'],
        'r_star': prediction.r_star,
        'kh_speed': kh['kh_speed'],
        'imposed_speed': kh['imposed_speed'],
        'kh_gap': kh['kh_gap'],
        'green_gap': green_gap(solution, stats.centroid, stats.diam),
        'sphere_psi_defect': sphere_psi_defect(solution),
        'vz_far': far_field_vz(swirl, grid, far_field_line(domain)),
        'energy_disc': e_disc,
        'energy_above_disc': None if e_disc is None else bool(solution.energy >= e_disc),
    }
    return {key: record[key] for key in RECORD_KEYS}
