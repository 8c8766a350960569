"""
Property checks behind the `validate` command.

Every check returns (name, ok, detail). run_validation collects them and
raises ValidationFailure when any failed.
"""
import json
import logging
import math

import numpy as np

from swirlring.asymptotics import gamma1, gamma2, predict, r_star_exterior, r_star_interior
from swirlring.elliptic import apply_K, apply_L, assemble, residual
from swirlring.errors import ValidationFailure
from swirlring.geometry import Grid, RefinementBand, make_domain, make_grid
from swirlring.kernel import (expansion_remainder, kernel_samples, ring_G, ring_G_reference,
                              superpose)

logger = logging.getLogger(__name__)

MIN_ORDER = 1.9
KERNEL_SAMPLES = 1000
KERNEL_ORACLE_RTOL = 1e-8
BACKEND_RTOL = 1e-10
CONSISTENCY_RTOL = 0.02
SCAN_POINTS = 2_000_001
CONTRACT_CIRC_TOL = 1e-6
CENTROID_RTOL = 0.1
FAR_FIELD_RTOL = 0.05
SPHERE_DEFECT_TOL = 0.05  # staircase nodes sit within one spacing of the sphere, where the background is not zero
BALL_BAND = (0.9, 1.15)
SLOPE_RTOL = 0.15
DIST_RING_MAX = 0.1
DIAM_RATIO_MAX = 20.0
DIAM_POWER_RANGE = (0.85, 1.15)


def mirrored_axis(half, stop):
    """Symmetric axis on [-stop, stop] with 2*half + 1 nodes, exact under x -> -x."""
    pos = np.linspace(0.0, stop, half + 1)
    return np.concatenate([-pos[:0:-1], pos])


def manufactured_grid(k):
    """Uniform grid on [0.1, 2] x [-1, 1] at refinement level k."""
    r = np.linspace(0.1, 2.0, 19 * k + 1)
    return Grid.from_axes(r, mirrored_axis(10 * k, 1.0))


def manufactured_pair(grid):
    """psi = (r^2 - 0.01)(4 - r^2) cos(pi z/2), zero on the boundary, and zeta = L psi."""
    R, Z = grid.R, grid.Z
    f = (R ** 2 - 0.01) * (4.0 - R ** 2)
    g = np.cos(0.5 * math.pi * Z)
    return f * g, (8.0 + 0.25 * math.pi ** 2 * f / R ** 2) * g


def _order(errors):
    return [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]


def check_elliptic_order(levels=(2, 4, 8)):
    errors = []
    for k in levels:
        grid = manufactured_grid(k)
        psi, zeta = manufactured_pair(grid)
        op = assemble(grid)
        errors.append(float(np.abs(apply_K(op, zeta) - psi).max()))
    orders = _order(errors)
    ok = min(orders) >= MIN_ORDER
    return 'elliptic_order', ok, f"Linf errors {['%.3e' % e for e in errors]}, orders {['%.3f' % o for o in orders]}"


def check_polynomial_exactness():
    grid = manufactured_grid(1)
    op = assemble(grid)
    inner = grid.interior
    quad = float(np.abs(apply_L(op, grid.R ** 2)[inner]).max())
    quartic = float(np.abs(apply_L(op, grid.R ** 4)[inner] + 8.0).max())
    ok = quad <= 1e-9 and quartic <= 1e-9
    return 'polynomial_exactness', ok, f"|L r^2| = {quad:.2e}, |L r^4 + 8| = {quartic:.2e}"


def check_dipole_annihilation(levels=(2, 4, 8)):
    defects = []
    for k in levels:
        r = np.linspace(0.5, 2.5, 20 * k + 1)
        grid = Grid.from_axes(r, mirrored_axis(10 * k, 1.0))
        q = grid.R ** 2 / (grid.R ** 2 + grid.Z ** 2) ** 1.5
        defects.append(float(np.abs(apply_L(assemble(grid), q)[grid.interior]).max()))
    orders = _order(defects)
    ok = min(orders) >= 1.8
    return 'dipole_annihilation', ok, f"|L q| {['%.3e' % e for e in defects]}, orders {['%.3f' % o for o in orders]}"


def check_kernel(count=KERNEL_SAMPLES, seed=0):
    samples = kernel_samples(count, seed=seed)
    worst_oracle = 0.0
    worst_backend = 0.0
    bound_failures = 0
    for s in samples:
        reference = ring_G_reference(s.r, s.z, s.rp, s.zp)
        worst_oracle = max(worst_oracle, abs(s.G / reference - 1.0))
        closed = ring_G(s.r, s.z, s.rp, s.zp, method='elliptic')
        worst_backend = max(worst_backend, abs(closed / s.G - 1.0))
        if s.G > s.bound:
            bound_failures += 1
    ok = worst_oracle <= KERNEL_ORACLE_RTOL and worst_backend <= BACKEND_RTOL and bound_failures == 0
    return 'kernel_oracle', ok, (f"{len(samples)} pairs: oracle rel err {worst_oracle:.2e}, "
                                 f"elliptic rel err {worst_backend:.2e}, bound failures {bound_failures}")


def check_expansion_remainder():
    sigmas = np.geomspace(1e-6, 0.1, 60)
    values = np.abs([float(expansion_remainder(1.0, 0.0, 1.0, 2.0 * s)) for s in sigmas])
    ok = bool(values.max() <= 2.0 * values[-1])
    return 'expansion_remainder', ok, f"max |f| {values.max():.4f}, |f(0.1)| {values[-1]:.4f}"


def check_kernel_consistency():
    """K of a small patch on a large grid against superposition of the ring kernel."""
    domain = make_domain('whole_space', W=1.0 / (40 * math.pi))
    band = RefinementBand(r_lo=0.05, r_hi=1.5, z_half=1.0, spacing=0.01)
    grid = make_grid(domain, 65, 65, band=band)
    center = (0.5, 0.0)
    distance = np.hypot(grid.R - center[0], grid.Z - center[1])
    patch_radius = 0.05
    zeta = np.where(grid.interior & (distance < patch_radius), 1.0, 0.0)
    zeta /= grid.integrate(zeta)
    psi = apply_K(assemble(grid), zeta)
    targets = grid.interior & (grid.R >= 0.1) & (distance >= 5 * 2 * patch_radius) & (distance <= 1.0)
    expected = superpose(grid, zeta, grid.R[targets], grid.Z[targets])
    worst = float(np.max(np.abs(psi[targets] / expected - 1.0)))
    return 'kernel_solver_consistency', worst <= CONSISTENCY_RTOL, f"max rel deviation {worst:.3e} on {int(targets.sum())} nodes"


def check_predictions():
    gaps = []
    for kind, W, d in (('whole_space', 1.0 / (4 * math.pi), None), ('cylinder', 1.0 / (4 * math.pi), 2.0),
                       ('exterior_ball', 1.0 / (12 * math.pi), 1.0)):
        gaps.append(abs(predict(kind, W, d).slope_identity_gap()))
    rng = np.random.default_rng(0)
    scan_errors = []
    for _ in range(5):
        d = rng.uniform(1.0, 2.0)
        W = rng.uniform(1.05, 3.0) / (4 * math.pi * d)
        t = np.linspace(0.0, d, SCAN_POINTS)
        scan_errors.append(abs(t[np.argmax(gamma1(t, W))] - r_star_interior(W, d)))
        W = rng.uniform(0.2, 0.95) / (6 * math.pi * d)
        right = 1.0 / (2 * math.pi * W)
        t = np.linspace(d, right, SCAN_POINTS)
        scan_errors.append(abs(t[np.argmax(gamma2(t, W, d))] - r_star_exterior(W, d)) / max(1.0, right - d))
    ok = max(gaps) <= 1e-15 and max(scan_errors) <= 1e-6
    return 'prediction_algebra', ok, f"identity gap {max(gaps):.1e}, scan deviation {max(scan_errors):.1e}"


def solution_checks(solution):
    """Contract of a returned solution, one (name, ok, detail) per property."""
    params, grid = solution.params, solution.grid
    zeta, psi = solution.zeta, solution.psi
    results = []
    circ = grid.integrate(zeta)
    results.append(('circulation', abs(circ - 1.0) <= CONTRACT_CIRC_TOL, f"{circ:.15f}"))
    admissible = bool(np.all(zeta >= 0) and np.all(zeta <= params.cap) and np.all(zeta[grid.excluded] == 0))
    results.append(('admissible', admissible, f"max zeta {zeta.max():.6g}, cap {params.cap:.6g}"))
    results.append(('z_symmetry', bool(np.array_equal(zeta, grid.reflect(zeta))), ''))
    middle = (zeta > 0) & (zeta < params.cap) & (psi > 0)
    psi_pos = np.maximum(psi, 0.0)
    kkt = np.abs(zeta * grid.R ** 2 * params.beta ** 2 - (psi_pos + params.alpha * params.beta * grid.R ** 2))
    scale = max(float(psi_pos.max()), 1e-300)
    defect = float(kkt[middle].max()) / scale if np.any(middle) else 0.0
    results.append(('kkt_identity', defect <= 1e-12, f"relative defect {defect:.2e}"))
    results.append(('cap_inactive', solution.cap_active_measure == 0.0, f"{solution.cap_active_measure:.3e}"))
    op = solution.op if solution.op is not None else assemble(grid, solution.domain, preconditioner=params.preconditioner, tol_lin=params.tol_lin)
    defect = residual(op, solution.psi_K, zeta)
    results.append(('linear_residual', defect <= params.tol_lin, f"{defect:.2e} against tol_lin {params.tol_lin:.1e}"))
    return results


def check_small_solve():
    from swirlring.variational import SolverParams, solve

    W = 1.0 / (2 * math.pi)
    params = SolverParams(beta=0.05, W=W)
    solution = solve(params, make_domain('whole_space', W=W), 33, 33)
    results = solution_checks(solution)
    failed = [name for name, ok, _ in results if not ok]
    ok = solution.converged and not failed
    return 'small_solve', ok, (f"converged={solution.converged} in {solution.iterations} iterations, "
                               f"mu={solution.mu:.6g}, failed={failed}")


def _solve_checked(kind, W, beta, n, d=None, **band):
    from swirlring.variational import SolverParams, solve

    params = SolverParams(beta=beta, W=W)
    solution = solve(params, make_domain(kind, d=d, W=W), n, n, **band)
    failed = [name for name, ok, _ in solution_checks(solution) if not ok]
    return solution, failed


def _centroid_radius(solution):
    grid = solution.grid
    return grid.integrate_area(grid.R * solution.zeta) / grid.integrate_area(solution.zeta)


def check_cylinder_solve():
    """Tube of radius 2 at W = 1/(4 pi): core near r* = 1, far-field v_z at the background speed."""
    from swirlring.diagnostics import far_field_line, far_field_vz, velocity_swirl

    W, beta = 1.0 / (4 * math.pi), 0.02
    solution, failed = _solve_checked('cylinder', W, beta, 49, d=2.0)
    centroid = _centroid_radius(solution)
    r_star = r_star_interior(W, 2.0)
    swirl = velocity_swirl(solution.psi, solution.grid, beta)
    vz = far_field_vz(swirl, solution.grid, far_field_line(solution.domain))
    expected = -W * math.log(1.0 / beta)
    vz_error = abs(vz / expected - 1.0)
    ok = (solution.converged and not failed and abs(centroid / r_star - 1.0) <= CENTROID_RTOL
          and vz_error <= FAR_FIELD_RTOL)
    return 'cylinder_solve', ok, (f"converged={solution.converged}, centroid r={centroid:.4f} (r*={r_star:g}), "
                                  f"v_z far {vz:.5f} vs {expected:.5f}, failed={failed}")


def check_exterior_ball_solve():
    """Unit ball at W = 1/(12 pi): core inside the band around r*, psi = -mu on the sphere."""
    from swirlring.diagnostics import sphere_psi_defect

    W, beta = 1.0 / (12 * math.pi), 0.02
    r_star = r_star_exterior(W, 1.0)
    solution, failed = _solve_checked('exterior_ball', W, beta, 97, d=1.0, band_r_factors=BALL_BAND)
    centroid = _centroid_radius(solution)
    defect = sphere_psi_defect(solution)
    ok = (solution.converged and not failed and BALL_BAND[0] * r_star < centroid < BALL_BAND[1] * r_star
          and defect is not None and defect <= SPHERE_DEFECT_TOL)
    return 'exterior_ball_solve', ok, (f"converged={solution.converged}, centroid r={centroid:.4f} "
                                       f"(r*={r_star:.4f}), sphere defect {defect}, failed={failed}")


def check_residual_refinement(beta=0.01, spacings=(0.25, 0.125)):
    """Weak residuals at fixed beta shrink when the band spacing is halved."""
    from swirlring.diagnostics import support_stats, velocity_swirl, weak_residuals

    W = 1.0 / (2 * math.pi)
    totals = []
    for spacing in spacings:
        solution, _ = _solve_checked('whole_space', W, beta, 33, band_spacing=spacing)
        stats = support_stats(solution.zeta, solution.grid, r_star_interior(W))
        xi = velocity_swirl(solution.psi, solution.grid, beta).xi
        res1, res2 = weak_residuals(solution.psi, xi, solution.zeta, solution.grid,
                                    center=stats.centroid, scale=beta)
        totals.append(res1 + res2)
    ok = all(b < a for a, b in zip(totals, totals[1:]))
    return 'residual_refinement', ok, f"res1 + res2 {['%.3e' % t for t in totals]} at spacings {list(spacings)}"


def concentration_gates(records):
    """Sweep gates: dist_ring shrinking, diam/beta bounded, diam ~ beta, mu and E slopes on the predictions."""
    frame = records.frame
    converged = frame[frame['status'] == 'converged']
    gates = [('all_converged', len(converged) == len(frame), f"{len(converged)}/{len(frame)}")]
    dist = converged['dist_ring'].to_numpy()
    gates.append(('dist_ring_decreasing', bool(len(dist) > 1 and np.all(np.diff(dist) < 0)
                                               and dist[-1] <= DIST_RING_MAX), f"{np.round(dist, 5).tolist()}"))
    ratio = (converged['diam'] / converged['beta']).to_numpy()
    gates.append(('diam_over_beta_bounded', bool(ratio.max() <= DIAM_RATIO_MAX), f"max {ratio.max():.3f}"))
    summary = records.summary()
    power = summary.get('diam_power_slope', float('nan'))
    gates.append(('diam_power', DIAM_POWER_RANGE[0] <= power <= DIAM_POWER_RANGE[1], f"{power:.4f}"))
    for key in ('mu', 'E'):
        error = summary.get(f'{key}_slope_rel_error', float('inf'))
        gates.append((f'{key}_slope', error <= SLOPE_RTOL,
                      f"{summary.get(f'{key}_slope', float('nan')):.5f} vs {summary.get(f'predicted_{key}_slope', float('nan')):.5f}"))
    return gates


def check_concentration_sweep(betas=(1e-2, 3e-3, 1e-3)):
    """Whole space at W = 1/(2 pi) over decreasing beta, gated by concentration_gates."""
    from swirlring.asymptotics import run_sweep
    from swirlring.config import parse_config

    config = parse_config(json.dumps({
        'domain': {'kind': 'whole_space', 'n_r': 65, 'n_z': 65},
        'params': {'beta': betas[0], 'W': 1.0 / (2 * math.pi)},
    }))
    records = run_sweep(config, list(betas), label='validate concentration')
    gates = concentration_gates(records)
    failed = [name for name, ok, _ in gates if not ok]
    return 'concentration_sweep', not failed, '; '.join(f"{name} {detail}" for name, _, detail in gates)


CHECKS = (
    check_polynomial_exactness,
    check_elliptic_order,
    check_dipole_annihilation,
    check_kernel,
    check_expansion_remainder,
    check_kernel_consistency,
    check_predictions,
    check_small_solve,
    check_cylinder_solve,
    check_exterior_ball_solve,
    check_residual_refinement,
    check_concentration_sweep,
)


def run_validation(checks=CHECKS, report=None):
    """
    Run every check; raises ValidationFailure listing the failed ones.

    Args:
        checks: callables returning (name, ok, detail)
        report: optional callable(name, ok, detail) invoked after each check
    """
    results = []
    for check in checks:
        try:
            name, ok, detail = check()
        except Exception as e:
            name, ok, detail = check.__name__.replace('check_', ''), False, f"raised {type(e).__name__}: {e}"
        level = logging.INFO if ok else logging.ERROR
        logger.log(level, f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if report:
            report(name, ok, detail)
        results.append((name, ok, detail))
    failed = [name for name, ok, _ in results if not ok]
    if failed:
        raise ValidationFailure(failed)
    return results
