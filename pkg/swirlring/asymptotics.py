"""
Closed-form small-beta predictions and the beta-sweep driver.

The reduced energy profiles

    Gamma1(t) = t/2pi - W t^2                 (whole space, cylinder)
    Gamma2(t) = t/2pi - W t^2 + W d^3/t       (exterior of a ball)

locate the filament radius r*; the multiplier and the energy grow like
log(1/beta) with slopes fixed by r*.
"""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime
from threading import Lock

import numpy as np
import pandas as pd
from scipy import optimize

from swirlring.errors import ConfigError, ConvergenceError, FitError, GeometryError, SweepError, SwirlringError
from swirlring.geometry import DomainKind

logger = logging.getLogger(__name__)

MIN_SWEEP_MEMBERS = 3
ROOT_XTOL = 1e-14
GEOMETRIC_RTOL = 0.25  # ratio spread tolerated before warning that betas are not geometric

# Sweep progress, keyed by sweep label
active_sweeps = {}  # label -> {'started': datetime, 'total': int, 'done': int, 'failed': int}
sweeps_lock = Lock()


def sweep_progress(label):
    """
    Snapshot of a running sweep's progress, or None once it has finished.

    Used by: the sweep command's per-member readout.
    """
    with sweeps_lock:
        progress = active_sweeps.get(label)
        return dict(progress) if progress is not None else None


def gamma1(t, W):
    return t / (2 * math.pi) - W * t * t


def r_star_interior(W, d=None):
    """Maximizer of Gamma1 on [0, d]; d=None stands for the whole space."""
    if d is None or W > 1.0 / (4 * math.pi * d):
        return 1.0 / (4 * math.pi * W)
    return float(d)


def gamma2(t, W, d):
    return t / (2 * math.pi) - W * t * t + W * d ** 3 / t


def gamma2_prime(t, W, d):
    return 1.0 / (2 * math.pi) - 2 * W * t - W * d ** 3 / (t * t)


def r_star_exterior(W, d):
    """
    Maximizer of Gamma2 on [d, inf).

    r* = d when W >= 1/(6 pi d); otherwise the root of Gamma2' on
    [d, 1/(2 pi W)] (Gamma2' is positive at d and negative at the right end).
    """
    if W >= 1.0 / (6 * math.pi * d):
        return float(d)
    right = 1.0 / (2 * math.pi * W)
    try:
        return float(optimize.brentq(gamma2_prime, d, right, args=(W, d), xtol=ROOT_XTOL))
    except ValueError as e:
        raise GeometryError(f"no sign change of Gamma2' on [{d}, {right}] for W={W}: {e}") from e


def kelvin_hicks_speed(kappa, r_star, eps):
    """Translation speed (kappa/4 pi r)(log(8r/eps) - 1/4) of a thin ring of core size eps."""
    return kappa / (4 * math.pi * r_star) * (math.log(8 * r_star / eps) - 0.25)


@dataclass(frozen=True)
class Prediction:
    kind: DomainKind
    W: float
    d: float | None
    r_star: float
    mu_slope: float
    E_slope: float

    @property
    def translation_speed_coeff(self):
        return self.W

    def slope_identity_gap(self):
        """mu_slope - 2 E_slope - (W/2) r*^2, plus W d^3/(2 r*) for the ball; zero by construction."""
        gap = self.mu_slope - 2 * self.E_slope - 0.5 * self.W * self.r_star ** 2
        if self.kind == DomainKind.EXTERIOR_BALL:
            gap += self.W * self.d ** 3 / (2 * self.r_star)
        return gap

    def to_dict(self):
        return {
            'kind': self.kind.value,
            'W': self.W,
            'd': self.d,
            'r_star': self.r_star,
            'mu_slope': self.mu_slope,
            'E_slope': self.E_slope,
            'translation_speed_coeff': self.translation_speed_coeff,
        }


def predict(kind, W, d=None):
    """Leading-order predictions for a domain kind."""
    kind = DomainKind.parse(kind)
    if kind == DomainKind.EXTERIOR_BALL:
        r = r_star_exterior(W, d)
        ball = W * d ** 3 / (2 * r)
    else:
        r = r_star_interior(W, d if kind == DomainKind.CYLINDER else None)
        ball = 0.0
    mu_slope = r / (2 * math.pi) - 0.5 * W * r * r + ball
    E_slope = r / (4 * math.pi) - 0.5 * W * r * r + ball
    return Prediction(kind, W, d, r, mu_slope, E_slope)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    max_residual: float

    def to_dict(self):
        return {'slope': self.slope, 'intercept': self.intercept, 'max_residual': self.max_residual}


def _least_squares(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < MIN_SWEEP_MEMBERS:
        raise FitError(f"need at least {MIN_SWEEP_MEMBERS} points to fit (got {len(x)})")
    if np.ptp(x) <= 1e-12 * max(1.0, np.abs(x).max()):
        raise FitError("degenerate abscissae: all beta values coincide")
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return FitResult(float(slope), float(intercept), residual)


def _fit_frame(records, field_name):
    frame = records.frame if isinstance(records, SweepRecords) else pd.DataFrame(records)
    if 'status' in frame:
        frame = frame[frame['status'] == 'converged']
    if field_name not in frame:
        raise FitError(f"records carry no column '{field_name}'")
    frame = frame[np.isfinite(frame[field_name].astype(float))]
    return frame


def fit_log_slope(records, field_name):
    """
    Least squares of a record field against log(1/beta).

    Args:
        records: SweepRecords, DataFrame or list of dicts with 'beta'
        field_name: column to regress

    Returns:
        FitResult(slope, intercept, max_residual)
    """
    frame = _fit_frame(records, field_name)
    return _least_squares(np.log(1.0 / frame['beta'].to_numpy(dtype=float)),
                          frame[field_name].to_numpy(dtype=float))


def fit_power(records, field_name):
    """Exponent p of field ~ beta^p by least squares of log(field) against log(beta)."""
    frame = _fit_frame(records, field_name)
    values = frame[field_name].to_numpy(dtype=float)
    if np.any(values <= 0):
        raise FitError(f"'{field_name}' must be positive for a power fit")
    return _least_squares(np.log(frame['beta'].to_numpy(dtype=float)), np.log(values))


def check_betas(betas):
    """Sorted (decreasing) beta list; fewer than 3 values is a configuration error."""
    betas = sorted((float(b) for b in betas), reverse=True)
    if len(betas) < MIN_SWEEP_MEMBERS:
        raise ConfigError('params.betas', f"at least {MIN_SWEEP_MEMBERS} β values required (got {len(betas)})")
    if len(set(betas)) != len(betas):
        raise ConfigError('params.betas', "β values must be distinct")
    ratios = np.array(betas[1:]) / np.array(betas[:-1])
    if np.ptp(ratios) > GEOMETRIC_RTOL * ratios.mean():
        logger.warning(f"β values {betas} are far from a geometric sequence (ratios {ratios.round(3).tolist()})")
    return betas


@dataclass
class SweepRecords:
    """One diagnostics row per beta plus the solutions of the members that ran."""
    rows: list = field(default_factory=list)
    solutions: dict = field(default_factory=dict)
    prediction: Prediction | None = None

    @property
    def frame(self):
        frame = pd.DataFrame(self.rows)
        if not frame.empty:
            frame = frame.sort_values('beta', ascending=False).reset_index(drop=True)
        return frame

    @property
    def succeeded(self):
        return [row for row in self.rows if row.get('status') == 'converged']

    @property
    def failures(self):
        return [row for row in self.rows if row.get('status') != 'converged']

    def fits(self):
        """Slope fits of mu and E against log(1/beta) and the diameter exponent."""
        results = {}
        for name, fitter, column in (('mu', fit_log_slope, 'mu'), ('E', fit_log_slope, 'E'),
                                     ('diam_power', fit_power, 'diam')):
            try:
                results[name] = fitter(self, column)
            except FitError as e:
                logger.warning(f"Fit of {column} skipped: {e}")
        return results

    def summary(self):
        fits = self.fits()
        summary = {
            'members': len(self.rows),
            'converged': len(self.succeeded),
            'failed': len(self.failures),
        }
        if self.prediction:
            summary.update({f'predicted_{k}': v for k, v in self.prediction.to_dict().items() if k != 'kind'})
        for name, fit in fits.items():
            summary.update({f'{name}_{k}': v for k, v in fit.to_dict().items()})
        if self.prediction and 'mu' in fits:
            summary['mu_slope_rel_error'] = abs(fits['mu'].slope / self.prediction.mu_slope - 1.0)
        if self.prediction and 'E' in fits:
            summary['E_slope_rel_error'] = abs(fits['E'].slope / self.prediction.E_slope - 1.0)
        return summary


def sweep_table(records):
    """
    Sweep CSV table: diagnostics per member, the predictions, and per-member
    residuals of the mu and E fits against log(1/beta).
    """
    frame = records.frame
    if frame.empty:
        return frame
    if records.prediction:
        frame['predicted_r_star'] = records.prediction.r_star
        frame['predicted_mu_slope'] = records.prediction.mu_slope
        frame['predicted_E_slope'] = records.prediction.E_slope
    x = np.log(1.0 / frame['beta'].to_numpy(dtype=float))
    for name, fit in records.fits().items():
        if name == 'diam_power':
            continue
        frame[f'{name}_fit_residual'] = frame[name].astype(float) - (fit.slope * x + fit.intercept)
    return frame


def solve_member(config, beta):
    """Solve one sweep member and build its diagnostics row."""
    from swirlring.diagnostics import build_record
    from swirlring.variational import solve

    params = config.params_for(beta)
    domain = config.make_domain()
    solution = solve(params, domain, config.domain.n_r, config.domain.n_z, **config.band_options())
    record = build_record(solution, n_tests=config.n_tests, seed=config.seed)
    if not solution.converged:
        raise ConvergenceError(f"beta={beta:g} not converged after {solution.iterations} iterations",
                               solution=solution, record=record)
    return solution, record


def _failure_row(config, beta, error):
    row = {'beta': beta, 'W': config.params.W, 'alpha': config.params.alpha,
           'domain': config.domain.kind.value, 'status': 'failed',
           'error_code': getattr(error, 'code', 'error'), 'error': str(error)}
    if isinstance(error, ConvergenceError):
        row.update(error.details.get('record') or {})
        row['status'] = 'not_converged'
        row['error_code'] = error.code
        row['error'] = error.message
    return row


def run_sweep(config, betas, workers=None, member=solve_member, on_member_done=None, label='sweep'):
    """
    Run independent solves over a list of beta values.

    Members run on a thread pool; failures are recorded per member. The
    callback, if any, is invoked on the calling thread as members finish.

    Args:
        config: RunConfig holding the base parameters
        betas: at least 3 distinct beta values
        workers: thread count (default SWIRLRING_WORKERS or min(4, cpu count))
        member: callable(config, beta) -> (solution, record)
        on_member_done: callable(beta, row, solution_or_None)
        label: key under which progress is tracked in active_sweeps

    Returns:
        SweepRecords (raises SweepError if no member converged)
    """
    betas = check_betas(betas)
    if workers is None:
        workers = int(os.environ.get('SWIRLRING_WORKERS', min(4, os.cpu_count() or 1)))
    workers = max(1, min(workers, len(betas)))
    records = SweepRecords(prediction=predict(config.domain.kind, config.params.W, config.domain.d))

    with sweeps_lock:
        active_sweeps[label] = {'started': datetime.utcnow(), 'total': len(betas), 'done': 0, 'failed': 0}
    logger.info(f"Sweep '{label}': {len(betas)} members on {workers} worker(s), betas={betas}")

    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(member, config, beta): beta for beta in betas}
            for future in as_completed(futures):
                beta = futures[future]
                solution = None
                try:
                    solution, row = future.result()
                    row = dict(row, status='converged')
                except SwirlringError as e:
                    logger.warning(f"Sweep member beta={beta:g} failed: {e}")
                    row = _failure_row(config, beta, e)
                    if isinstance(e, ConvergenceError):
                        solution = e.details.get('solution')
                except Exception as e:
                    logger.error(f"Sweep member beta={beta:g} crashed: {e}")
                    row = _failure_row(config, beta, e)
                records.rows.append(row)
                if solution is not None:
                    records.solutions[beta] = solution
                with sweeps_lock:
                    active_sweeps[label]['done'] += 1
                    if row['status'] != 'converged':
                        active_sweeps[label]['failed'] += 1
                if on_member_done:
                    on_member_done(beta, row, solution)
    finally:
        with sweeps_lock:
            active_sweeps.pop(label, None)

    if not records.succeeded:
        raise SweepError(f"none of the {len(betas)} sweep members converged", records=records)
    logger.info(f"Sweep '{label}' done: {len(records.succeeded)}/{len(betas)} converged")
    return records
