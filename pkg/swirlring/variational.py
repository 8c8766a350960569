"""
Constrained maximization of the penalized ring energy

    E(zeta) = 1/2 int zeta K zeta dnu + int zeta * background dnu
              - (beta^2/2) int r^2 (zeta - alpha/beta)_+^2 dnu

over 0 <= zeta <= Lambda/beta^2, int zeta dnu = 1, supp zeta in the support
box, by a damped bathtub fixed point with multiplier bisection and Steiner
symmetrization in z.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from swirlring.elliptic import DEFAULT_TOL_LIN, PRECONDITIONERS, apply_K, assemble
from swirlring.errors import ConfigError, GeometryError
from swirlring.geometry import DomainKind, RefinementBand, check_resolution, make_grid

logger = logging.getLogger(__name__)

LAMBDA_FACTOR = 10.0
DEFAULT_TOL_FIX = 1e-7
DEFAULT_TOL_CIRC = 1e-10
DEFAULT_MAX_ITER = 2000  # the radial drift of the core contracts slowly below one band row
DEFAULT_DAMPING = 1.0
MIN_DAMPING = 1.0 / 64
DAMPING_RECOVERY = 10  # steps without an energy decrease before theta doubles
TRANSLATE_EVERY = 5
MAX_TRANSLATION_TRIALS = 60
MAX_TRANSLATION_STEP = 256
MAX_BISECTION = 200
MIN_DISC_NODES = 12
MAX_RENORMALIZE = 50
ENERGY_SLACK = 1e-12


def default_lambda(alpha, beta):
    """Cap coefficient Lambda_0 = 10 max{1, alpha beta}."""
    return LAMBDA_FACTOR * max(1.0, alpha * beta)


@dataclass(frozen=True)
class SolverParams:
    beta: float
    W: float
    alpha: float = 0.0
    Lambda: float | None = None
    d: float | None = None
    tol_fix: float = DEFAULT_TOL_FIX
    tol_circ: float = DEFAULT_TOL_CIRC
    tol_lin: float = DEFAULT_TOL_LIN
    max_iter: int = DEFAULT_MAX_ITER
    damping: float = DEFAULT_DAMPING
    translate_every: int = TRANSLATE_EVERY
    preconditioner: str = 'lu'

    def __post_init__(self):
        if self.Lambda is None:
            object.__setattr__(self, 'Lambda', default_lambda(self.alpha, self.beta))
        self.validate()

    def validate(self):
        """Raise ConfigError naming the first violated bound."""
        if not 0.0 < self.beta < 1.0:
            raise ConfigError('params.beta', f"β must lie in (0,1) (got {self.beta})")
        if not self.W > 0.0:
            raise ConfigError('params.W', f"W must be positive (got {self.W})")
        if not self.alpha >= 0.0:
            raise ConfigError('params.alpha', f"α must be nonnegative (got {self.alpha})")
        floor = max(self.alpha * self.beta, 1.0)
        if not self.Lambda > floor:
            raise ConfigError('params.Lambda', f"Λ must exceed max{{αβ, 1}} = {floor:g} (got {self.Lambda})")
        for key in ('tol_fix', 'tol_circ', 'tol_lin'):
            if not getattr(self, key) > 0.0:
                raise ConfigError(f'params.{key}', f"{key} must be positive (got {getattr(self, key)})")
        if int(self.max_iter) < 1:
            raise ConfigError('params.max_iter', f"max_iter must be at least 1 (got {self.max_iter})")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigError('params.damping', f"damping θ must lie in (0,1] (got {self.damping})")
        if int(self.translate_every) < 0:
            raise ConfigError('params.translate_every', "translate_every must be >= 0")
        if self.preconditioner not in PRECONDITIONERS:
            raise ConfigError('params.preconditioner',
                              f"preconditioner must be one of {', '.join(PRECONDITIONERS)}")

    @property
    def log_inv_beta(self):
        return math.log(1.0 / self.beta)

    @property
    def cap(self):
        return self.Lambda / self.beta ** 2

    def to_dict(self):
        return {
            'beta': self.beta, 'W': self.W, 'alpha': self.alpha, 'Lambda': self.Lambda, 'd': self.d,
            'tol_fix': self.tol_fix, 'tol_circ': self.tol_circ, 'tol_lin': self.tol_lin,
            'max_iter': self.max_iter, 'damping': self.damping,
            'translate_every': self.translate_every, 'preconditioner': self.preconditioner,
        }


def regime_warnings(params, kind, d=None):
    """Warnings for parameters outside the concentration regime of each domain."""
    kind = DomainKind.parse(kind)
    warnings = []
    if kind == DomainKind.CYLINDER and d and params.W <= 1.0 / (4 * math.pi * d):
        warnings.append(f"W={params.W:g} <= 1/(4πd)={1.0 / (4 * math.pi * d):g}: "
                        f"the core is expected to concentrate at the wall r=d")
    if kind == DomainKind.EXTERIOR_BALL and d and params.W >= 1.0 / (6 * math.pi * d):
        warnings.append(f"W={params.W:g} >= 1/(6πd)={1.0 / (6 * math.pi * d):g}: "
                        f"the core is expected to concentrate on the ball (r*=d)")
    for message in warnings:
        logger.warning(message)
    return warnings


@dataclass(frozen=True)
class SupportBox:
    """Rectangle {r < r_max, |z| < z_max} restricting supp zeta; None means unbounded."""
    r_max: float | None = None
    z_max: float | None = None

    @classmethod
    def for_domain(cls, domain):
        if domain.kind == DomainKind.CYLINDER:
            return cls()
        if domain.kind == DomainKind.EXTERIOR_BALL:
            return cls(r_max=domain.box_r, z_max=domain.box_z)
        return cls(r_max=domain.box_r)

    def mask(self, grid):
        inside = grid.interior.copy()
        if self.r_max is not None:
            inside &= grid.R < self.r_max
        if self.z_max is not None:
            inside &= np.abs(grid.Z) < self.z_max
        return inside

    def contains(self, r, z):
        return (self.r_max is None or r < self.r_max) and (self.z_max is None or abs(z) < self.z_max)


def background_stream(domain, params, grid):
    """
    Stream function of the imposed translation.

    Cylinder/WholeSpace: -(W r^2/2) log(1/beta).
    ExteriorBall: -(W r^2/2) log(1/beta) (1 - d^3/(r^2+z^2)^{3/2}), zero on the sphere.
    """
    R2 = grid.R ** 2
    scale = 0.5 * params.W * params.log_inv_beta
    if domain.kind != DomainKind.EXTERIOR_BALL:
        return -scale * R2
    rho2 = R2 + grid.Z ** 2
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(rho2 > 0, (domain.d ** 2 / rho2) ** 1.5, 0.0)
    return -scale * R2 * (1.0 - ratio)


def bathtub_update(psi, params, grid, box_mask):
    """
    Pointwise maximizer of zeta psi - (beta^2 r^2/2)(zeta - alpha/beta)_+^2 under the cap.

    zeta = psi/(r^2 beta^2) + alpha/beta on {0 < psi < (Lambda - alpha beta) r^2},
    Lambda/beta^2 on {psi >= (Lambda - alpha beta) r^2}, zero elsewhere and on the axis.
    """
    R2 = grid.R ** 2
    cap = params.cap
    active = box_mask & (psi > 0) & (R2 > 0)
    capped = active & (psi >= (params.Lambda - params.alpha * params.beta) * R2)
    middle = active & ~capped
    zeta = np.zeros(grid.shape)
    zeta[middle] = np.minimum(psi[middle] / (R2[middle] * params.beta ** 2) + params.alpha / params.beta, cap)
    zeta[capped] = cap
    return zeta


def circulation_given_mu(psi_free, mu, params, grid, box_mask):
    """kappa(mu) = int bathtub_update(psi_free - mu) dnu, nonincreasing in mu."""
    return grid.integrate(bathtub_update(psi_free - mu, params, grid, box_mask))


@dataclass(frozen=True)
class MultiplierResult:
    mu: float
    circulation: float
    status: str  # converged | unconstrained | discontinuous
    lower: float | None = None

    def to_dict(self):
        return {'mu': self.mu, 'circulation': self.circulation, 'status': self.status}


def solve_multiplier(psi_free, params, grid, box_mask):
    """
    Bisection for the smallest mu >= 0 with |kappa(mu) - 1| <= tol_circ.

    Returns:
        MultiplierResult; status 'unconstrained' when kappa(0) < 1 (mu = 0),
        'discontinuous' when kappa jumps across 1 between adjacent floats
    """
    tol = params.tol_circ
    kappa0 = circulation_given_mu(psi_free, 0.0, params, grid, box_mask)
    if kappa0 < 1.0 - tol:
        logger.warning(f"circulation at mu=0 is {kappa0:.6g} < 1: multiplier unconstrained")
        return MultiplierResult(0.0, kappa0, 'unconstrained')
    if kappa0 <= 1.0 + tol:
        return MultiplierResult(0.0, kappa0, 'converged')

    lo = 0.0
    hi = float(np.max(psi_free[box_mask]))
    target = 1.0 + tol
    for _ in range(MAX_BISECTION):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if circulation_given_mu(psi_free, mid, params, grid, box_mask) > target:
            lo = mid
        else:
            hi = mid
    kappa = circulation_given_mu(psi_free, hi, params, grid, box_mask)
    if abs(kappa - 1.0) <= tol:
        return MultiplierResult(hi, kappa, 'converged', lower=lo)
    return MultiplierResult(hi, kappa, 'discontinuous', lower=lo)


def multiplier_field(psi_free, result, params, grid, box_mask):
    """
    Vorticity selected by a multiplier result.

    When kappa jumps across 1 the nodes entering the positivity set between
    the two bracketing multipliers receive the fraction of their value that
    restores unit circulation (the flat level of the bathtub principle).
    """
    zeta = bathtub_update(psi_free - result.mu, params, grid, box_mask)
    if result.status != 'discontinuous' or result.lower is None:
        return zeta
    upper_zeta = bathtub_update(psi_free - result.lower, params, grid, box_mask)
    level = (upper_zeta > 0) & (zeta == 0)
    level_mass = grid.integrate(np.where(level, upper_zeta, 0.0))
    if level_mass <= 0:
        return zeta
    fraction = min(max((1.0 - result.circulation) / level_mass, 0.0), 1.0)
    zeta[level] = fraction * upper_zeta[level]
    return zeta


def energy_terms(zeta, psi_K, params, grid, background):
    """The three pieces of E: kinetic, background (translation and ball terms) and penalty."""
    kinetic = 0.5 * grid.integrate(zeta * psi_K)
    translation = grid.integrate(zeta * background)
    excess = np.maximum(zeta - params.alpha / params.beta, 0.0)
    penalty = 0.5 * params.beta ** 2 * grid.integrate(grid.R ** 2 * excess ** 2)
    return {'kinetic': kinetic, 'background': translation, 'penalty': penalty}


def energy(zeta, psi_K, params, grid, background):
    """E_beta(zeta) given psi_K = K zeta."""
    terms = energy_terms(zeta, psi_K, params, grid, background)
    return terms['kinetic'] + terms['background'] - terms['penalty']


def steiner_symmetrize(zeta, grid):
    """
    Symmetric-decreasing rearrangement of every r-row in z.

    Acts on the uniform z band of the grid: the row maximum goes to z = 0 and
    consecutive pairs of the decreasingly sorted values are averaged onto +-z_k.
    """
    j0, j1 = grid.z_band
    jc = (j0 + j1) // 2
    if (j1 - j0) % 2 != 1 or grid.z[jc] != 0.0:
        raise GeometryError("Steiner symmetrization needs a uniform z band centred on z = 0")
    outside = zeta.copy()
    outside[:, j0:j1] = 0.0
    if np.any(outside != 0.0):
        raise GeometryError("vorticity reaches outside the uniform z band; widen the refinement band")
    m = (j1 - j0 - 1) // 2
    ordered = -np.sort(-zeta[:, j0:j1], axis=1)
    pairs = 0.5 * (ordered[:, 1::2] + ordered[:, 2::2])
    result = np.zeros_like(zeta)
    result[:, jc] = ordered[:, 0]
    result[:, jc + 1:jc + 1 + m] = pairs
    result[:, jc - m:jc] = pairs[:, ::-1]
    return result


def renormalize(zeta, params, grid):
    """
    Scale to unit circulation under the cap.

    Mass clipped at the cap is handed back to the uncapped nodes by
    rescaling them, repeated until the circulation is 1 to tol_circ.
    """
    total = grid.integrate(zeta)
    if total <= 0.0:
        raise GeometryError("vorticity has no mass to renormalize")
    cap = params.cap
    zeta = np.minimum(zeta / total, cap)
    for _ in range(MAX_RENORMALIZE):
        total = grid.integrate(zeta)
        if abs(total - 1.0) <= params.tol_circ:
            return zeta
        capped = zeta >= cap
        free = grid.integrate(np.where(capped, 0.0, zeta))
        held = total - free
        if free <= 0.0 or held >= 1.0:
            raise GeometryError(f"cap Λ/β²={cap:.6g} holds circulation {held:.6g} >= 1 on its own; "
                                f"raise Lambda or refine the grid")
        zeta = np.where(capped, cap, np.minimum(zeta * ((1.0 - held) / free), cap))
    logger.warning(f"renormalization left circulation {grid.integrate(zeta):.15g} after {MAX_RENORMALIZE} passes")
    return zeta


def cap_activity(zeta, params, grid):
    """nu-measure of the capped set {zeta = Lambda/beta^2}."""
    capped = np.isclose(zeta, params.cap, rtol=1e-12, atol=0.0)
    return float(np.sum(grid.nu[capped]))


def initial_guess(params, grid, a, box_mask):
    """
    Disc of radius beta/sqrt(a pi) at (a, 0) with value beta^-2, rescaled to unit circulation.
    """
    radius = params.beta / math.sqrt(a * math.pi)
    disc = box_mask & ((grid.R - a) ** 2 + grid.Z ** 2 < radius ** 2)
    count = int(np.count_nonzero(disc))
    if count < MIN_DISC_NODES:
        raise GeometryError(
            f"initial disc of radius {radius:.3g} at r={a:.4g} covers {count} nodes "
            f"(need {MIN_DISC_NODES}); refine the grid near the core")
    zeta = np.where(disc, params.beta ** -2, 0.0)
    return zeta / grid.integrate(zeta)


def predicted_radius(domain, W):
    """Concentration radius r* predicted for the domain."""
    from swirlring.asymptotics import predict
    return predict(domain.kind, W, domain.d).r_star


def _support_extent(zeta, grid):
    rows = np.flatnonzero(zeta.any(axis=1))
    cols = np.flatnonzero(zeta.any(axis=0))
    if len(rows) == 0:
        return 0.0
    return math.hypot(grid.r[rows[-1]] - grid.r[rows[0]], grid.z[cols[-1]] - grid.z[cols[0]])


@dataclass(eq=False)
class Solution:
    """Result of a fixed-point solve.

    zeta = bathtub_update(psi) exactly; psi = psi_free - mu where psi_free is
    built from the last iterate; psi_K = K zeta.
    """
    zeta: np.ndarray
    psi: np.ndarray
    xi: np.ndarray
    psi_K: np.ndarray
    mu: float
    energy: float
    circulation: float
    iterations: int
    converged: bool
    cap_active_measure: float
    multiplier_status: str
    damping: float
    params: SolverParams
    grid: object = None
    domain: object = None
    history: list = field(default_factory=list)
    energy_decreases: int = 0
    translation_rows: int = 0
    op: object = field(default=None, repr=False)

    def to_dict(self):
        return {
            'mu': self.mu,
            'energy': self.energy,
            'circulation': self.circulation,
            'iterations': self.iterations,
            'converged': self.converged,
            'cap_active_measure': self.cap_active_measure,
            'multiplier_status': self.multiplier_status,
            'damping': self.damping,
            'energy_decreases': self.energy_decreases,
            'translation_rows': self.translation_rows,
        }


class _Problem:
    """Fixed data of one solve: operator, support box and background stream."""

    def __init__(self, params, domain, grid, op=None):
        self.params = params
        self.domain = domain
        self.grid = grid
        self.op = op or assemble(grid, domain, preconditioner=params.preconditioner, tol_lin=params.tol_lin)
        self.box = SupportBox.for_domain(domain)
        self.box_mask = self.box.mask(grid)
        self.background = background_stream(domain, params, grid)

    def stream(self, zeta, warm=None):
        psi = apply_K(self.op, zeta, x0=warm)
        # reflection equivariance of K, restored after round-off
        return 0.5 * (psi + self.grid.reflect(psi))

    def energy(self, zeta, psi_K):
        return energy(zeta, psi_K, self.params, self.grid, self.background)

    def renormalize(self, zeta):
        return renormalize(zeta, self.params, self.grid)

    def shift_rows(self, zeta, step):
        """Translate zeta radially by whole rows inside the uniform r band; None if it would leave it."""
        rows = np.flatnonzero(zeta.any(axis=1))
        i0, i1 = self.grid.r_band
        if len(rows) == 0 or rows[0] < i0 or rows[-1] >= i1:
            return None
        if rows[0] + step < i0 or rows[-1] + step >= i1:
            return None
        shifted = np.zeros_like(zeta)
        shifted[rows + step] = zeta[rows]
        if np.any(shifted[~self.box_mask] != 0.0):
            return None
        return shifted

    def translation_search(self, zeta, psi_K, current):
        """Pattern search over radial translations; accepts only energy increases."""
        rows = np.flatnonzero(zeta.any(axis=1))
        if len(rows) == 0:
            return zeta, psi_K, current, 0
        step = max(1, (rows[-1] - rows[0] + 1) // 2)
        moved = 0
        direction = 1
        trials = 0
        slack = ENERGY_SLACK * max(1.0, abs(current))
        while step >= 1 and trials < MAX_TRANSLATION_TRIALS:
            accepted = False
            for sign in (direction, -direction):
                trials += 1
                shifted = self.shift_rows(zeta, sign * step)
                if shifted is None:
                    continue
                candidate = self.renormalize(shifted)
                psi_c = self.stream(candidate, warm=psi_K)
                value = self.energy(candidate, psi_c)
                if value > current + slack:
                    zeta, psi_K, current = candidate, psi_c, value
                    moved += sign * step
                    direction = sign
                    accepted = True
                    break
            step = min(2 * step, MAX_TRANSLATION_STEP) if accepted else step // 2
        if moved:
            i0 = self.grid.r_band[0]
            h = self.grid.r[i0 + 1] - self.grid.r[i0]
            logger.info(f"Translated core by {moved} rows ({moved * h:+.4g} in r), E={current:.12g}")
        return zeta, psi_K, current, moved


def iterate(params, domain, grid, zeta0=None, a=None, op=None):
    """
    Damped bathtub fixed point with circulation renormalization.

    Each step: psi_K = K zeta, psi_free = psi_K + background, mu from
    solve_multiplier, zeta_hat = bathtub_update(psi_free - mu), then
    zeta <- steiner((1 - theta) zeta + theta zeta_hat) renormalized. theta is
    halved while the energy would decrease. Every translate_every steps, and
    before declaring convergence, radial translations of the iterate are
    tried. Stops when the L1(nu) change is below tol_fix.

    Args:
        params: SolverParams
        domain: DomainSpec
        grid: Grid for the domain
        zeta0: optional starting vorticity (default: disc at a)
        a: disc radius for the default start (default: predicted r*)
        op: optional pre-assembled DiscreteOperator

    Returns:
        Solution (converged flag set accordingly; the best iterate otherwise)
    """
    problem = _Problem(params, domain, grid, op=op)
    if zeta0 is None:
        if a is None:
            a = predicted_radius(domain, params.W)
        if not problem.box.contains(a, 0.0):
            raise GeometryError(f"initial radius a={a:g} lies outside the support box")
        zeta0 = initial_guess(params, grid, a, problem.box_mask)

    zeta = problem.renormalize(steiner_symmetrize(np.where(problem.box_mask, zeta0, 0.0), grid))
    psi_K = problem.stream(zeta)
    current = problem.energy(zeta, psi_K)
    theta = params.damping
    calm = 0
    history = []
    decreases = 0
    translated = 0
    converged = False
    iterations = 0

    for k in range(1, int(params.max_iter) + 1):
        iterations = k
        psi_free = psi_K + problem.background
        result = solve_multiplier(psi_free, params, grid, problem.box_mask)
        zeta_hat = multiplier_field(psi_free, result, params, grid, problem.box_mask)
        slack = ENERGY_SLACK * max(1.0, abs(current))
        while True:
            candidate = problem.renormalize(steiner_symmetrize((1.0 - theta) * zeta + theta * zeta_hat, grid))
            psi_c = problem.stream(candidate, warm=psi_K)
            value = problem.energy(candidate, psi_c)
            if value >= current - slack or theta <= MIN_DAMPING:
                break
            theta = max(theta / 2.0, MIN_DAMPING)
            calm = 0
            logger.warning(f"Energy decreased at step {k}; damping reduced to {theta:g}")
        if value < current - slack:
            decreases += 1
            calm = 0
            logger.warning(f"Energy decreased at minimum damping (step {k}): {current:.12g} -> {value:.12g}")
        else:
            calm += 1
            if calm >= DAMPING_RECOVERY and theta < params.damping:
                theta = min(2.0 * theta, params.damping)
                calm = 0
                logger.info(f"Damping restored to {theta:g} at step {k}")

        change = grid.integrate(np.abs(candidate - zeta))
        zeta, psi_K, current = candidate, psi_c, value
        diam = _support_extent(zeta, grid)
        history.append({'iteration': k, 'energy': current, 'mu': result.mu,
                        'circulation': result.circulation, 'diam': diam, 'theta': theta, 'change': change})
        logger.info(f"iter {k} {current:.12g} {result.mu:.12g} {result.circulation:.12g} {diam:.6g} {theta:.6g}")

        searching = params.translate_every > 0 and (change <= params.tol_fix or k % params.translate_every == 0)
        moved = 0
        if searching:
            zeta, psi_K, current, moved = problem.translation_search(zeta, psi_K, current)
            translated += moved
        if change <= params.tol_fix and moved == 0:
            converged = True
            break

    psi_free = psi_K + problem.background
    result = solve_multiplier(psi_free, params, grid, problem.box_mask)
    psi = psi_free - result.mu
    zeta_out = multiplier_field(psi_free, result, params, grid, problem.box_mask)
    psi_K_out = problem.stream(zeta_out, warm=psi_K)
    final_energy = problem.energy(zeta_out, psi_K_out)
    cap_measure = cap_activity(zeta_out, params, grid)

    if not converged:
        logger.warning(f"Fixed point not converged after {iterations} iterations "
                       f"(last change {history[-1]['change'] if history else float('nan'):.3e})")
    if cap_measure > 0:
        logger.warning(f"Vorticity cap active on nu-measure {cap_measure:.3e} (Lambda={params.Lambda:g})")
    if result.mu <= 0:
        logger.warning(f"Multiplier mu={result.mu:.6g} is not positive: beta={params.beta:g} "
                       f"is outside the desingularization regime")

    return Solution(
        zeta=zeta_out,
        psi=psi,
        xi=np.maximum(psi, 0.0) / params.beta,
        psi_K=psi_K_out,
        mu=result.mu,
        energy=final_energy,
        circulation=grid.integrate(zeta_out),
        iterations=iterations,
        converged=converged,
        cap_active_measure=cap_measure,
        multiplier_status=result.status,
        damping=theta,
        params=params,
        grid=grid,
        domain=domain,
        history=history,
        energy_decreases=decreases,
        translation_rows=translated,
        op=problem.op,
    )


def disc_energy_bound(params, domain, grid, a, op=None):
    """Energy of the disc test function centred at (a, 0) (lower bound for the maximum)."""
    problem = _Problem(params, domain, grid, op=op)
    zeta = initial_guess(params, grid, a, problem.box_mask)
    return problem.energy(zeta, problem.stream(zeta))


def core_radius_bounds(domain, params, grid, a):
    """Clamp a so the starting disc sits strictly inside the admissible region."""
    clearance = 3 * params.beta / math.sqrt(max(a, params.beta) * math.pi) + 2 * grid.min_spacing
    lo = clearance
    if domain.kind == DomainKind.EXTERIOR_BALL:
        lo = domain.d + clearance
    hi = domain.box_r - clearance
    return min(max(a, lo), hi)


def solve(params, domain, n_r, n_z, refine=True, a=None, band_spacing=0.25,
          band_r_factors=(0.8, 1.6), band_core_heights=8.0):
    """
    Build the grid for a domain and run the fixed point.

    Args:
        params: SolverParams
        domain: DomainSpec
        n_r, n_z: coarse grid node counts
        refine: use a refinement band around the expected core
        a: starting radius (default: predicted r*)
        band_spacing: band spacing in units of beta
        band_r_factors: band r-range as multiples of a
        band_core_heights: band half-height in units of beta

    Returns:
        Solution with grid and domain attached
    """
    if a is None:
        a = predicted_radius(domain, params.W)
    regime_warnings(params, domain.kind, domain.d)
    band = None
    if refine:
        band = RefinementBand.around(domain, a, params.beta, spacing_factor=band_spacing,
                                     r_factors=band_r_factors, core_heights=band_core_heights)
    grid = make_grid(domain, n_r, n_z, band=band)
    check_resolution(grid, params.beta)
    a = core_radius_bounds(domain, params, grid, a)
    logger.info(f"Solving {domain.kind.value} beta={params.beta:g} W={params.W:g} alpha={params.alpha:g} from a={a:.6g}")
    return iterate(params, domain, grid, a=a)
