"""
Meridional domains, computational grids and the measure nu = r dr dz.

A grid is a tensor product of an r axis starting on the symmetry axis and
a z axis that is built from its nonnegative half and mirrored, so the
reflection z -> -z maps grid nodes onto grid nodes bitwise.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from swirlring.errors import GeometryError

logger = logging.getLogger(__name__)

DEFAULT_MARGIN = 1.0
MIN_NODES = 16
MAX_GRADING = 1.15  # ratio between neighbouring spacings outside a band
CORE_SPACING_FACTOR = 0.25  # finest spacing should not exceed beta/4
DISC_RESOLUTION = 2.5  # band spacings per radius of the starting disc beta/sqrt(a pi)


class DomainKind(str, Enum):
    CYLINDER = 'cylinder'
    EXTERIOR_BALL = 'exterior_ball'
    WHOLE_SPACE = 'whole_space'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace('-', '_').replace(' ', '_')
        aliases = {'wholespace': 'whole_space', 'exteriorball': 'exterior_ball'}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise GeometryError(f"unknown domain kind '{value}'") from None


class NodeKind(IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    EXCLUDED = 2


@dataclass(frozen=True)
class DomainSpec:
    """Admissible meridional domain with its truncation rectangle.

    box_r and box_z are the extents of the admissible support box; for
    kinds unbounded in z box_z is the computational half-height.
    """
    kind: DomainKind
    d: float | None
    r_max: float
    z_max: float
    box_r: float
    box_z: float
    W: float | None = None

    def to_dict(self):
        return {
            'kind': self.kind.value,
            'd': self.d,
            'r_max': self.r_max,
            'z_max': self.z_max,
            'box_r': self.box_r,
            'box_z': self.box_z,
            'W': self.W,
        }


def make_domain(kind, d=None, W=None, margin_r=DEFAULT_MARGIN, margin_z=DEFAULT_MARGIN):
    """
    Build a DomainSpec whose truncation covers the support box plus margins.

    Args:
        kind: DomainKind or its string name
        d: wall radius (Cylinder) or ball radius (ExteriorBall)
        W: background-velocity coefficient, needed to size the support box
           of ExteriorBall and WholeSpace
        margin_r: radial clearance beyond the box (ignored for Cylinder)
        margin_z: axial clearance beyond the box

    Returns:
        DomainSpec
    """
    kind = DomainKind.parse(kind)
    if margin_z is None or margin_z <= 0 or (kind != DomainKind.CYLINDER and (margin_r is None or margin_r <= 0)):
        raise GeometryError(
            f"margins must be positive (got margin_r={margin_r}, margin_z={margin_z}); "
            f"a nonpositive margin places the truncation inside the support box")

    if kind in (DomainKind.CYLINDER, DomainKind.EXTERIOR_BALL):
        if d is None or not d > 0:
            raise GeometryError(f"{kind.value} requires d > 0 (got {d})")
    if kind in (DomainKind.EXTERIOR_BALL, DomainKind.WHOLE_SPACE):
        if W is None or not W > 0:
            raise GeometryError(f"{kind.value} requires W > 0 to size the support box (got {W})")

    if kind == DomainKind.CYLINDER:
        return DomainSpec(kind, float(d), r_max=float(d), z_max=float(d) + margin_z,
                          box_r=float(d), box_z=float(d), W=W)

    if kind == DomainKind.EXTERIOR_BALL:
        from swirlring.asymptotics import r_star_exterior
        r_star = r_star_exterior(W, d)
        box_r = r_star + 1.0
        box_z = d + 1.0
        return DomainSpec(kind, float(d), r_max=box_r + margin_r, z_max=box_z + margin_z,
                          box_r=box_r, box_z=box_z, W=W)

    box_r = 1.0 / (2 * math.pi * W)
    return DomainSpec(kind, None, r_max=box_r + margin_r, z_max=box_r + margin_z,
                      box_r=box_r, box_z=box_r, W=W)


@dataclass(frozen=True)
class RefinementBand:
    """Rectangle of uniform fine spacing around the expected core."""
    r_lo: float
    r_hi: float
    z_half: float
    spacing: float

    @classmethod
    def around(cls, domain, a, beta, spacing_factor=CORE_SPACING_FACTOR,
               r_factors=(0.8, 1.6), core_heights=8.0):
        """
        Default band for a core expected near (a, 0) at scale beta.

        The spacing is the smaller of spacing_factor * beta and the starting
        disc radius beta/sqrt(a pi) over DISC_RESOLUTION, so the disc is
        rasterized onto enough nodes at any radius.
        """
        disc_radius = beta / math.sqrt(max(a, beta) * math.pi)
        spacing = min(spacing_factor * beta, disc_radius / DISC_RESOLUTION)
        r_lo = max(r_factors[0] * a, 4 * spacing)
        r_hi = min(r_factors[1] * a, domain.box_r)
        if domain.kind == DomainKind.EXTERIOR_BALL:
            r_lo = max(r_lo, domain.d + 2 * spacing)
        z_half = min(core_heights * beta, domain.box_z)
        return cls(r_lo=r_lo, r_hi=r_hi, z_half=z_half, spacing=spacing)

    def to_dict(self):
        return {'r_lo': self.r_lo, 'r_hi': self.r_hi, 'z_half': self.z_half, 'spacing': self.spacing}


def _cell_widths(x):
    w = np.empty_like(x)
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    return w


def _uniform_range(x, lo, hi, tol=1e-9):
    """Widest index range [lo, hi) grown outward whose nodes share one cell width."""
    widths = _cell_widths(x)
    ref = widths[lo]
    while lo > 0 and abs(widths[lo - 1] - ref) <= tol * ref:
        lo -= 1
    while hi < len(x) and abs(widths[hi] - ref) <= tol * ref:
        hi += 1
    return lo, hi


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor-product meridional grid with node classification and weights.

    Arrays are indexed [i, j] with i along r and j along z. ``nu`` holds
    the nu-measure weights (cell area times nodal r), ``area`` the plain
    dr dz cell areas.
    """
    r: np.ndarray
    z: np.ndarray
    mask: np.ndarray
    nu: np.ndarray
    area: np.ndarray
    kind: DomainKind | None = None
    d: float | None = None
    r_band: tuple = (0, 0)
    z_band: tuple = (0, 0)
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_axes(cls, r, z, kind=None, d=None, r_band=None, z_band=None, meta=None):
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        if r.ndim != 1 or z.ndim != 1 or len(r) < 3 or len(z) < 3:
            raise GeometryError("grid axes must be 1-d with at least 3 nodes")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(z) <= 0):
            raise GeometryError("grid axes must be strictly increasing")
        if r[0] < 0:
            raise GeometryError("r axis must lie in r >= 0")
        if not np.array_equal(z, -z[::-1]):
            raise GeometryError("z axis must be symmetric under z -> -z")

        R, Z = np.meshgrid(r, z, indexing='ij')
        mask = np.full(R.shape, NodeKind.INTERIOR, dtype=np.int8)
        if kind == DomainKind.EXTERIOR_BALL:
            inside = R ** 2 + Z ** 2 < d ** 2
            mask[inside] = NodeKind.EXCLUDED
            # staircase boundary: any node touching an excluded node is Dirichlet
            touching = np.zeros_like(inside)
            touching[1:, :] |= inside[:-1, :]
            touching[:-1, :] |= inside[1:, :]
            touching[:, 1:] |= inside[:, :-1]
            touching[:, :-1] |= inside[:, 1:]
            mask[touching & ~inside] = NodeKind.DIRICHLET
        mask[0, :] = np.where(mask[0, :] == NodeKind.EXCLUDED, NodeKind.EXCLUDED, NodeKind.DIRICHLET)
        mask[-1, :] = NodeKind.DIRICHLET
        mask[:, 0] = NodeKind.DIRICHLET
        mask[:, -1] = NodeKind.DIRICHLET

        area = np.outer(_cell_widths(r), _cell_widths(z))
        nu = area * R
        nu[mask == NodeKind.EXCLUDED] = 0.0
        nu[R == 0.0] = 0.0

        if z_band is None:
            jc = len(z) // 2
            lo, hi = _uniform_range(z, jc, jc + 1)
            m = min(jc - lo, hi - 1 - jc)
            z_band = (jc - m, jc + m + 1)
        if r_band is None:
            i = int(np.argmin(_cell_widths(r)[1:-1])) + 1
            r_band = _uniform_range(r, i, i + 1)

        if not np.any(mask == NodeKind.INTERIOR):
            raise GeometryError("grid has no interior nodes")
        return cls(r=r, z=z, mask=mask, nu=nu, area=area, kind=kind, d=d,
                   r_band=tuple(r_band), z_band=tuple(z_band), meta=dict(meta or {}))

    @property
    def shape(self):
        return (len(self.r), len(self.z))

    @property
    def size(self):
        return len(self.r) * len(self.z)

    @property
    def R(self):
        return np.broadcast_to(self.r[:, None], self.shape)

    @property
    def Z(self):
        return np.broadcast_to(self.z[None, :], self.shape)

    @property
    def interior(self):
        return self.mask == NodeKind.INTERIOR

    @property
    def excluded(self):
        return self.mask == NodeKind.EXCLUDED

    @property
    def min_spacing(self):
        return float(min(np.diff(self.r).min(), np.diff(self.z).min()))

    def zeros(self):
        return np.zeros(self.shape)

    def integrate(self, f):
        """Integral of a nodal field against nu."""
        return float(np.sum(f * self.nu))

    def integrate_area(self, f):
        """Integral of a nodal field against dr dz."""
        return float(np.sum(f * self.area))

    def reflect(self, f):
        return f[:, ::-1]

    def to_dict(self):
        return {
            'n_r': len(self.r),
            'n_z': len(self.z),
            'kind': self.kind.value if self.kind else None,
            'd': self.d,
            'min_spacing': self.min_spacing,
            'r_band': list(self.r_band),
            'z_band': list(self.z_band),
            'interior_nodes': int(np.count_nonzero(self.interior)),
            'total_nu': float(self.nu.sum()),
        }


def _graded_side(start, end, h, h_coarse):
    """Nodes after ``start`` up to and including ``end``, spacing growing from h."""
    direction = 1.0 if end > start else -1.0
    points = []
    x = start
    step = h
    while True:
        if abs(end - x) <= 1.5 * step:
            points.append(end)
            break
        x = x + direction * step
        points.append(x)
        step = min(step * MAX_GRADING, h_coarse)
    return np.array(points)


def _banded_axis(lo, hi, band_lo, band_hi, h, h_coarse):
    """Axis on [lo, hi] with uniform spacing h on the band. Returns (axis, band index range)."""
    band_lo = max(lo, band_lo)
    band_hi = min(hi - 2 * h, band_hi)
    if band_hi <= band_lo:
        raise GeometryError(f"refinement band [{band_lo}, {band_hi}] is empty inside [{lo}, {hi}]")
    m = max(1, int(round((band_hi - band_lo) / h)))
    core = band_lo + h * np.arange(m + 1)
    right = _graded_side(core[-1], hi, h, max(h_coarse, h))
    if core[0] > lo:
        left = _graded_side(core[0], lo, h, max(h_coarse, h))[::-1]
    else:
        left = np.array([])
    axis = np.concatenate([left, core, right])
    start = len(left)
    return axis, (start, start + m + 1)


def make_grid(domain, n_r, n_z, band=None):
    """
    Build the computational grid for a domain.

    Without a band the grid is uniform with n_r x n_z nodes. With a
    RefinementBand the band is uniform at band.spacing and the spacing grows
    geometrically outside it up to the coarse spacing implied by n_r and n_z,
    so the node counts differ from n_r and n_z.

    Args:
        domain: DomainSpec
        n_r: number of r nodes of the coarse grid (>= 16)
        n_z: number of z nodes of the coarse grid (>= 16, odd)
        band: optional RefinementBand

    Returns:
        Grid (nu weights included)
    """
    if n_r < MIN_NODES or n_z < MIN_NODES:
        raise GeometryError(f"grid needs at least {MIN_NODES} nodes per axis (got {n_r} x {n_z})")
    if n_z % 2 == 0:
        raise GeometryError(f"n_z must be odd so that z = 0 is a grid line (got {n_z})")

    half = (n_z - 1) // 2
    if band is None:
        r = np.linspace(0.0, domain.r_max, n_r)
        z_pos = np.linspace(0.0, domain.z_max, half + 1)
        r_band = (1, n_r - 1)
        z_band = None
    else:
        h_r = domain.r_max / (n_r - 1)
        h_z = domain.z_max / half
        r, r_band = _banded_axis(0.0, domain.r_max, band.r_lo, band.r_hi, band.spacing, h_r)
        z_pos, (_, m1) = _banded_axis(0.0, domain.z_max, 0.0, band.z_half, band.spacing, h_z)
        z_band = (len(z_pos) - m1, len(z_pos) - 1 + m1)

    z = np.concatenate([-z_pos[:0:-1], z_pos])
    meta = {'band': band.to_dict() if band else None}
    grid = Grid.from_axes(r, z, kind=domain.kind, d=domain.d, r_band=r_band, z_band=z_band, meta=meta)
    logger.info(f"Grid {grid.shape[0]}x{grid.shape[1]} for {domain.kind.value}, "
                f"min spacing {grid.min_spacing:.3g}, {grid.to_dict()['interior_nodes']} interior nodes")
    return grid


def check_resolution(grid, beta):
    """
    Check the finest spacing against the core scale beta.

    Returns:
        (ok, message) tuple; a warning is logged when not ok
    """
    limit = CORE_SPACING_FACTOR * beta
    if grid.min_spacing > limit:
        message = (f"grid too coarse for beta={beta:g}: finest spacing {grid.min_spacing:.3g} "
                   f"exceeds beta/4 = {limit:.3g}; refine the grid or the band")
        logger.warning(message)
        return False, message
    return True, ''
