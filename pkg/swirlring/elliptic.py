"""
Weak-form discretization of the meridional swirl operator

    L psi = -(1/r) d/dr((1/r) d psi/dr) - (1/r^2) d^2 psi/dz^2

and its zero-Dirichlet inverse K. The bilinear form int (1/r^2) grad u . grad v dnu
is assembled as a 5-point finite-volume stencil: r-faces carry 1/r at the
face midpoint, z-faces carry the nodal cell width over r. Dirichlet rows
(axis, truncation boundary, staircase ball boundary) are eliminated.
"""
import logging
from threading import Lock

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from swirlring.errors import GeometryError, LinearSolverError

logger = logging.getLogger(__name__)

DEFAULT_TOL_LIN = 1e-10
MAX_CG_ITERATIONS = 5000
PRECONDITIONERS = ('lu', 'ilu', 'jacobi')
ILU_DROP_TOL = 1e-5
ILU_FILL_FACTOR = 20


class DiscreteOperator:
    """Assembled SPD system on the Interior nodes of a grid."""

    def __init__(self, grid, rows, preconditioner='lu', tol_lin=DEFAULT_TOL_LIN):
        """
        Args:
            grid: Grid the operator lives on
            rows: CSR matrix (interior nodes x all nodes) of the weak form
            preconditioner: one of PRECONDITIONERS
            tol_lin: relative residual tolerance of apply_K
        """
        if preconditioner not in PRECONDITIONERS:
            raise ValueError(f"unknown preconditioner '{preconditioner}', expected one of {PRECONDITIONERS}")
        self.grid = grid
        self.rows = rows
        self.interior_index = np.flatnonzero(grid.interior.ravel())
        self.matrix = rows[:, self.interior_index].tocsr()
        self.load_weights = grid.nu.ravel()[self.interior_index]
        self.preconditioner_kind = preconditioner
        self.tol_lin = tol_lin
        self._lu = None
        self._preconditioner = None
        self._lock = Lock()

    @property
    def n_unknowns(self):
        return len(self.interior_index)

    def factor(self):
        """Sparse LU of the interior block, computed once."""
        with self._lock:
            if self._lu is None:
                self._lu = spla.splu(self.matrix.tocsc(), permc_spec='MMD_AT_PLUS_A')
            return self._lu

    def preconditioner(self):
        if self._preconditioner is not None:
            return self._preconditioner
        n = self.n_unknowns
        if self.preconditioner_kind == 'lu':
            lu = self.factor()
            M = spla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
        elif self.preconditioner_kind == 'ilu':
            ilu = spla.spilu(self.matrix.tocsc(), drop_tol=ILU_DROP_TOL, fill_factor=ILU_FILL_FACTOR)
            M = spla.LinearOperator((n, n), matvec=ilu.solve, dtype=float)
        else:
            inv_diag = 1.0 / self.matrix.diagonal()
            M = spla.LinearOperator((n, n), matvec=lambda v: inv_diag * v, dtype=float)
        self._preconditioner = M
        return M

    def load(self, zeta):
        """Right-hand side vector int zeta v dnu over interior test nodes."""
        return self.load_weights * np.asarray(zeta).ravel()[self.interior_index]

    def scatter(self, values):
        field = np.zeros(self.grid.shape)
        field.ravel()[self.interior_index] = values
        return field

    def gather(self, field):
        return np.asarray(field).ravel()[self.interior_index]

    def solve(self, b, x0=None, tol=None):
        """Preconditioned CG on the interior block. Returns (x, relative residual)."""
        tol = self.tol_lin if tol is None else tol
        norm_b = np.linalg.norm(b)
        if norm_b == 0.0:
            return np.zeros_like(b), 0.0
        x, info = spla.cg(self.matrix, b, x0=x0, rtol=tol, atol=0.0,
                          maxiter=MAX_CG_ITERATIONS, M=self.preconditioner())
        achieved = float(np.linalg.norm(b - self.matrix @ x) / norm_b)
        if info != 0:
            raise LinearSolverError(
                f"conjugate gradient did not converge (info={info}), relative residual {achieved:.3e}",
                residual=achieved, iterations=info if info > 0 else None)
        if achieved > 10 * tol:
            logger.warning(f"CG reported convergence but true residual is {achieved:.3e} (tol {tol:.1e})")
        return x, achieved

    def to_dict(self):
        return {
            'unknowns': self.n_unknowns,
            'nonzeros': int(self.matrix.nnz),
            'preconditioner': self.preconditioner_kind,
            'tol_lin': self.tol_lin,
        }


def assemble(grid, domain=None, preconditioner='lu', tol_lin=DEFAULT_TOL_LIN):
    """
    Assemble the weak form of L on a grid.

    Args:
        grid: Grid with node mask
        domain: DomainSpec (informational; the mask already encodes it)
        preconditioner: 'lu', 'ilu' or 'jacobi'
        tol_lin: relative residual tolerance used by apply_K

    Returns:
        DiscreteOperator
    """
    ii, jj = np.nonzero(grid.interior)
    if len(ii) == 0:
        raise GeometryError("cannot assemble: no interior nodes")
    r, z = grid.r, grid.z
    n_r, n_z = grid.shape
    index = np.arange(n_r * n_z).reshape(n_r, n_z)

    width_r = 0.5 * (r[ii + 1] - r[ii - 1])
    width_z = 0.5 * (z[jj + 1] - z[jj - 1])
    east = width_z / (0.5 * (r[ii + 1] + r[ii]) * (r[ii + 1] - r[ii]))
    west = width_z / (0.5 * (r[ii] + r[ii - 1]) * (r[ii] - r[ii - 1]))
    north = (width_r / r[ii]) / (z[jj + 1] - z[jj])
    south = (width_r / r[ii]) / (z[jj] - z[jj - 1])

    n_int = len(ii)
    row = np.tile(np.arange(n_int), 5)
    col = np.concatenate([index[ii, jj], index[ii + 1, jj], index[ii - 1, jj],
                          index[ii, jj + 1], index[ii, jj - 1]])
    data = np.concatenate([east + west + north + south, -east, -west, -north, -south])
    rows = sp.csr_matrix((data, (row, col)), shape=(n_int, n_r * n_z))

    op = DiscreteOperator(grid, rows, preconditioner=preconditioner, tol_lin=tol_lin)
    logger.debug(f"Assembled operator: {op.to_dict()}")
    return op


def apply_K(op, zeta, x0=None, tol=None):
    """
    Solve <psi, v>_H = int zeta v dnu with psi = 0 on Dirichlet nodes.

    Args:
        op: DiscreteOperator
        zeta: nodal field, nonnegative and zero on Excluded nodes
        x0: optional warm start (nodal field)
        tol: relative residual tolerance (default op.tol_lin)

    Returns:
        psi_K nodal field
    """
    b = op.load(zeta)
    if not np.any(b):
        return op.grid.zeros()
    start = op.gather(x0) if x0 is not None else None
    x, _ = op.solve(b, x0=start, tol=tol)
    return op.scatter(x)


def apply_L(op, psi):
    """Nodal strong-form L psi on Interior nodes (zero elsewhere); uses boundary values of psi."""
    values = (op.rows @ np.asarray(psi, dtype=float).ravel()) / op.load_weights
    return op.scatter(values)


def _dual_norm(op, v):
    if not np.any(v):
        return 0.0
    w = op.factor().solve(v) if op.preconditioner_kind == 'lu' else op.solve(v)[0]
    return float(np.sqrt(max(np.dot(v, w), 0.0)))


def residual(op, psi, zeta):
    """Relative dual-H norm of the weak-form defect of L psi = zeta.

    Absolute when zeta carries no load.
    """
    load = op.load(zeta)
    defect = op.rows @ np.asarray(psi, dtype=float).ravel() - load
    scale = _dual_norm(op, load)
    value = _dual_norm(op, defect)
    return value / scale if scale > 0 else value


def rayleigh_quotients(op, count=4, seed=0):
    """A few random Rayleigh quotients of the interior block."""
    rng = np.random.default_rng(seed)
    quotients = []
    for _ in range(count):
        v = rng.standard_normal(op.n_unknowns)
        quotients.append(float(v @ (op.matrix @ v)) / float(v @ v))
    return quotients
