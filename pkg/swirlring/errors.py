"""
Exception hierarchy for swirlring.
Every error carries a short machine-readable code and the process exit
status the command line maps it to.
"""


class SwirlringError(Exception):
    """Base class for all library errors."""
    code = 'error'
    exit_status = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        return {
            'code': self.code,
            'message': self.message,
            'details': {k: v for k, v in self.details.items()},
        }


class ConfigError(SwirlringError, ValueError):
    """Syntax error, unknown key or parameter out of range."""
    code = 'config'
    exit_status = 2

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}" if key else message, key=key)
        self.key = key


class GeometryError(SwirlringError, ValueError):
    """Invalid domain, grid too coarse, or nothing to assemble."""
    code = 'geometry'
    exit_status = 2


class LinearSolverError(SwirlringError, RuntimeError):
    code = 'linear_solver'
    exit_status = 3

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message, residual=residual, iterations=iterations)
        self.residual = residual


class ConvergenceError(SwirlringError, RuntimeError):
    """Fixed-point iteration stopped without meeting its tolerance."""
    code = 'not_converged'
    exit_status = 3


class SweepError(SwirlringError, RuntimeError):
    code = 'sweep'
    exit_status = 3


class FitError(SwirlringError, ValueError):
    code = 'fit'
    exit_status = 3


class ValidationFailure(SwirlringError, AssertionError):
    code = 'validation'
    exit_status = 4

    def __init__(self, failed):
        names = ', '.join(failed)
        super().__init__(f"{len(failed)} check(s) failed: {names}", failed=list(failed))
        self.failed = list(failed)


class KernelError(SwirlringError, ArithmeticError):
    """Quadrature of the ring kernel failed to reach its tolerance."""
    code = 'kernel'
    exit_status = 3
