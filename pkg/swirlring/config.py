"""
Run configuration: a JSON document with three blocks.

    {
      "domain": {"kind": "whole_space", "n_r": 65, "n_z": 65},
      "params": {"beta": 0.01, "W": 0.159},
      "output": {"directory": "runs"}
    }

Unknown keys are rejected; errors name the offending key path.
"""
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from swirlring.errors import ConfigError, GeometryError
from swirlring.geometry import DEFAULT_MARGIN, DomainKind, make_domain
from swirlring.variational import SolverParams, regime_warnings

logger = logging.getLogger(__name__)

DEFAULT_N_R = 65
DEFAULT_N_Z = 65
DEFAULT_OUTPUT = 'runs'
FIELD_NAMES = ('zeta', 'psi', 'xi', 'psi_K', 'v_r', 'v_theta', 'v_z')
DEFAULT_FIELDS = ('zeta', 'psi', 'xi')

DOMAIN_KEYS = {'kind', 'd', 'margin_r', 'margin_z', 'n_r', 'n_z', 'refine',
               'band_spacing', 'band_r_factors', 'band_core_heights'}
PARAM_KEYS = {'alpha', 'beta', 'betas', 'W', 'Lambda', 'tol_fix', 'tol_circ', 'tol_lin',
              'max_iter', 'damping', 'translate_every', 'preconditioner', 'seed', 'n_tests', 'a'}
OUTPUT_KEYS = {'directory', 'label', 'fields', 'grid', 'precision'}
TOP_KEYS = {'domain', 'params', 'output'}


@dataclass(frozen=True)
class DomainConfig:
    kind: DomainKind
    d: float | None = None
    margin_r: float = DEFAULT_MARGIN
    margin_z: float = DEFAULT_MARGIN
    n_r: int = DEFAULT_N_R
    n_z: int = DEFAULT_N_Z
    refine: bool = True
    band_spacing: float = 0.25
    band_r_factors: tuple = (0.8, 1.6)
    band_core_heights: float = 8.0

    def to_dict(self):
        return {
            'kind': self.kind.value, 'd': self.d, 'margin_r': self.margin_r, 'margin_z': self.margin_z,
            'n_r': self.n_r, 'n_z': self.n_z, 'refine': self.refine, 'band_spacing': self.band_spacing,
            'band_r_factors': list(self.band_r_factors), 'band_core_heights': self.band_core_heights,
        }


@dataclass(frozen=True)
class OutputConfig:
    directory: str = DEFAULT_OUTPUT
    label: str | None = None
    fields: tuple = DEFAULT_FIELDS
    grid: bool = True
    precision: int = 17

    def to_dict(self):
        return {'directory': self.directory, 'label': self.label, 'fields': list(self.fields),
                'grid': self.grid, 'precision': self.precision}


@dataclass(frozen=True)
class RunConfig:
    domain: DomainConfig
    params: SolverParams
    output: OutputConfig = field(default_factory=OutputConfig)
    betas: tuple | None = None
    Lambda: float | None = None  # explicit cap coefficient, None for the Lambda_0 rule
    seed: int = 0
    n_tests: int = 20
    a: float | None = None
    warnings: tuple = ()

    def params_for(self, beta):
        """SolverParams at another beta; the Lambda_0 rule is re-evaluated unless Lambda was given."""
        return replace(self.params, beta=beta, Lambda=self.Lambda)

    def make_domain(self):
        return make_domain(self.domain.kind, d=self.domain.d, W=self.params.W,
                           margin_r=self.domain.margin_r, margin_z=self.domain.margin_z)

    def band_options(self):
        return {
            'refine': self.domain.refine,
            'a': self.a,
            'band_spacing': self.domain.band_spacing,
            'band_r_factors': tuple(self.domain.band_r_factors),
            'band_core_heights': self.domain.band_core_heights,
        }

    def label_for(self, beta=None):
        beta = self.params.beta if beta is None else beta
        base = self.output.label or self.domain.kind.value
        return f"{base} beta {beta:g}"

    def to_dict(self):
        params = self.params.to_dict()
        params.pop('d')  # carried by the domain block
        params.update({'betas': list(self.betas) if self.betas else None, 'seed': self.seed,
                       'n_tests': self.n_tests, 'a': self.a})
        return {'domain': self.domain.to_dict(), 'params': params, 'output': self.output.to_dict()}


def _check_keys(block, allowed, prefix):
    if not isinstance(block, dict):
        raise ConfigError(prefix, "must be an object")
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}" if prefix else key, "unknown key")


def _number(block, key, prefix, default=None, kind=float, positive=False):
    value = block.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{prefix}.{key}", f"expected a number (got {value!r})")
    if kind is int and float(value) != int(value):
        raise ConfigError(f"{prefix}.{key}", f"expected an integer (got {value!r})")
    value = kind(value)
    if not math.isfinite(value):
        raise ConfigError(f"{prefix}.{key}", "must be finite")
    if positive and not value > 0:
        raise ConfigError(f"{prefix}.{key}", f"must be positive (got {value})")
    return value


def _parse_domain(block):
    _check_keys(block, DOMAIN_KEYS, 'domain')
    if 'kind' not in block:
        raise ConfigError('domain.kind', "required")
    try:
        kind = DomainKind.parse(block['kind'])
    except GeometryError as e:
        raise ConfigError('domain.kind', e.message) from None
    d = _number(block, 'd', 'domain', positive=True)
    if kind != DomainKind.WHOLE_SPACE and d is None:
        raise ConfigError('domain.d', f"required for {kind.value}")
    factors = block.get('band_r_factors', (0.8, 1.6))
    if (not isinstance(factors, (list, tuple)) or len(factors) != 2
            or not all(isinstance(f, (int, float)) and f > 0 for f in factors) or factors[0] >= factors[1]):
        raise ConfigError('domain.band_r_factors', "expected two increasing positive numbers")
    refine = block.get('refine', True)
    if not isinstance(refine, bool):
        raise ConfigError('domain.refine', "expected true or false")
    n_z = _number(block, 'n_z', 'domain', DEFAULT_N_Z, kind=int, positive=True)
    if n_z % 2 == 0:
        raise ConfigError('domain.n_z', f"must be odd so that z = 0 is a grid line (got {n_z})")
    return DomainConfig(
        kind=kind,
        d=d,
        margin_r=_number(block, 'margin_r', 'domain', DEFAULT_MARGIN, positive=True),
        margin_z=_number(block, 'margin_z', 'domain', DEFAULT_MARGIN, positive=True),
        n_r=_number(block, 'n_r', 'domain', DEFAULT_N_R, kind=int, positive=True),
        n_z=n_z,
        refine=refine,
        band_spacing=_number(block, 'band_spacing', 'domain', 0.25, positive=True),
        band_r_factors=tuple(float(f) for f in factors),
        band_core_heights=_number(block, 'band_core_heights', 'domain', 8.0, positive=True),
    )


def _parse_output(block):
    _check_keys(block, OUTPUT_KEYS, 'output')
    fields = block.get('fields', list(DEFAULT_FIELDS))
    if not isinstance(fields, list) or any(f not in FIELD_NAMES for f in fields):
        raise ConfigError('output.fields', f"expected a list drawn from {', '.join(FIELD_NAMES)}")
    directory = block.get('directory', DEFAULT_OUTPUT)
    label = block.get('label')
    if not isinstance(directory, str) or not directory:
        raise ConfigError('output.directory', "expected a nonempty string")
    if label is not None and not isinstance(label, str):
        raise ConfigError('output.label', "expected a string")
    grid = block.get('grid', True)
    if not isinstance(grid, bool):
        raise ConfigError('output.grid', "expected true or false")
    precision = _number(block, 'precision', 'output', 17, kind=int, positive=True)
    if precision > 17:
        raise ConfigError('output.precision', "at most 17 significant digits")
    return OutputConfig(directory=directory, label=label, fields=tuple(fields), grid=grid, precision=precision)


def parse_config(text):
    """
    Parse and validate a run configuration.

    Args:
        text: JSON document

    Returns:
        RunConfig with defaults filled; regime warnings are logged and kept
        in RunConfig.warnings
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError('config', f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    _check_keys(data, TOP_KEYS, '')
    for key in ('domain', 'params'):
        if key not in data:
            raise ConfigError(key, "required block missing")

    domain = _parse_domain(data['domain'])
    block = data['params']
    _check_keys(block, PARAM_KEYS, 'params')

    betas = block.get('betas')
    if betas is not None:
        if not isinstance(betas, list) or not betas:
            raise ConfigError('params.betas', "expected a nonempty list of numbers")
        betas = tuple(_number({'betas': b}, 'betas', 'params') for b in betas)
        for b in betas:
            if not 0.0 < b < 1.0:
                raise ConfigError('params.betas', f"β must lie in (0,1) (got {b})")
    beta = _number(block, 'beta', 'params')
    if beta is None:
        if betas is None:
            raise ConfigError('params.beta', "required (or give params.betas)")
        beta = max(betas)
    if 'W' not in block:
        raise ConfigError('params.W', "required")

    Lambda = _number(block, 'Lambda', 'params')
    params = SolverParams(
        beta=beta,
        W=_number(block, 'W', 'params'),
        alpha=_number(block, 'alpha', 'params', 0.0),
        Lambda=Lambda,
        d=domain.d,
        tol_fix=_number(block, 'tol_fix', 'params', SolverParams.tol_fix),
        tol_circ=_number(block, 'tol_circ', 'params', SolverParams.tol_circ),
        tol_lin=_number(block, 'tol_lin', 'params', SolverParams.tol_lin),
        max_iter=_number(block, 'max_iter', 'params', SolverParams.max_iter, kind=int),
        damping=_number(block, 'damping', 'params', SolverParams.damping),
        translate_every=_number(block, 'translate_every', 'params', SolverParams.translate_every, kind=int),
        preconditioner=block.get('preconditioner', SolverParams.preconditioner),
    )
    if betas is not None:
        for b in betas:
            replace(params, beta=b, Lambda=Lambda)

    warnings = tuple(regime_warnings(params, domain.kind, domain.d))
    output = _parse_output(data.get('output', {}))
    return RunConfig(
        domain=domain,
        params=params,
        output=output,
        betas=betas,
        Lambda=Lambda,
        seed=_number(block, 'seed', 'params', 0, kind=int),
        n_tests=_number(block, 'n_tests', 'params', 20, kind=int, positive=True),
        a=_number(block, 'a', 'params', positive=True),
        warnings=warnings,
    )


def load_config(path):
    """Read and parse a configuration file; unreadable files are a ConfigError."""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError('config', f"cannot read {path}: {e.strerror}") from None
    logger.info(f"Loaded configuration {path}")
    return parse_config(text)
