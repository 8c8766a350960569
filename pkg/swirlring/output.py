"""
On-disk formats.

Fields are written as `r z value` lines, grids as a header plus
`i j r z mask nu_weight` records, diagnostics as `key=value` lines in a
fixed order, tables as CSV. Floats carry 17 significant digits.
"""
import json
import logging
from datetime import datetime
from pathlib import Path

import numpy as np
from slugify import slugify

logger = logging.getLogger(__name__)

FORMAT_VERSION = '1.0'
FLOAT_FORMAT = '%.17g'


def run_directory(root, label):
    """Create and return <root>/<slug(label)>."""
    path = Path(root) / slugify(label)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _float_format(precision):
    return f'%.{int(precision)}g'


def write_field(path, grid, values, precision=17):
    """Write a nodal field as `r z value` lines."""
    fmt = _float_format(precision)
    data = np.column_stack([grid.R.ravel(), grid.Z.ravel(), np.asarray(values, dtype=float).ravel()])
    np.savetxt(path, data, fmt=fmt, delimiter=' ')
    return Path(path)


def write_grid(path, grid):
    """Header `r_count z_count kind d`, then one `i j r z mask nu_weight` line per node."""
    n_r, n_z = grid.shape
    kind = grid.kind.value if grid.kind else 'none'
    d = FLOAT_FORMAT % grid.d if grid.d is not None else 'none'
    ii, jj = np.meshgrid(np.arange(n_r), np.arange(n_z), indexing='ij')
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f"{n_r} {n_z} {kind} {d}\n")
        for i, j, r, z, m, w in zip(ii.ravel(), jj.ravel(), grid.R.ravel(), grid.Z.ravel(),
                                    grid.mask.ravel(), grid.nu.ravel()):
            f.write(f"{i} {j} {FLOAT_FORMAT % r} {FLOAT_FORMAT % z} {int(m)} {FLOAT_FORMAT % w}\n")
    return Path(path)


def format_value(value):
    if value is None:
        return 'none'
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def format_record(record):
    return ''.join(f"{key}={format_value(value)}\n" for key, value in record.items())


def write_record(path, record):
    """Write a diagnostics record as key=value lines, keys in insertion order."""
    Path(path).write_text(format_record(record), encoding='utf-8')
    return Path(path)


def parse_record(text):
    """Inverse of format_record; values stay strings except none/true/false and numbers."""
    record = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, raw = line.partition('=')
        if raw == 'none':
            value = None
        elif raw in ('true', 'false'):
            value = raw == 'true'
        else:
            try:
                value = int(raw)
            except ValueError:
                try:
                    value = float(raw)
                except ValueError:
                    value = raw
        record[key] = value
    return record


def write_table(path, frame, precision=17):
    frame.to_csv(path, index=False, float_format=_float_format(precision))
    return Path(path)


def write_json(path, payload):
    data = {'exported_at': datetime.utcnow().isoformat(), 'version': FORMAT_VERSION}
    data.update(payload)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, ensure_ascii=False, default=str)
    return Path(path)


def field_arrays(solution, swirl=None):
    """Named nodal fields of a solution (velocities only when a SwirlField is given)."""
    fields = {'zeta': solution.zeta, 'psi': solution.psi, 'xi': solution.xi, 'psi_K': solution.psi_K}
    if swirl is not None:
        fields.update({'v_r': swirl.v_r, 'v_theta': swirl.v_theta, 'v_z': swirl.v_z})
    return fields


def write_solution(directory, solution, record, config=None, fields=('zeta', 'psi', 'xi'),
                   write_grid_file=True, precision=17):
    """
    Write everything a solve produces into one directory.

    Returns:
        list of written paths
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    swirl = None
    if any(name.startswith('v_') for name in fields):
        from swirlring.diagnostics import velocity_swirl
        swirl = velocity_swirl(solution.psi, solution.grid, solution.params.beta)
    arrays = field_arrays(solution, swirl)
    written = []
    for name in fields:
        written.append(write_field(directory / f'{name}.txt', solution.grid, arrays[name], precision))
    if write_grid_file:
        written.append(write_grid(directory / 'grid.txt', solution.grid))
    written.append(write_record(directory / 'diagnostics.txt', record))
    summary = {'solution': solution.to_dict(), 'params': solution.params.to_dict(),
               'domain': solution.domain.to_dict(), 'grid': solution.grid.to_dict()}
    if config is not None:
        summary['config'] = config.to_dict()
    written.append(write_json(directory / 'run.json', summary))
    logger.info(f"Wrote {len(written)} files to {directory}")
    return written
