import json

import numpy as np
import pandas as pd
import pytest

from swirlring.output import (format_record, parse_record, run_directory, write_field,
                              write_grid, write_json, write_record, write_table)


def test_run_directory_is_slugged(tmp_path):
    path = run_directory(tmp_path, 'Whole Space beta 0.01')
    assert path.name == 'whole-space-beta-0-01'
    assert path.is_dir()


def test_field_keeps_full_precision(tmp_path, uniform_grid):
    values = np.sin(uniform_grid.R * 7.3) * np.exp(uniform_grid.Z) / 3.0
    path = write_field(tmp_path / 'zeta.txt', uniform_grid, values)
    assert np.array_equal(np.loadtxt(path)[:, 2].reshape(uniform_grid.shape), values)
    first = path.read_text().splitlines()[0].split()
    assert len(first) == 3
    assert float(first[0]) == 0.0 and float(first[1]) == -1.0


def test_grid_file(tmp_path, uniform_grid):
    path = write_grid(tmp_path / 'grid.txt', uniform_grid)
    lines = path.read_text().splitlines()
    assert lines[0] == '41 41 none none'
    assert len(lines) == 1 + 41 * 41
    i, j, r, z, mask, nu = lines[1 + 20 * 41 + 20].split()
    assert (int(i), int(j)) == (20, 20)
    assert float(r) == pytest.approx(1.0)
    assert int(mask) == 0
    assert float(nu) == uniform_grid.nu[20, 20]


def test_record_format():
    record = {'beta': 0.01, 'domain': 'whole_space', 'iterations': 12, 'converged': True,
              'beltrami': None, 'mu': 1.0 / 3.0}
    text = format_record(record)
    assert text.splitlines()[:5] == ['beta=0.01', 'domain=whole_space', 'iterations=12',
                                     'converged=true', 'beltrami=none']
    assert parse_record(text) == record


def test_record_keeps_order(tmp_path):
    path = write_record(tmp_path / 'diagnostics.txt', {'z': 1, 'a': 2.5, 'flag': np.bool_(False)})
    assert path.read_text() == 'z=1\na=2.5\nflag=false\n'


def test_table_precision(tmp_path):
    frame = pd.DataFrame({'beta': [0.01, 0.001], 'mu': [1.0 / 3.0, 2.0 / 3.0]})
    path = write_table(tmp_path / 'sweep.csv', frame)
    again = pd.read_csv(path, float_precision='round_trip')
    assert again['mu'].tolist() == frame['mu'].tolist()


def test_json_metadata(tmp_path):
    path = write_json(tmp_path / 'run.json', {'solution': {'mu': 1.5}})
    data = json.loads(path.read_text())
    assert data['version'] == '1.0'
    assert 'exported_at' in data
    assert data['solution'] == {'mu': 1.5}
