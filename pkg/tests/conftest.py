import json
import math

import numpy as np
import pytest

from swirlring import create_app
from swirlring.geometry import Grid
from swirlring.models import db
from swirlring.validation import mirrored_axis

WHOLE_SPACE_W = 1.0 / (2 * math.pi)


@pytest.fixture
def uniform_grid():
    """r in [0, 2], z in [-1, 1], spacing 0.05."""
    return Grid.from_axes(np.linspace(0.0, 2.0, 41), mirrored_axis(20, 1.0))


@pytest.fixture
def offset_grid():
    """Uniform grid away from the axis, as used for the manufactured solutions."""
    return Grid.from_axes(np.linspace(0.1, 2.0, 39), mirrored_axis(20, 1.0))


@pytest.fixture
def app(tmp_path):
    app = create_app({
        'TESTING': True,
        'SQLALCHEMY_DATABASE_URI': 'sqlite://',
        'SWIRLRING_OUTPUT': str(tmp_path / 'runs'),
        'SWIRLRING_WORKERS': 1,
    })
    yield app
    with app.app_context():
        db.session.remove()
        db.drop_all()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict to a JSON file and return its path."""
    def _write(data, name='run.json'):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding='utf-8')
        return str(path)
    return _write


@pytest.fixture
def small_config():
    return {
        'domain': {'kind': 'whole_space', 'n_r': 33, 'n_z': 33},
        'params': {'beta': 0.05, 'W': WHOLE_SPACE_W},
        'output': {'label': 'small'},
    }
