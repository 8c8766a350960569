"""
swirlring: steady vortex rings with swirl by constrained energy maximization.
"""
import os
import logging

from flask import Flask

__version__ = '0.1.0'

# Configure logging
logging.basicConfig(level=os.environ.get('SWIRLRING_LOG_LEVEL', 'INFO').upper(),
                    format='%(asctime)s %(levelname)s %(name)s: %(message)s')
logger = logging.getLogger(__name__)


def create_app(overrides=None):
    """
    Application holding process settings and the run ledger.

    Args:
        overrides: optional dict applied over the environment settings

    Returns:
        Flask app with the ledger tables created
    """
    app = Flask(__name__, instance_relative_config=True)

    # Configuration
    overrides = overrides or {}
    database_url = overrides.get('SQLALCHEMY_DATABASE_URI') or os.environ.get('DATABASE_URL')
    if not database_url:
        os.makedirs(app.instance_path, exist_ok=True)
        database_url = f"sqlite:///{os.path.join(app.instance_path, 'swirlring.db')}"
    app.config['SQLALCHEMY_DATABASE_URI'] = database_url
    app.config['SQLALCHEMY_TRACK_MODIFICATIONS'] = False
    app.config['SWIRLRING_OUTPUT'] = os.environ.get('SWIRLRING_OUTPUT')
    app.config['SWIRLRING_WORKERS'] = int(os.environ.get('SWIRLRING_WORKERS', min(4, os.cpu_count() or 1)))
    app.config['SWIRLRING_LOG_LEVEL'] = os.environ.get('SWIRLRING_LOG_LEVEL', 'INFO').upper()
    app.config.update(overrides)

    logging.getLogger('swirlring').setLevel(app.config['SWIRLRING_LOG_LEVEL'])

    from swirlring.models import db
    db.init_app(app)

    with app.app_context():
        db.create_all()

    from swirlring.cli import register_commands
    register_commands(app)

    return app
