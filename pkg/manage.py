#!/usr/bin/env python3
"""
Console entry point: python manage.py solve -c configs/whole_space.json
"""
from flask.cli import FlaskGroup

from swirlring import create_app

cli = FlaskGroup(create_app=lambda: create_app(), add_default_commands=False,
                 help='Steady vortex rings with swirl.')

if __name__ == '__main__':
    cli()
