#!/usr/bin/env python3
"""
Startup script for oct2confocal.
Picks the configuration from OCT2CONF_ENV (development, production, testing).
"""

import os

from app import create_app
from config import config


def main():
    """Main startup function."""
    env = os.environ.get('OCT2CONF_ENV', 'default')
    if env not in config:
        env = 'default'
    create_app(env)(prog_name='oct2confocal')


if __name__ == '__main__':
    main()
