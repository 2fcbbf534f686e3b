"""Residential battery fleet dispatch: standalone vs pooled MPC under backup reserve floors."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

BACKUP_MENU = (2, 4, 6, 8, 12, 24)
