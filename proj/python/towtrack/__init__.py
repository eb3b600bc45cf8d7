"""Force-compensating trajectory tracking for tractor-trailer combinations."""

from ._towtrack import *  # noqa: F401,F403
from ._towtrack import LOG_COLUMNS, __doc__  # noqa: F401

__version__ = "0.1.0"
