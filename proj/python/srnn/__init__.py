"""Structural RNN traffic speed forecasting."""

from ._srnn import *  # noqa: F401,F403
from ._srnn import __doc__  # noqa: F401
