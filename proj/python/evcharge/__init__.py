"""EV home-charging demand model: clustering, charging probabilities, Monte Carlo load."""

from ._core import *  # noqa: F401,F403
from ._core import ConfigError, DataError, DayType  # noqa: F401

__version__ = "0.1.0"
