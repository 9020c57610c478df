"""Time-variant reliability estimation for stochastic delay systems."""

from ._relisim import *  # noqa: F401,F403
from ._relisim import __version__  # noqa: F401
