"""Stochastic simulator and analysis toolkit for two-photon energy-time
interference experiments with windowed coincidence detection."""

from . import analysis, config, events, quantum, simulator  # noqa: F401
from .analysis import TOOL_VERSION as __version__  # noqa: F401
