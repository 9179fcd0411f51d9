"""
SIGIL Simulator - Errors
"""

from canon_crypto.errors import SigilError


class SimulationError(SigilError):
    code = "simulation-error"


class InvalidConfig(SimulationError):
    code = "invalid-config"


class InvalidGame(SimulationError):
    """Payoff parameters violate S > Bribe > 0 or S > R_base >= R."""

    code = "invalid-game"
