"""
SIGIL Simulator Package
"""

from .collusion import CollusionResult, run_collusion, run_collusion_batch
from .config import (
    CollusionConfig,
    CohortSpec,
    GammaSweepConfig,
    R0SweepConfig,
    SimConfig,
    default_economy_config,
    economy_params,
    simulation_params,
)
from .economy import EconomyResult, run_economy, run_economy_batch
from .game import (
    AuditStrategy,
    DevStrategy,
    GameMatrix,
    deviation_losses,
    nash_equilibria,
    pure_equilibria,
)
from .policies import AuditorPolicy, PolicyKind
from .sweeps import SweepResult, monte_carlo_fn, sweep_gamma, sweep_r0

__all__ = [
    'CollusionResult',
    'run_collusion',
    'run_collusion_batch',
    'CollusionConfig',
    'CohortSpec',
    'GammaSweepConfig',
    'R0SweepConfig',
    'SimConfig',
    'default_economy_config',
    'economy_params',
    'simulation_params',
    'EconomyResult',
    'run_economy',
    'run_economy_batch',
    'AuditStrategy',
    'DevStrategy',
    'GameMatrix',
    'deviation_losses',
    'nash_equilibria',
    'pure_equilibria',
    'AuditorPolicy',
    'PolicyKind',
    'SweepResult',
    'monte_carlo_fn',
    'sweep_gamma',
    'sweep_r0',
]
