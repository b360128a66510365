"""Totally asymmetric exclusion with particle-attached random jump rates.

Simulation of the labeled-particle, gap (zero-range / tandem-queue), and
height-function views of the process; exact shared-clock couplings; the
corner-growth variational identities; geometric product equilibria; and a
Monte Carlo suite for the slow-particle scaling laws.
"""

__version__ = "0.1.0"

from .disorder import (DerivedConstants, DisorderField, RateLaw, critical_gap,
                       gap_to_velocity, sample_rates, scan_event_probability,
                       slow_scan, velocity_to_gap)
from .engine import (ClockSchedule, SimulationRun, choose_window, coupled_run,
                     front_count, run, tagged_position)
from .errors import ConfigError, HypothesisError, WindowAuditError
from .measures import (EquilibriumSpec, IIDGapSpec, equilibrium_mean_gap,
                       jam_initial, sample_equilibrium_gaps, sample_iid_gaps)
from .state import (GapConfig, HeightConfig, ParticleConfig, gaps_to_particles,
                    heights_to_particles, particles_to_gaps, particles_to_heights)
from .variational import (corner_first_passage, evaluate_svar1, evaluate_svar2,
                          evaluate_svar4, split_infimum)

__all__ = [
    "RateLaw", "DerivedConstants", "DisorderField", "sample_rates",
    "critical_gap", "velocity_to_gap", "gap_to_velocity", "slow_scan",
    "scan_event_probability",
    "ParticleConfig", "GapConfig", "HeightConfig", "particles_to_gaps",
    "gaps_to_particles", "particles_to_heights", "heights_to_particles",
    "EquilibriumSpec", "IIDGapSpec", "sample_equilibrium_gaps",
    "sample_iid_gaps", "jam_initial", "equilibrium_mean_gap",
    "ClockSchedule", "SimulationRun", "run", "coupled_run", "tagged_position",
    "front_count", "choose_window",
    "evaluate_svar1", "evaluate_svar2", "evaluate_svar4", "split_infimum",
    "corner_first_passage",
    "ConfigError", "HypothesisError", "WindowAuditError",
]
