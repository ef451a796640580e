"""Modal dynamics, moment-method control synthesis and observability of the
channel Stokes system under a normal-velocity boundary control.
"""
from .dynamics import (ModalState, Trajectory, ModalSystem,
                       sine_mode_invariant, time_grid)
from .synthesis import (MomentProblem, ControlSignal, ControlField,
                        target_moments, gram_matrix, solve_biorthogonal,
                        assemble_field, NullController)
from .observability import (ObservabilityReport, observation_gram,
                            smallest_observability_ratio, uniformity_scan,
                            truncation_sensitivity)

__all__ = ["ModalState",
           "Trajectory",
           "ModalSystem",
           "sine_mode_invariant",
           "time_grid",
           "MomentProblem",
           "ControlSignal",
           "ControlField",
           "target_moments",
           "gram_matrix",
           "solve_biorthogonal",
           "assemble_field",
           "NullController",
           "ObservabilityReport",
           "observation_gram",
           "smallest_observability_ratio",
           "uniformity_scan",
           "truncation_sensitivity"]
