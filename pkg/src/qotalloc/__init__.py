"""Training-quality aware bandwidth and power allocation.

Library and CLI for scheduling uplink bandwidth and transmit power of K
data-collecting vehicles across N time slots so the weighted learning-curve
error of the models trained on the uploaded samples is minimized.
"""

from .baselines import (SchemeId, run_scheme, scheme1_equal, scheme2_throughput,
                        scheme3_qot_power_only, scheme4_static_channel,
                        total_throughput)
from .bandwidth import (AgpParams, AgpResult, AgpState, agp_solve, agp_step,
                        gradient_bandwidth, momentum_coefficient)
from .channel import (ChannelConfig, average_gains, generate_raw_gains,
                      reduce_association)
from .model import (Allocation, CavProfile, DomainError, FeasibilityReport,
                    LearningCurve, Modality, Scenario, achievable_rate,
                    check_feasibility, objective, objective_from_matrices,
                    perception_error, rate_matrix, sample_count,
                    samples_from_matrices)
from .power import (DualParams, DualResult, DualState, SubproblemResult,
                    dual_solve, power_profile, solve_subproblem,
                    solve_water_level)
from .simplex import (project_column, project_matrix, projection_threshold,
                      qp_projection_oracle)
from .solver import (SolveResult, SolverParams, initial_allocation,
                     reference_solve, solve)

__version__ = "0.1.0"

__all__ = [
    "AgpParams", "AgpResult", "AgpState", "Allocation", "CavProfile",
    "ChannelConfig", "DomainError", "DualParams", "DualResult", "DualState",
    "FeasibilityReport", "LearningCurve", "Modality", "Scenario", "SchemeId",
    "SolveResult", "SolverParams", "SubproblemResult", "achievable_rate",
    "agp_solve", "agp_step", "average_gains", "check_feasibility",
    "dual_solve", "generate_raw_gains", "gradient_bandwidth",
    "initial_allocation", "momentum_coefficient", "objective",
    "objective_from_matrices", "perception_error", "power_profile",
    "project_column", "project_matrix", "projection_threshold",
    "qp_projection_oracle", "rate_matrix", "reduce_association",
    "reference_solve", "run_scheme", "sample_count", "samples_from_matrices",
    "scheme1_equal", "scheme2_throughput", "scheme3_qot_power_only",
    "scheme4_static_channel", "solve", "solve_subproblem",
    "solve_water_level", "total_throughput",
]
