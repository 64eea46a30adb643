"""Online scheduling for flow time plus energy on heterogeneous processors.

Set ``HETSCHED_DISABLE_NUMBA=1`` before import to run the pure-numpy kernels.
"""

from ._jit import NUMBA_ENABLED
from .analysis import (CheckReport, CompetitiveParams, CoupledTrace, check_arrival_condition,
                       check_boundary_completion, check_running_condition, couple, integral_bound_check,
                       potential_unweighted, potential_weighted)
from .baseline import (AssignmentMap, exhaustive_offline_proxy, greedy_total_weight_assignment,
                       round_robin_assignment, simulate_fixed_assignment)
from .model import UNWEIGHTED, WEIGHTED, Instance, Job, MachineState, Metrics, ResidualProfile
from .power import (DomainError, NonTerminatingSegment, PowerFunction, eval_power, eval_speed,
                    integral_inv_q_shift, integral_x_over_q)
from .unweighted import (UnweightedSchedulerConfig, assign_unweighted, assignment_delta_unweighted,
                         future_cost_unweighted, shadow_potential_unweighted, simulate_unweighted)
from .weighted import (WeightedSchedulerConfig, advance_weighted, assign_weighted,
                       assignment_delta_weighted, future_cost_weighted, shadow_potential_weighted,
                       simulate_weighted)

__version__ = "0.1.0"
