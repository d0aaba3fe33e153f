"""Loss-tolerant multicast scheduling toolkit.

Token-queue based max-weight PRB allocation for multicast video streams,
with a polynomial-time bipartite-matching realization, baseline policies,
a stability-region oracle, and a reproducible discrete-time simulator.
"""

from .channel import (ChannelRealization, ChannelSampler, CqiTable, LinkBudget,
                      path_loss_db, sample_channel, sinr_to_cqi)
from .engine import RunMetrics, compute_burstiness, ema_update, run
from .errors import SizeError, ValidationError
from .matching import Matching, matching_to_allocation, max_weight_matching
from .policies import (RandomizedTable, brute_force_decide, decide,
                       decide_with_value, serve_from_allocation,
                       service_rate_indicator, weight_matrix)
from .queues import QueueState, apply_service, draw_arrivals, update_priority
from .scenario import (PolicyParams, RunConfig, Scenario, SimConfig,
                       arrival_rates, load_config, load_scenario, parse_config,
                       scale_arrivals, serialize_config)
from .stability import (LpSolution, SmallChannelModel, StabilityReport,
                        check_witness, count_allocations, empirical_stability,
                        enumerate_allocations, iter_allocations,
                        lp_delta_feasible, load_small_model, save_small_model,
                        service_vector_of)

__version__ = "0.1.0"
