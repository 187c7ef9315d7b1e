"""Real-time line planning: column generation and randomized rounding."""

from .errors import (EnumerationLimitError, InstanceFormatError, NotCoveredError, ResampleLimitError, RLPPError,
                     SubRouteError, UnreachableNodeError)
from .exact import Limits, brute_force_opt, config_lp_full, enumerate_feasible_sets, welfare_oracle_w
from .generators import (SyntheticParams, gen_gadget_integrality_gap, gen_gadget_nonsubmodular,
                         gen_gadget_trip_optimality, gen_grid_network, gen_network_instance, gen_random_small,
                         gen_skeleton_lines, gen_synthetic)
from .io import export_plan_geo, instance_digest, load_instance, load_plan, save_instance, save_plan
from .master import FractionalSolution, restricted_master_solve, solve_config_lp
from .model import Instance, Line, LinePlan, Network, OpenLine, Passenger, ValueEntry, validate_instance, welfare_of
from .pricing import DualPrices, price_line, separation_value, solve_capacitated_interval_selection
from .rounding import RoundingStats, aggregate, best_of_m, budget_tail_check, chernoff_bound, round_once
from .values import DetourValue, PiecewiseValue, compute_passenger_line_value

__version__ = "0.1.0"
