"""On-demand ride-pooling fleet simulation with persistent vehicle-to-request-bundle matching."""
from .assignment import AssignmentProblem, AssignmentSolution, Candidate, solve
from .demand import (Request, RequestState, generate_requests, load_demand, make_request,
                     synthetic_slices)
from .insertion import InsertionPolicy, assign_insertion
from .network import Network, grid_network, line_network, load_network
from .metrics import ScenarioConfig, compare_report, compute_rsd, run_scenario
from .params import Params
from .simulation import Simulation
from .tours import Anchor, Tour, schedule
from .v2rb import V2RBDatabase, build_database, rebuild_from_scratch, update_database
from .v2rb_policy import V2RBPolicy
from .vehicle_filter import FilterParams

__version__ = "0.1.0"
