"""Asynchronous short-arc midpoint dynamics on circle-valued configurations.

Simulator and analysis toolkit for gossip-style midpoint averaging of
angles on path and ring graphs: exact wrapped arithmetic, winding-number
bookkeeping and branch-crossing statistics, the universal-cover lift with
its compensator/detrended co-moving frame, the deterministic cyclic-sweep
unwinding mechanism, and a reproducible experiment harness with a CLI.
"""

__version__ = "0.1.0"

from .backend import backend_name
from .circle import (
    Configuration,
    ConsistencyError,
    IncrementField,
    Topology,
    WindingValue,
    increment_field,
    index_mod,
    total_increment,
    twisted_configuration,
    winding_number,
    wrap_pi,
    wrap_pi_array,
)
from .dynamics import (
    EventLog,
    SimState,
    StoppingStatus,
    UpdateEvent,
    crossing_integer,
    midpoint_update,
    run,
    s_corridor,
    step,
    stopping_status,
)
from .liftframe import (
    Compensator,
    DetrendedProfile,
    LiftedProfile,
    SectorError,
    SectorFrame,
    comoving_distance,
    compensator_step,
    decompose_increment,
    detrend,
    initial_lift,
    lift_step,
    variance_functional,
    zeta_diameter,
)
from .observables import (
    ObservableSample,
    corridor_margin,
    crossing_statistics,
    l1_lyapunov,
    order_parameter,
)
from .sweep import (
    LinearIncrementState,
    closing_edge_prediction,
    cyclic_sweep,
    escape_scenario,
    iterate_sweeps,
    linear_increment_update,
)

__all__ = [name for name in dir() if not name.startswith("_")]
