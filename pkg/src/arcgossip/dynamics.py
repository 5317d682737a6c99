"""The asynchronous midpoint Markov kernel and its bookkeeping.

One step: pick an edge (uniformly at random, or from the deterministic
cyclic scheduler), move both endpoint angles to the midpoint of the
shortest arc between them, and record the branch-crossing data of the
update.  For the updated edge k the two neighbor sums

    S_-(k) = delta(k-1) + delta(k)/2,    S_+(k) = delta(k+1) + delta(k)/2

determine how the neighboring increments re-wrap: wrap(S_+-) = S_+- - 2*pi*m_+-
with m_+- in {-1, 0, 1}, and on the ring the integer winding changes by
-(m_- + m_+).  A crossing is possible only when some S leaves (-pi, pi);
max|delta| < 2*pi/3 is a sufficient corridor condition excluding it.

An edge with delta = -pi is antipodal: the two shortest-arc midpoints are
opposite, and a dedicated fair bit picks one.  With choice = +1 the update
keeps the canonical value wrap(theta(k) + delta(k)/2); choice = -1 selects
its antipode.  The bit lives on its own counter channel, so drawing it
never shifts the edge stream and replay stays exact.

Heavy loops run in :mod:`arcgossip.kernels`; this module owns state,
event logs, and the chunked driver that invokes observers between kernel
calls.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .circle import (
    PI,
    TWO_PI,
    Configuration,
    increment_field,
    winding_number,
    wrap_pi,
)

CORRIDOR_BOUND = kernels.CORRIDOR_BOUND

EVENT_CSV_HEADER = (
    "step,edge,delta_before,antipodal,s_minus,s_plus,m_minus,m_plus,winding_after"
)


@dataclass(frozen=True)
class UpdateEvent:
    step: int
    edge: int  # 0-based
    delta_before: float
    antipodal: bool
    antipodal_choice: "int | None"
    s_minus: float  # NaN when the side does not exist (open-path boundary)
    s_plus: float
    m_minus: int
    m_plus: int
    winding_after: "int | None"  # ring only


@dataclass(frozen=True)
class StoppingStatus:
    branch_possible: bool
    antipodal_present: bool


@dataclass(frozen=True)
class SimState:
    """A trajectory point plus its counter-based random stream identity.

    The stream has no mutable state: the draw at step t is a function of
    (seed, replica, t), so a SimState is resumable and replayable from its
    fields alone.
    """

    config: Configuration
    step: int = 0
    seed: int = 0
    replica: int = 0

    @property
    def stream_key(self):
        return rng.stream_key(self.seed, self.replica)


@dataclass(frozen=True)
class RunCounters:
    lyapunov_violations: int
    winding_violations: int
    corridor_violations: int
    branch_events: int
    winding_changes: int
    last_crossing_step: int  # -1 if none
    antipodal_events: int
    checked_steps: int
    s_domain_violations: int
    integrality_violations: int
    log_dropped: int

    @classmethod
    def from_array(cls, c):
        return cls(
            lyapunov_violations=int(c[kernels.C_LYAP]),
            winding_violations=int(c[kernels.C_WIND]),
            corridor_violations=int(c[kernels.C_CORR]),
            branch_events=int(c[kernels.C_BRANCH]),
            winding_changes=int(c[kernels.C_CROSS]),
            last_crossing_step=int(c[kernels.C_LAST_CROSS]),
            antipodal_events=int(c[kernels.C_ANT]),
            checked_steps=int(c[kernels.C_CHECKED]),
            s_domain_violations=int(c[kernels.C_SDOM]),
            integrality_violations=int(c[kernels.C_INTEG]),
            log_dropped=int(c[kernels.C_LOGDROP]),
        )


class EventLog:
    """Column-oriented record of update events.

    mode "full" keeps one row per step; mode "crossings" keeps only singular
    events (a nonzero crossing integer or an antipodal update).  CSV output
    uses 1-based edge indices; absent neighbor sums (open-path boundary)
    are written as empty fields, as is the winding column on the path.
    """

    def __init__(self, topology, mode, capacity, initial_winding=None):
        self.topology = topology
        self.mode = mode
        self.initial_winding = initial_winding
        self.step = np.zeros(capacity, dtype=np.int64)
        self.edge = np.zeros(capacity, dtype=np.int64)
        self.delta_before = np.zeros(capacity, dtype=np.float64)
        self.antipodal = np.zeros(capacity, dtype=np.int64)
        self.choice = np.zeros(capacity, dtype=np.int64)
        self.s_minus = np.zeros(capacity, dtype=np.float64)
        self.s_plus = np.zeros(capacity, dtype=np.float64)
        self.m_minus = np.zeros(capacity, dtype=np.int64)
        self.m_plus = np.zeros(capacity, dtype=np.int64)
        self.winding_after = np.zeros(capacity, dtype=np.int64)
        self._len = 0

    def _trim(self, length):
        self._len = length
        for name in ("step", "edge", "delta_before", "antipodal", "choice",
                     "s_minus", "s_plus", "m_minus", "m_plus", "winding_after"):
            setattr(self, name, getattr(self, name)[:length])

    def __len__(self):
        return self._len

    def __getitem__(self, i):
        if not -self._len <= i < self._len:
            raise IndexError(i)
        return UpdateEvent(
            step=int(self.step[i]),
            edge=int(self.edge[i]),
            delta_before=float(self.delta_before[i]),
            antipodal=bool(self.antipodal[i]),
            antipodal_choice=int(self.choice[i]) if self.antipodal[i] else None,
            s_minus=float(self.s_minus[i]),
            s_plus=float(self.s_plus[i]),
            m_minus=int(self.m_minus[i]),
            m_plus=int(self.m_plus[i]),
            winding_after=int(self.winding_after[i]) if self.topology.is_ring else None,
        )

    def __iter__(self):
        return (self[i] for i in range(self._len))

    def to_csv(self, path):
        is_ring = self.topology.is_ring
        with open(path, "w", newline="\n") as fh:
            fh.write(EVENT_CSV_HEADER + "\n")
            for i in range(self._len):
                sm = self.s_minus[i]
                sp = self.s_plus[i]
                row = [
                    str(int(self.step[i])),
                    str(int(self.edge[i]) + 1),
                    repr(float(self.delta_before[i])),
                    str(int(self.antipodal[i])),
                    "" if np.isnan(sm) else repr(float(sm)),
                    "" if np.isnan(sp) else repr(float(sp)),
                    str(int(self.m_minus[i])),
                    str(int(self.m_plus[i])),
                    str(int(self.winding_after[i])) if is_ring else "",
                ]
                fh.write(",".join(row) + "\n")


@dataclass
class RunReport:
    counters: RunCounters
    log: "EventLog | None"
    initial_winding: "int | None"
    final_winding: "int | None"


_LOG_MODES = {"none": 0, "crossings": 1, "full": 2}
_SCHEDULERS = {"uniform": 0, "cyclic": 1}


def _sample_stops(start, horizon, sample_steps):
    end = start + horizon
    stops = {start, end}
    if sample_steps is None:
        pass
    elif sample_steps == "pow2":
        p = 1
        while p < horizon:
            stops.add(start + p)
            p *= 2
    elif isinstance(sample_steps, int):
        if sample_steps <= 0:
            raise ValueError("sample stride must be positive")
        stops.update(range(start, end, sample_steps))
    else:
        stops.update(int(s) for s in sample_steps)
        if any(s < start or s > end for s in stops):
            raise ValueError("explicit sample steps outside the run window")
    return sorted(stops)


def run(state, horizon, observers=(), *, scheduler="uniform", eps_antipodal=0.0,
        check_stride=1024, corridor_check=False, lyapunov_tol=1e-12,
        integrality_tol=None, log="none", log_capacity=1 << 20,
        sample_steps="pow2"):
    """Apply `horizon` kernel steps; return (final_state, RunReport).

    Observers are called with a SimState snapshot at every sample stop
    (including the initial and final steps).  check_stride controls the
    O(n) winding/corridor verification: 1 checks every step, larger values
    sample, 0 disables.  The per-step Lyapunov monotonicity check is O(1)
    and always on.  Deterministic given (seed, replica, config).
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    topo = state.config.topology
    if scheduler not in _SCHEDULERS:
        raise ValueError(f"unknown scheduler {scheduler!r}")
    if scheduler == "cyclic" and not topo.is_ring:
        raise ValueError("the cyclic sweep scheduler is defined on the ring")
    if log not in _LOG_MODES:
        raise ValueError(f"unknown log mode {log!r}")
    if integrality_tol is None:
        integrality_tol = 1e-9 * topo.n

    theta = state.config.angles.copy()
    deltas = increment_field(state.config).deltas.copy()
    if topo.is_ring:
        w = winding_number(increment_field(state.config), integrality_tol).integer
    else:
        w = 0
    initial_winding = w if topo.is_ring else None

    log_mode = _LOG_MODES[log]
    if log_mode == 2:
        if horizon > log_capacity:
            raise ValueError(
                f"full event log for horizon {horizon} exceeds log_capacity "
                f"{log_capacity}; raise the capacity or log crossings only"
            )
        capacity = horizon
    elif log_mode == 1:
        capacity = min(log_capacity, horizon)
    else:
        capacity = 0
    event_log = EventLog(topo, log, capacity, initial_winding) if log_mode else None
    if event_log is None:
        buffers = [np.zeros(0, dtype=np.int64) for _ in range(6)]
        fbuffers = [np.zeros(0, dtype=np.float64) for _ in range(3)]
        log_arrays = (buffers[0], buffers[1], fbuffers[0], buffers[2], buffers[3],
                      fbuffers[1], fbuffers[2], buffers[4], buffers[5],
                      np.zeros(0, dtype=np.int64))
    else:
        log_arrays = (event_log.step, event_log.edge, event_log.delta_before,
                      event_log.antipodal, event_log.choice, event_log.s_minus,
                      event_log.s_plus, event_log.m_minus, event_log.m_plus,
                      event_log.winding_after)

    counters = np.zeros(kernels.N_DYN_COUNTERS, dtype=np.int64)
    counters[kernels.C_LAST_CROSS] = -1
    key = np.uint64(state.stream_key)
    stops = _sample_stops(state.step, horizon, sample_steps)
    log_len = 0
    t = state.step

    def snapshot(at_step):
        return SimState(Configuration(topo, theta.copy()), at_step,
                        state.seed, state.replica)

    for stop in stops:
        if stop > t:
            with np.errstate(over="ignore"):
                w, log_len = kernels.run_dynamics(
                    theta, deltas, topo.is_ring, t, stop, key,
                    _SCHEDULERS[scheduler], eps_antipodal, check_stride,
                    corridor_check, lyapunov_tol, integrality_tol, w,
                    log_mode, *log_arrays, log_len, counters)
            t = stop
        if observers:
            snap = snapshot(t)
            for obs in observers:
                obs(snap)

    if event_log is not None:
        event_log._trim(int(log_len))
    final = snapshot(t)
    report = RunReport(
        counters=RunCounters.from_array(counters),
        log=event_log,
        initial_winding=initial_winding,
        final_winding=int(w) if topo.is_ring else None,
    )
    return final, report


def step(state, eps_antipodal=0.0):
    """One kernel step; returns (new_state, UpdateEvent)."""
    new_state, report = run(state, 1, eps_antipodal=eps_antipodal,
                            check_stride=1, log="full", sample_steps=None)
    return new_state, report.log[0]


def midpoint_update(cfg, edge, choice=None, eps_antipodal=0.0):
    """Pure single-edge midpoint update of a configuration.

    For an antipodal edge (|delta + pi| <= eps_antipodal) the midpoint is
    ambiguous and `choice` must be +1 (canonical branch) or -1 (its
    antipode); supplying no choice is a contract violation.
    """
    topo = cfg.topology
    if not 0 <= edge < topo.n_edges:
        raise IndexError(f"edge {edge} out of range")
    d = wrap_pi(cfg.angles[(edge + 1) % topo.n] - cfg.angles[edge])
    antipodal = abs(d + PI) <= eps_antipodal
    if antipodal:
        if choice not in (1, -1):
            raise ValueError(
                "antipodal edge: an explicit midpoint choice (+1 or -1) is required"
            )
    val = wrap_pi(cfg.angles[edge] + 0.5 * d)
    if antipodal and choice == -1:
        val = wrap_pi(val + PI)
    angles = cfg.angles.copy()
    angles[edge] = val
    angles[(edge + 1) % topo.n] = val
    return Configuration(topo, angles)


def s_corridor(cfg, edge):
    """Neighbor sums (S_-, S_+) of an edge; None marks an absent side.

    On the ring both neighbors exist cyclically.  On the open path the
    boundary edges lack one neighbor; the missing side is reported as
    absent rather than zero.
    """
    topo = cfg.topology
    if not 0 <= edge < topo.n_edges:
        raise IndexError(f"edge {edge} out of range")
    deltas = increment_field(cfg).deltas
    half = 0.5 * deltas[edge]
    if topo.is_ring:
        return (float(deltas[(edge - 1) % topo.n_edges] + half),
                float(deltas[(edge + 1) % topo.n_edges] + half))
    sm = float(deltas[edge - 1] + half) if edge > 0 else None
    sp = float(deltas[edge + 1] + half) if edge < topo.n_edges - 1 else None
    return sm, sp


def crossing_integer(s, domain_tol=1e-9):
    """The unique m with s - 2*pi*m in [-pi, pi), for s in [-3pi/2, 3pi/2)."""
    s = float(s)
    if not np.isfinite(s) or abs(s) >= 1.5 * PI + domain_tol:
        raise ValueError(
            f"neighbor sum {s!r} outside [-3pi/2, 3pi/2): corrupted increment"
        )
    return int(np.floor((s + PI) / TWO_PI))


def stopping_status(cfg, eps_antipodal=0.0):
    """Do the branch-crossing / antipodal stopping predicates fire now?

    branch_possible tests S_+- in (-pi, pi) over all edges (existing sides
    only on the open path); antipodal_present tests |delta + pi| <= eps.
    """
    deltas = increment_field(cfg).deltas
    antipodal = bool(np.any(np.abs(deltas + PI) <= eps_antipodal))
    half = 0.5 * deltas
    if cfg.topology.is_ring:
        sm = np.roll(deltas, 1) + half
        sp = np.roll(deltas, -1) + half
        branch = bool(np.any(np.abs(sm) >= PI) or np.any(np.abs(sp) >= PI))
    else:
        sm = deltas[:-1] + half[1:]   # S_- of edges 1..E-1
        sp = deltas[1:] + half[:-1]   # S_+ of edges 0..E-2
        branch = bool(np.any(np.abs(sm) >= PI) or np.any(np.abs(sp) >= PI))
    return StoppingStatus(branch_possible=branch, antipodal_present=antipodal)
