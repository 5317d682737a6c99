"""Deterministic unwinding: cyclic sweeps and closing-edge accumulation.

While no wrap correction occurs, one midpoint update acts linearly on the
increment field: the selected edge resets to zero and each cyclic neighbor
gains half its value, conserving the total.  A cyclic sweep applies this
for edges 0, 1, ..., n-2 in order and never touches the closing edge n-1,
so every sweep transports increment mass toward it.  One sweep obeys the
closed form

    d'(n-1) = d(n-1) + (1/2 + 2^-(n-1)) d(0) + sum_{j=1}^{n-2} 2^-(n-1-j) d(j)

(0-based edges), and for nonnegative initial data the closing value is
nondecreasing with geometric gap decay at rate c = 2^-(n-2) per sweep,
forcing it toward the conserved total.  Reaching the total means a local
gradient of order 2*pi*W sits on one edge -- far past the corridor bound --
so the wrapped dynamics must eventually branch-cross and shed winding,
which :func:`escape_scenario` demonstrates by replaying the same schedule
through the genuine wrapped kernel.
"""

from dataclasses import dataclass

import numpy as np

from .circle import PI, TWO_PI, twisted_configuration
from .dynamics import SimState, run


@dataclass(frozen=True)
class LinearIncrementState:
    """Unwrapped increment field evolved by the linear redistribution rule."""

    deltas: np.ndarray
    total: float

    def __post_init__(self):
        deltas = np.ascontiguousarray(self.deltas, dtype=np.float64)
        if deltas.ndim != 1 or deltas.shape[0] < 3:
            raise ValueError("need at least 3 edges")
        object.__setattr__(self, "deltas", deltas)

    @classmethod
    def from_deltas(cls, deltas):
        deltas = np.asarray(deltas, dtype=np.float64)
        return cls(deltas, float(np.sum(deltas)))

    @property
    def n(self):
        return self.deltas.shape[0]


def linear_increment_update(state, k):
    """Reset edge k, give half its value to each cyclic neighbor."""
    n = state.n
    if not 0 <= k < n:
        raise IndexError(f"edge {k} out of range")
    d = state.deltas.copy()
    half = 0.5 * d[k]
    d[k] = 0.0
    d[(k - 1) % n] += half
    d[(k + 1) % n] += half
    return LinearIncrementState(d, state.total)


def cyclic_sweep(state):
    """Apply the linear update for k = 0..n-2 in order; edge n-1 is never reset."""
    n = state.n
    d = state.deltas.copy()
    for k in range(n - 1):
        half = 0.5 * d[k]
        d[k] = 0.0
        d[(k - 1) % n] += half
        d[k + 1] += half
    return LinearIncrementState(d, state.total)


def closing_edge_prediction(delta0):
    """Closed-form closing-edge value after one cyclic sweep.

    Evaluated by Horner accumulation from the smallest coefficient upward,
    so the dominant terms near the closing edge keep full precision even
    when the 2^-(n-1-j) coefficients underflow gradually for large n.
    """
    d = np.asarray(delta0, dtype=np.float64)
    n = d.shape[0]
    if n < 3:
        raise ValueError("need at least 3 edges")
    acc = d[0]  # carries coefficient 2^-(n-1) after n-1 halvings
    for j in range(1, n - 1):
        acc = 0.5 * acc + d[j]
    return float(d[n - 1] + 0.5 * d[0] + 0.5 * acc)


def iterate_sweeps(state, m):
    """Closing-edge trajectory over m sweeps (length m+1, index 0 = initial)."""
    if m < 0:
        raise ValueError("sweep count must be >= 0")
    trace = np.empty(m + 1)
    trace[0] = state.deltas[-1]
    cur = state
    for i in range(m):
        cur = cyclic_sweep(cur)
        trace[i + 1] = cur.deltas[-1]
    return trace, cur


def geometric_gap_bound(n, m, initial_gap):
    """(1 - 2^-(n-2))^m * initial_gap."""
    c = 2.0 ** (-(n - 2))
    return (1.0 - c) ** m * initial_gap


@dataclass(frozen=True)
class SweepRow:
    sweep_index: int
    closing_delta: float
    gap: float
    geometric_bound: float
    max_abs_s_near_closing: float


@dataclass(frozen=True)
class EscapeReport:
    n: int
    w0: int
    rows: "list[SweepRow]"
    first_unsafe_sweep: "int | None"   # linear model: first sweep with |S| >= pi near the closing edge
    replay_horizon: int
    replay_first_crossing_step: "int | None"
    replay_final_winding: int
    replay_winding_zero_step: "int | None"
    replay_trace_steps: np.ndarray
    replay_trace_windings: np.ndarray
    replay_log: object  # EventLog of the wrapped replay's singular events


def _max_s_near_closing(deltas):
    """max |S_+-| over the closing edge and its two neighbors."""
    n = deltas.shape[0]
    worst = 0.0
    for k in (n - 2, n - 1, 0):
        sm = deltas[(k - 1) % n] + 0.5 * deltas[k]
        sp = deltas[(k + 1) % n] + 0.5 * deltas[k]
        worst = max(worst, abs(sm), abs(sp))
    return worst


def escape_scenario(n, w0, sweep_budget, *, replay_horizon=None, seed=0,
                    replica=0, check_stride=1024):
    """Linear transport probe plus a wrapped-dynamics replay of the escape.

    Starting from the uniform twist delta = 2*pi*w0/n, iterate cyclic sweeps
    in the linear model, recording the closing-edge accumulation and the
    first sweep at which a neighbor sum near the closing edge reaches pi
    (the corridor can no longer hold there).  Then replay the same cyclic
    schedule through the wrapped dynamics and report the crossing events and
    winding trace.  The random stream is untouched by the scheduler, so any
    antipodal bits remain reproducible.
    """
    if w0 == 0:
        raise ValueError("escape needs a nonzero winding")
    if n < 3:
        raise ValueError("need at least 3 vertices")
    beta = TWO_PI * w0 / n
    state = LinearIncrementState.from_deltas(np.full(n, beta))
    total = state.total

    rows = []
    first_unsafe = None
    cur = state
    rows.append(SweepRow(0, float(cur.deltas[-1]), float(total - cur.deltas[-1]),
                         float(total - cur.deltas[-1]),
                         _max_s_near_closing(cur.deltas)))
    initial_gap = total - float(cur.deltas[-1])
    for m in range(1, sweep_budget + 1):
        cur = cyclic_sweep(cur)
        worst = _max_s_near_closing(cur.deltas)
        rows.append(SweepRow(
            sweep_index=m,
            closing_delta=float(cur.deltas[-1]),
            gap=float(total - cur.deltas[-1]),
            geometric_bound=geometric_gap_bound(n, m, initial_gap),
            max_abs_s_near_closing=worst,
        ))
        if first_unsafe is None and worst >= PI:
            first_unsafe = m

    if replay_horizon is None:
        replay_horizon = sweep_budget * (n - 1)
    cfg = twisted_configuration(n, w0)
    sim = SimState(cfg, 0, seed, replica)
    final, report = run(sim, replay_horizon, scheduler="cyclic",
                        check_stride=check_stride, log="crossings",
                        sample_steps=None)
    from .observables import crossing_statistics
    stats = crossing_statistics(report.log)
    zero_step = None
    for i in range(len(stats.trace_windings)):
        if stats.trace_windings[i] == 0:
            zero_step = int(stats.trace_steps[i])
            break
    return EscapeReport(
        n=n, w0=w0, rows=rows,
        first_unsafe_sweep=first_unsafe,
        replay_horizon=replay_horizon,
        replay_first_crossing_step=stats.first_crossing_step,
        replay_final_winding=report.final_winding,
        replay_winding_zero_step=zero_step,
        replay_trace_steps=stats.trace_steps,
        replay_trace_windings=stats.trace_windings,
        replay_log=report.log,
    )


SWEEP_CSV_HEADER = "sweep_index,closing_delta,gap,geometric_bound,max_abs_s_near_closing"


def write_sweep_csv(path, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(SWEEP_CSV_HEADER + "\n")
        for r in rows:
            fh.write(",".join([
                str(r.sweep_index),
                repr(float(r.closing_delta)),
                repr(float(r.gap)),
                repr(float(r.geometric_bound)),
                repr(float(r.max_abs_s_near_closing)),
            ]) + "\n")
