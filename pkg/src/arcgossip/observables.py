"""Scalar diagnostics along trajectories.

The L1 functional sum(|delta|) is non-increasing under every midpoint
update and certifies consensus when it hits zero; max|delta| against the
2*pi/3 corridor bound certifies that no branch-crossing is possible; the
winding trace is piecewise constant between crossing events; and the
order parameter r = mean(exp(i*theta)) separates consensus (|r| ~ 1)
from twisted profiles (|r| ~ 0, exact cancellation on a perfect twist).
"""

from dataclasses import dataclass

import numpy as np

from .circle import TWO_PI, increment_field, total_increment, winding_number
from .kernels import CORRIDOR_BOUND

OBSERVABLE_CSV_HEADER = (
    "step,l1_lyapunov,max_abs_delta,corridor_ok,winding,r_re,r_im,r_abs"
)


@dataclass(frozen=True)
class ObservableSample:
    step: int
    l1_lyapunov: float
    max_abs_delta: float
    corridor_ok: bool
    winding: float  # integer-valued on the ring, raw real on the path
    order_re: float
    order_im: float

    @property
    def order_abs(self):
        return float(np.hypot(self.order_re, self.order_im))


def l1_lyapunov(field):
    """sum(|delta|) over all edges."""
    return float(np.sum(np.abs(field.deltas)))


def corridor_margin(field):
    """(max|delta|, max|delta| < 2*pi/3)."""
    max_abs = float(np.max(np.abs(field.deltas))) if field.deltas.size else 0.0
    return max_abs, max_abs < CORRIDOR_BOUND


def order_parameter(cfg):
    """(re, im) of mean(exp(i*theta)); modulus in [0, 1]."""
    return (float(np.mean(np.cos(cfg.angles))),
            float(np.mean(np.sin(cfg.angles))))


def sample_state(state):
    """ObservableSample of a SimState snapshot."""
    field = increment_field(state.config)
    max_abs, ok = corridor_margin(field)
    if state.config.topology.is_ring:
        winding = float(winding_number(field).integer)
    else:
        winding = total_increment(field) / TWO_PI
    re, im = order_parameter(state.config)
    return ObservableSample(
        step=state.step,
        l1_lyapunov=l1_lyapunov(field),
        max_abs_delta=max_abs,
        corridor_ok=ok,
        winding=winding,
        order_re=re,
        order_im=im,
    )


class SampleRecorder:
    """Observer that records an ObservableSample per callback."""

    def __init__(self):
        self.samples = []

    def __call__(self, state):
        self.samples.append(sample_state(state))


@dataclass(frozen=True)
class CrossingSummary:
    winding_changes: int           # events with m_- + m_+ != 0 (or antipodal jump)
    branch_events: int             # events with any nonzero crossing integer
    first_crossing_step: "int | None"
    last_crossing_step: "int | None"
    trace_steps: np.ndarray        # step of each winding change
    trace_windings: np.ndarray     # winding value right after that step


def crossing_statistics(log):
    """Aggregate a ring EventLog into crossing counts and the winding trace.

    The trace starts from the log's initial winding and is piecewise
    constant, changing only at recorded events whose winding_after differs
    from the running value.
    """
    if not log.topology.is_ring:
        raise ValueError("crossing statistics are defined for ring logs")
    if log.initial_winding is None:
        raise ValueError("log carries no initial winding")
    branch_events = int(np.count_nonzero(
        (log.m_minus[:len(log)] != 0) | (log.m_plus[:len(log)] != 0)))
    w = int(log.initial_winding)
    steps = []
    values = []
    for i in range(len(log)):
        w_after = int(log.winding_after[i])
        if w_after != w:
            steps.append(int(log.step[i]))
            values.append(w_after)
            w = w_after
    return CrossingSummary(
        winding_changes=len(steps),
        branch_events=branch_events,
        first_crossing_step=steps[0] if steps else None,
        last_crossing_step=steps[-1] if steps else None,
        trace_steps=np.asarray(steps, dtype=np.int64),
        trace_windings=np.asarray(values, dtype=np.int64),
    )


def write_observables_csv(path, samples):
    with open(path, "w", newline="\n") as fh:
        fh.write(OBSERVABLE_CSV_HEADER + "\n")
        for s in samples:
            row = [
                str(s.step),
                repr(float(s.l1_lyapunov)),
                repr(float(s.max_abs_delta)),
                "1" if s.corridor_ok else "0",
                repr(float(s.winding)),
                repr(float(s.order_re)),
                repr(float(s.order_im)),
                repr(float(s.order_abs)),
            ]
            fh.write(",".join(row) + "\n")
