"""Universal-cover representation and the co-moving frame.

A ring configuration lifts to a real-valued profile eta of length n+1 whose
consecutive differences are the wrapped increments and whose endpoints
differ by exactly 2*pi*W; sites 0 and n are the same agent one traversal
apart.  Inside a frozen winding sector the midpoint dynamics acts on the
lift as plain arithmetic midpoints, so the analysis splits the lift as

    eta(i) = beta*i + s(i) + zeta(i),      beta = 2*pi*W0 / n,

where the compensator s absorbs the +-beta/2 drift each midpoint update
exerts on a linear profile (zero-sum by construction) and the detrended
field zeta evolves by exact Euclidean midpoint averaging: its mean is
conserved, the variance functional decreases by (zeta(k+1)-zeta(k))^2/2
per update, and the diameter never grows.  The mean-square distance of
the increments from the co-moving profile, D = mean((delta - beta -
(s(i+1)-s(i)))^2), equals mean((zeta(i+1)-zeta(i))^2) identically.

The frame is tied to one winding sector: a branch-crossing or antipodal
update invalidates it, which :class:`SectorFrame` reports by raising
:class:`SectorError`.  The slope beta is fixed when the frame is built and
never recomputed.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .circle import (
    TWO_PI,
    Configuration,
    ConsistencyError,
    increment_field,
    winding_number,
    wrap_pi_array,
)
from .dynamics import midpoint_update

FRAME_CSV_HEADER = "step,psi_variance,zeta_diameter,d_tilde,s_l2_per_site,zeta_mean"


class SectorError(ConsistencyError):
    """The co-moving frame left its winding sector (crossing or antipodal)."""


@dataclass(frozen=True)
class LiftedProfile:
    """Real profile on n+1 sites; projects back to the anchor configuration."""

    values: np.ndarray
    anchor: Configuration

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (self.anchor.n + 1,):
            raise ValueError("lift needs n+1 values")
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.anchor.n

    @property
    def winding(self):
        return int(np.rint((self.values[-1] - self.values[0]) / TWO_PI))


@dataclass(frozen=True)
class Compensator:
    """Zero-sum drift record; site n is identified with site 0."""

    values: np.ndarray
    beta: float

    def __post_init__(self):
        object.__setattr__(
            self, "values", np.ascontiguousarray(self.values, dtype=np.float64))

    @property
    def n(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class DetrendedProfile:
    values: np.ndarray  # n+1 entries; values[n] == values[0]
    mean: float


@dataclass(frozen=True)
class LiftCheck:
    max_increment_residual: float
    max_projection_residual: float
    closing_residual: float


def initial_lift(cfg):
    """Lift anchored at eta(0) = theta(0), accumulating wrapped increments."""
    if not cfg.topology.is_ring:
        raise ValueError("the lift is defined on the ring")
    deltas = increment_field(cfg).deltas
    values = np.empty(cfg.n + 1)
    values[0] = cfg.angles[0]
    np.cumsum(deltas, out=values[1:])
    values[1:] += values[0]
    return LiftedProfile(values, cfg)


def verify_lift(lift, field=None):
    """Residuals of the increment, projection, and closing relations."""
    cfg = lift.anchor
    if field is None:
        field = increment_field(cfg)
    v = lift.values
    inc = float(np.max(np.abs(np.diff(v) - field.deltas)))
    theta_ext = np.concatenate([cfg.angles, cfg.angles[:1]])
    proj = float(np.max(np.abs(wrap_pi_array(v - theta_ext))))
    close = float(abs(v[-1] - v[0] - TWO_PI * lift.winding))
    return LiftCheck(inc, proj, close)


def lift_step(lift, event):
    """Advance the lift by one non-singular update event.

    The updated pair moves to the arithmetic midpoint of its lifted values;
    the closing edge n-1 pairs sites n-1 and n, after which site 0 follows
    from the closing relation (and symmetrically edge 0 drags site n).
    Only valid while the winding is frozen: a branch-crossing or antipodal
    event raises SectorError.
    """
    if event.antipodal:
        raise SectorError(f"antipodal update at step {event.step} leaves the sector")
    if event.m_minus != 0 or event.m_plus != 0:
        raise SectorError(
            f"branch-crossing at step {event.step} (m-={event.m_minus}, "
            f"m+={event.m_plus}) invalidates the lift")
    n = lift.n
    k = event.edge
    if not 0 <= k < n:
        raise IndexError(f"edge {k} out of range")
    w = lift.winding
    values = lift.values.copy()
    mid = 0.5 * (values[k] + values[k + 1])
    values[k] = mid
    values[k + 1] = mid
    if k == 0:
        values[n] = mid + TWO_PI * w
    elif k == n - 1:
        values[0] = mid - TWO_PI * w
    new_cfg = midpoint_update(lift.anchor, k)
    return LiftedProfile(values, new_cfg)


def compensator_step(comp, edge):
    """One compensator update on `edge` (closing edge n-1 pairs sites n-1, 0)."""
    n = comp.n
    if not 0 <= edge < n:
        raise IndexError(f"edge {edge} out of range")
    j = (edge + 1) % n
    values = comp.values.copy()
    m = 0.5 * (values[edge] + values[j])
    values[edge] = m + 0.5 * comp.beta
    values[j] = m - 0.5 * comp.beta
    return Compensator(values, comp.beta)


def detrend(lift, comp):
    """zeta(i) = eta(i) - beta*i - s(i mod n); zeta(n) == zeta(0)."""
    n = lift.n
    if comp.n != n:
        raise ValueError("lift and compensator sizes differ")
    i = np.arange(n + 1, dtype=np.float64)
    s_ext = np.concatenate([comp.values, comp.values[:1]])
    values = lift.values - comp.beta * i - s_ext
    return DetrendedProfile(values, float(np.mean(values[:n])))


def variance_functional(zeta):
    """Sum of squared deviations from the mean over the n sites."""
    v = zeta.values[:-1]
    return float(np.sum((v - np.mean(v)) ** 2))


def zeta_diameter(zeta):
    v = zeta.values[:-1]
    return float(np.max(v) - np.min(v))


def comoving_distance(field, comp):
    """mean((delta - beta - (s(i+1) - s(i)))^2) over the ring edges."""
    if not field.topology.is_ring:
        raise ValueError("the co-moving distance is defined on the ring")
    ds = np.roll(comp.values, -1) - comp.values
    resid = field.deltas - comp.beta - ds
    return float(np.mean(resid * resid))


def decompose_increment(field, comp):
    """Split each increment as beta + compensator drift + fluctuation.

    The three addends sum to delta(i) exactly; the fluctuation equals the
    detrended difference zeta(i+1) - zeta(i) of the synchronized frame.
    """
    if not field.topology.is_ring:
        raise ValueError("the decomposition is defined on the ring")
    n = field.topology.n
    beta_part = np.full(n, comp.beta)
    drift = np.roll(comp.values, -1) - comp.values
    fluct = field.deltas - beta_part - drift
    return beta_part, drift, fluct


@dataclass(frozen=True)
class FrameTolerances:
    zeta_mid: float = 1e-12
    psi: float = 1e-12
    psi_drift: float = 1e-8
    s_sum: "float | None" = None       # default 1e-9 * n
    s_l2_bound: "float | None" = None  # default (2*pi*W0)^2
    mean: float = 1e-9
    lift_inc: float = 1e-10
    lift_proj: float = 1e-9
    lift_close: float = 1e-9


@dataclass(frozen=True)
class FrameCounters:
    zeta_midpoint_violations: int
    psi_identity_violations: int
    psi_increase_violations: int
    diameter_increase_violations: int
    s_sum_violations: int
    s_l2_violations: int
    mean_drift_violations: int
    lift_projection_violations: int
    lift_increment_violations: int
    lift_closing_violations: int
    resyncs: int
    psi_drift_violations: int
    checked_steps: int

    @classmethod
    def from_array(cls, c):
        return cls(*(int(c[i]) for i in range(kernels.N_FRAME_COUNTERS)))

    @property
    def total_violations(self):
        return (self.zeta_midpoint_violations + self.psi_identity_violations
                + self.psi_increase_violations + self.diameter_increase_violations
                + self.s_sum_violations + self.s_l2_violations
                + self.mean_drift_violations + self.lift_projection_violations
                + self.lift_increment_violations + self.lift_closing_violations
                + self.psi_drift_violations)


@dataclass(frozen=True)
class FrameSample:
    step: int
    psi_variance: float
    zeta_diameter: float
    d_tilde: float
    s_l2_per_site: float
    zeta_mean: float


@dataclass(frozen=True)
class FrameStats:
    max_s_sum: float
    max_s_l2_per_site: float
    max_psi_drift: float
    max_lift_increment_residual: float
    max_lift_projection_residual: float
    max_lift_closing_residual: float
    max_zeta_midpoint_residual: float
    max_psi_identity_residual: float


class SectorFrame:
    """Synchronized (theta, eta, s) evolution inside one winding sector.

    Tracks the angular trajectory together with its lift and compensator
    under the same uniform edge stream, verifying the frame identities as
    it goes.  beta is fixed from the winding at construction; the first
    branch-crossing or antipodal update raises SectorError.  Every
    `resync_stride` steps the lift invariants are verified and eta is
    rebuilt from theta with its accumulated 2*pi branch preserved, which
    bounds floating-point drift on long runs.
    """

    def __init__(self, config, seed=0, replica=0, *, eps_antipodal=0.0,
                 check_level=2, resync_stride=1 << 16,
                 tolerances=FrameTolerances()):
        if not config.topology.is_ring:
            raise ValueError("the co-moving frame is defined on the ring")
        self.n = config.n
        self.seed = seed
        self.replica = replica
        self.eps_antipodal = eps_antipodal
        self.check_level = check_level
        self.resync_stride = resync_stride
        self.step = 0
        self.theta = config.angles.copy()
        fld = increment_field(config)
        self.deltas = fld.deltas.copy()
        self.w0 = winding_number(fld).integer
        self.beta = TWO_PI * self.w0 / self.n
        self.eta = initial_lift(config).values
        self.s = np.zeros(self.n)
        zeta = self.eta[:-1] - self.beta * np.arange(self.n)
        self.zeta_mean0 = float(np.mean(zeta))
        self.psi = float(np.sum((zeta - self.zeta_mean0) ** 2))
        self.r_prev = float(np.max(zeta) - np.min(zeta))
        self.tol = FrameTolerances(
            zeta_mid=tolerances.zeta_mid,
            psi=tolerances.psi,
            psi_drift=tolerances.psi_drift,
            s_sum=tolerances.s_sum if tolerances.s_sum is not None else 1e-9 * self.n,
            s_l2_bound=(tolerances.s_l2_bound if tolerances.s_l2_bound is not None
                        else (TWO_PI * self.w0) ** 2),
            mean=tolerances.mean,
            lift_inc=tolerances.lift_inc,
            lift_proj=tolerances.lift_proj,
            lift_close=tolerances.lift_close,
        )
        self._counters = np.zeros(kernels.N_FRAME_COUNTERS, dtype=np.int64)
        self._fstats = np.zeros(kernels.N_FRAME_STATS, dtype=np.float64)
        self._key = np.uint64(rng.stream_key(seed, replica))

    @property
    def counters(self):
        return FrameCounters.from_array(self._counters)

    @property
    def stats(self):
        return FrameStats(*(float(x) for x in self._fstats))

    def _zeta_sites(self):
        return self.eta[:-1] - self.beta * np.arange(self.n) - self.s

    def sample(self):
        z = self._zeta_sites()
        ds = np.roll(self.s, -1) - self.s
        resid = self.deltas - self.beta - ds
        return FrameSample(
            step=self.step,
            psi_variance=float(np.sum((z - np.mean(z)) ** 2)),
            zeta_diameter=float(np.max(z) - np.min(z)),
            d_tilde=float(np.mean(resid * resid)),
            s_l2_per_site=float(np.dot(self.s, self.s) / self.n),
            zeta_mean=float(np.mean(z)),
        )

    def advance(self, steps, sample_steps="pow2"):
        """Run `steps` updates; return FrameSamples at the sample stops."""
        from .dynamics import _sample_stops

        stops = _sample_stops(self.step, steps, sample_steps)
        samples = []
        for stop in stops:
            if stop > self.step:
                with np.errstate(over="ignore"):
                    status, fail_step, psi, r_prev = kernels.run_frame(
                        self.theta, self.deltas, self.eta, self.s, self.beta,
                        self.w0, self.step, stop, self._key,
                        self.eps_antipodal, self.check_level,
                        self.resync_stride, self.tol.zeta_mid, self.tol.psi,
                        self.tol.psi_drift, self.tol.s_sum,
                        self.tol.s_l2_bound, self.tol.mean, self.tol.lift_inc,
                        self.tol.lift_proj, self.tol.lift_close,
                        self.zeta_mean0, self.psi, self.r_prev,
                        self._counters, self._fstats)
                self.psi = float(psi)
                self.r_prev = float(r_prev)
                if status != kernels.FRAME_OK:
                    self.step = int(fail_step)
                    reason = {
                        kernels.FRAME_CROSSING: "branch-crossing",
                        kernels.FRAME_ANTIPODAL: "antipodal edge",
                        kernels.FRAME_SDOMAIN: "neighbor sum out of domain",
                    }[int(status)]
                    raise SectorError(
                        f"{reason} at step {fail_step}: the winding sector was "
                        f"left and the frame is no longer valid")
                self.step = stop
            samples.append(self.sample())
        return samples

    def verify(self):
        """Lift invariant residuals at the current step."""
        return verify_lift(self.lift())

    def _config(self):
        from .circle import Topology
        return Configuration(Topology.ring(self.n), self.theta.copy())

    def lift(self):
        return LiftedProfile(self.eta.copy(), self._config())

    def compensator(self):
        return Compensator(self.s.copy(), self.beta)

    def zeta(self):
        return detrend(self.lift(), self.compensator())
