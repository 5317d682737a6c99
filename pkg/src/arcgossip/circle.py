"""Wrapped-angle primitives: wrap operator, edge increments, winding number.

Angles live on the circle identified with the half-open interval [-pi, pi).
The wrap operator is

    wrap_pi(a) = a - 2*pi * floor((a + pi) / (2*pi)),

with an explicit boundary fix-up so the half-open range holds bit-exactly
(in particular ``wrap_pi(pi) == -pi``).  Oriented edge e = (i, i+1) is indexed
by its left vertex; on the ring the successor of the last vertex is vertex 0
and the closing edge is the last edge index.  The wrapped increment of an
edge is the shortest signed difference of its endpoint angles, the total
increment is the sum of the wrapped increments, and the winding number is
the total divided by 2*pi -- an integer on the ring, a generic real on the
open path.

Indices are 0-based throughout the code; event logs and CLI output use the
1-based convention (see :func:`index_mod` for the mapping).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

PI = np.pi
TWO_PI = 2.0 * np.pi

OPEN_PATH = "path"
RING = "ring"

DEFAULT_INTEGRALITY_TOL = 1e-9  # per vertex; scaled by n


class ConsistencyError(RuntimeError):
    """A numeric invariant that should hold by construction was violated."""


@dataclass(frozen=True)
class Topology:
    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in (OPEN_PATH, RING):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("need at least 2 vertices")

    @classmethod
    def path(cls, n):
        return cls(OPEN_PATH, n)

    @classmethod
    def ring(cls, n):
        return cls(RING, n)

    @property
    def is_ring(self):
        return self.kind == RING

    @property
    def n_edges(self):
        return self.n if self.is_ring else self.n - 1


@dataclass(frozen=True)
class Configuration:
    """A vector of n angles in [-pi, pi) on a path or ring."""

    topology: Topology
    angles: np.ndarray

    def __post_init__(self):
        angles = np.ascontiguousarray(self.angles, dtype=np.float64)
        if angles.shape != (self.topology.n,):
            raise ValueError(
                f"expected {self.topology.n} angles, got shape {angles.shape}"
            )
        if not np.all(np.isfinite(angles)):
            raise ValueError("angles must be finite")
        if np.any(angles < -PI) or np.any(angles >= PI):
            raise ValueError("angles must lie in [-pi, pi); apply wrap_pi_array first")
        object.__setattr__(self, "angles", angles)

    @property
    def n(self):
        return self.topology.n


@dataclass(frozen=True)
class IncrementField:
    """Per-edge increments.

    When derived from a :class:`Configuration` every entry lies in [-pi, pi)
    and, on the ring, the entries sum to an integer multiple of 2*pi.  The
    linear redistribution dynamics in :mod:`arcgossip.sweep` evolves general
    real-valued fields, so the range is not enforced here.
    """

    topology: Topology
    deltas: np.ndarray

    def __post_init__(self):
        deltas = np.ascontiguousarray(self.deltas, dtype=np.float64)
        if deltas.shape != (self.topology.n_edges,):
            raise ValueError(
                f"expected {self.topology.n_edges} edge increments, got shape {deltas.shape}"
            )
        object.__setattr__(self, "deltas", deltas)


class WindingValue(NamedTuple):
    raw: float
    integer: "int | None"  # set on the ring only


def wrap_pi(a):
    """Wrap a real angle into [-pi, pi)."""
    a = float(a)
    if not np.isfinite(a):
        raise ValueError(f"wrap_pi needs a finite input, got {a!r}")
    r = a - TWO_PI * np.floor((a + PI) / TWO_PI)
    # floor arithmetic can land on the boundary after rounding
    if r >= PI:
        r -= TWO_PI
    if r < -PI:
        r += TWO_PI
    return float(r)


def wrap_pi_array(a):
    """Elementwise wrap into [-pi, pi); same arithmetic as :func:`wrap_pi`."""
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("wrap_pi_array needs finite inputs")
    r = a - TWO_PI * np.floor((a + PI) / TWO_PI)
    r = np.where(r >= PI, r - TWO_PI, r)
    r = np.where(r < -PI, r + TWO_PI, r)
    return r


def index_mod(i, n):
    """Cyclic vertex index in the 1-based convention: 1 + ((i-1) mod n)."""
    if n < 2:
        raise ValueError("need at least 2 vertices")
    return 1 + (int(i) - 1) % int(n)


def wrapped_increment(cfg, edge):
    """Shortest signed difference across oriented edge (edge, edge+1), 0-based."""
    topo = cfg.topology
    if not 0 <= edge < topo.n_edges:
        raise IndexError(f"edge {edge} out of range for {topo.kind} with n={topo.n}")
    right = (edge + 1) % topo.n
    return wrap_pi(cfg.angles[right] - cfg.angles[edge])


def increment_field(cfg):
    """All wrapped edge increments in orientation order."""
    topo = cfg.topology
    if topo.is_ring:
        diffs = np.roll(cfg.angles, -1) - cfg.angles
    else:
        diffs = cfg.angles[1:] - cfg.angles[:-1]
    return IncrementField(topo, wrap_pi_array(diffs))


def total_increment(field):
    return float(np.sum(field.deltas))


def winding_number(field, integrality_tol=None):
    """Total increment divided by 2*pi.

    On the ring the raw value must be an integer up to ``integrality_tol``
    (default ``1e-9 * n``, scaling with the length of the sum); the rounded
    integer is returned alongside the raw value.  A violation signals numeric
    corruption and raises :class:`ConsistencyError`.  On the open path the
    value is a generic real and ``integer`` is ``None``.
    """
    raw = total_increment(field) / TWO_PI
    if not field.topology.is_ring:
        return WindingValue(raw, None)
    if integrality_tol is None:
        integrality_tol = DEFAULT_INTEGRALITY_TOL * field.topology.n
    nearest = int(np.rint(raw))
    if abs(raw - nearest) > integrality_tol:
        raise ConsistencyError(
            f"ring winding {raw!r} is {abs(raw - nearest):.3e} from the nearest "
            f"integer (tolerance {integrality_tol:.3e})"
        )
    return WindingValue(raw, nearest)


def twisted_configuration(n, w0):
    """The twisted profile theta(i) = wrap(2*pi*w0*i/n) on the ring, winding w0."""
    i = np.arange(n, dtype=np.float64)
    return Configuration(Topology.ring(n), wrap_pi_array(TWO_PI * w0 * i / n))
