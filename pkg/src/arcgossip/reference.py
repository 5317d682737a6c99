"""Closed-form references for the disordered first-update crossing event.

For i.i.d. uniform angles, the wrapped difference across an edge is again
uniform on [-pi, pi); its unwrapped counterpart has the triangular density
(2*pi - |w|) / (4*pi^2) on (-2*pi, 2*pi).  Conditional on the updated
edge's increment y, each neighbor sum stays inside (-pi, pi) with
probability 1 - |y|/(4*pi), independently on the two sides, so

    P(no crossing | y) = (1 - |y|/(4*pi))^2,
    P(no crossing)     = 37/48,       P(crossing) = 11/48.

:func:`no_crossing_probability_quadrature` recomputes the unconditional
value by brute tensor-grid quadrature of the raw three-variable indicator,
independent of both the simulator and the conditional factorization above.
"""

import numpy as np

from .circle import PI, TWO_PI

CROSSING_PROBABILITY = 11.0 / 48.0
NO_CROSSING_PROBABILITY = 37.0 / 48.0


def no_crossing_prob_given_y(y):
    """(1 - |y|/(4*pi))^2 for |y| <= pi."""
    y = float(y)
    if not np.isfinite(y) or abs(y) > PI:
        raise ValueError(f"conditioning increment {y!r} outside [-pi, pi]")
    return (1.0 - abs(y) / (4.0 * PI)) ** 2


def triangular_difference_density(w):
    """Density of the unwrapped difference of two uniform angles."""
    w = np.asarray(w, dtype=np.float64)
    out = np.where(np.abs(w) < TWO_PI, (TWO_PI - np.abs(w)) / (4.0 * PI**2), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def no_crossing_probability_quadrature(n_grid=2000):
    """Midpoint-rule quadrature of the no-crossing indicator on [-pi,pi)^3.

    The event {|x + y/2| <= pi and |z + y/2| <= pi} has a product indicator
    in (x, z) for fixed y, so the full n^3 tensor sum factorizes exactly
    into n slice sums; nothing else about the event's structure is used.
    Even n keeps the grid symmetric about 0, which cancels the leading
    boundary error of the indicator quadrature.
    """
    if n_grid < 10:
        raise ValueError("grid too coarse")
    h = TWO_PI / n_grid
    x = -PI + (np.arange(n_grid) + 0.5) * h
    y = -PI + (np.arange(n_grid) + 0.5) * h
    slice_frac = np.empty(n_grid)
    for j in range(n_grid):
        slice_frac[j] = np.count_nonzero(np.abs(x + 0.5 * y[j]) <= PI)
    slice_frac /= n_grid
    return float(np.mean(slice_frac * slice_frac))


def crossing_probability_quadrature(n_grid=2000):
    return 1.0 - no_crossing_probability_quadrature(n_grid)
