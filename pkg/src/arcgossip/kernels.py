"""Hot inner loops for the midpoint dynamics and the co-moving frame.

Everything here is written in a numba-compatible subset of Python and
compiled (or not) according to :mod:`arcgossip.backend`.  The sequential
update loop dominates runtime -- one edge per step, millions of steps --
so this is where the numba lane pays off; drivers in :mod:`arcgossip.dynamics`
and :mod:`arcgossip.liftframe` own the arrays and call in chunks between
observation points.

Randomness is counter-based: the draw at step t is a pure function of
(key, t, channel), with the fair antipodal bit on its own channel so that
consuming it never shifts the edge stream.  See :mod:`arcgossip.rng` for the
driver-side twin of the mixing function.

Invariant checks run inside the loop and report through a counters array:

* Lyapunov: the change of sum(|delta|) under one update is a local quantity
  (only three edges change), so monotonicity is checked exactly per step at
  O(1) cost.
* Winding: the tracked integer winding is adjusted by -(m_- + m_+) at each
  update and verified against a full recomputation at a configurable stride.
* Corridor: when max|delta| < 2*pi/3 before a step, that step must record
  m_- = m_+ = 0.

The updated pair is assigned one midpoint value computed once, so the two
angles compare equal bit-for-bit and the updated edge increment is exactly
zero; evaluating the second branch of the update rule separately would
reproduce the same value only up to rounding.
"""

import numpy as np

from .backend import jit_kernel

PI = np.pi
TWO_PI = 2.0 * np.pi
CORRIDOR_BOUND = TWO_PI / 3.0

# rng constants; must match arcgossip.rng
_U1 = np.uint64(1)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SALT = np.uint64(0xD1B54A32D192ED03)
CH_EDGE = np.uint64(0)
CH_ANTIPODAL = np.uint64(1)

# dynamics counter slots
C_LYAP = 0        # local Lyapunov increase beyond tolerance
C_WIND = 1        # tracked winding != recomputed winding at a checked step
C_CORR = 2        # corridor held but a nonzero crossing integer was recorded
C_BRANCH = 3      # events with m_- != 0 or m_+ != 0
C_CROSS = 4       # events where the integer winding actually changed
C_LAST_CROSS = 5  # last step index with a winding change (-1 if none)
C_ANT = 6         # antipodal updates
C_CHECKED = 7     # steps with a winding recomputation check
C_SDOM = 8        # |S| outside [-3pi/2, 3pi/2) beyond tolerance
C_INTEG = 9       # ring total increment not an integer multiple of 2pi
C_LOGDROP = 10    # events dropped because the log buffer was full
N_DYN_COUNTERS = 11

# frame counter slots
F_ZMID = 0        # detrended midpoint identity violations
F_PSI_ID = 1      # variance decrement identity violations
F_PSI_INC = 2     # variance increased beyond tolerance
F_RINC = 3        # detrended diameter increased
F_SSUM = 4        # compensator zero-sum violations
F_SL2 = 5         # per-site compensator L2 exceeded the bound
F_MEAN = 6        # detrended mean drifted at a checkpoint
F_LPROJ = 7       # lift projection violations at a checkpoint
F_LINC = 8        # lift increment violations at a checkpoint
F_LCLOSE = 9      # lift closing-relation violations at a checkpoint
F_RESYNC = 10     # checkpoints performed
F_PSI_DRIFT = 11  # tracked vs recomputed variance drift beyond tolerance
F_CHECKED = 12    # steps with per-step checks
N_FRAME_COUNTERS = 13

# frame float stats (running maxima of residuals)
FS_MAX_SSUM = 0
FS_MAX_SL2 = 1
FS_MAX_PSI_DRIFT = 2
FS_MAX_LINC = 3
FS_MAX_LPROJ = 4
FS_MAX_LCLOSE = 5
FS_MAX_ZMID = 6
FS_MAX_PSIID = 7
N_FRAME_STATS = 8

# frame termination status
FRAME_OK = 0
FRAME_CROSSING = 1
FRAME_ANTIPODAL = 2
FRAME_SDOMAIN = 3


@jit_kernel
def _mix64(z):
    z = (z ^ (z >> _SHIFT30)) * _MIX1
    z = (z ^ (z >> _SHIFT27)) * _MIX2
    return z ^ (z >> _SHIFT31)


@jit_kernel
def _draw(key, counter, channel):
    return _mix64(key + _GAMMA * (counter + _U1) + _SALT * (channel + _U1))


@jit_kernel
def _wrap(a):
    r = a - TWO_PI * np.floor((a + PI) / TWO_PI)
    if r >= PI:
        r -= TWO_PI
    if r < -PI:
        r += TWO_PI
    return r


@jit_kernel
def run_dynamics(theta, deltas, is_ring, t0, t1, key, scheduler, eps_ant,
                 check_stride, corridor_check, lyap_tol, integ_tol, w_in,
                 log_mode, log_step, log_edge, log_delta, log_anti, log_choice,
                 log_sminus, log_splus, log_mminus, log_mplus, log_wind,
                 log_len, counters):
    """Advance theta (and its maintained increment field) from step t0 to t1.

    scheduler: 0 = uniform random edge, 1 = cyclic sweep over the interior
    edges 0..n_edges-2 (ring only; the closing edge is never selected).
    log_mode: 0 = none, 1 = singular events only (any nonzero crossing
    integer, or an antipodal update), 2 = every step.  Returns the tracked
    integer winding (0 on the path) and the new log length.
    """
    n = theta.shape[0]
    n_edges = n if is_ring else n - 1
    log_cap = log_step.shape[0]
    w = w_in

    for t in range(t0, t1):
        checked = check_stride == 1 or (check_stride > 1 and t % check_stride == 0)

        corridor_before = False
        if is_ring and corridor_check and checked:
            mx = 0.0
            for i in range(n_edges):
                a = abs(deltas[i])
                if a > mx:
                    mx = a
            corridor_before = mx < CORRIDOR_BOUND

        if scheduler == 1:
            k = np.int64(t % (n_edges - 1))
        else:
            k = np.int64(_draw(key, np.uint64(t), CH_EDGE) % np.uint64(n_edges))
        k1v = (k + 1) % n

        d = deltas[k]
        antipodal = abs(d + PI) <= eps_ant
        choice = 0

        sm = np.nan
        sp = np.nan
        mm = 0
        mp = 0
        has_left = is_ring or k > 0
        has_right = is_ring or k < n_edges - 1
        kl = (k - 1) % n_edges
        kr = (k + 1) % n_edges
        if has_left:
            sm = deltas[kl] + 0.5 * d
            if abs(sm) >= 1.5 * PI + 1e-9:
                counters[C_SDOM] += 1
            mm = int(np.floor((sm + PI) / TWO_PI))
        if has_right:
            sp = deltas[kr] + 0.5 * d
            if abs(sp) >= 1.5 * PI + 1e-9:
                counters[C_SDOM] += 1
            mp = int(np.floor((sp + PI) / TWO_PI))

        old_local = abs(d)
        if has_left:
            old_local += abs(deltas[kl])
        if has_right:
            old_local += abs(deltas[kr])

        val = _wrap(theta[k] + 0.5 * d)
        if antipodal:
            counters[C_ANT] += 1
            bit = _draw(key, np.uint64(t), CH_ANTIPODAL) & _U1
            if bit == _U1:
                choice = -1
                val = _wrap(val + PI)
            else:
                choice = 1
        theta[k] = val
        theta[k1v] = val

        deltas[k] = 0.0
        new_local = 0.0
        if has_left:
            deltas[kl] = _wrap(theta[kl + 1 if kl + 1 < n else 0] - theta[kl])
            new_local += abs(deltas[kl])
        if has_right:
            deltas[kr] = _wrap(theta[kr + 1 if kr + 1 < n else 0] - theta[kr])
            new_local += abs(deltas[kr])

        if new_local - old_local > lyap_tol:
            counters[C_LYAP] += 1

        if mm != 0 or mp != 0:
            counters[C_BRANCH] += 1

        w_prev = w
        if is_ring:
            if not antipodal:
                w -= mm + mp
            if checked or antipodal:
                acc = 0.0
                for i in range(n_edges):
                    acc += deltas[i]
                w_chk = int(np.rint(acc / TWO_PI))
                if abs(acc - TWO_PI * w_chk) > integ_tol:
                    counters[C_INTEG] += 1
                if antipodal:
                    w = w_chk
                else:
                    counters[C_CHECKED] += 1
                    if w_chk != w:
                        counters[C_WIND] += 1
                        w = w_chk
            if corridor_before and (mm != 0 or mp != 0 or antipodal):
                counters[C_CORR] += 1
            if w != w_prev:
                counters[C_CROSS] += 1
                counters[C_LAST_CROSS] = t

        if log_mode == 2 or (log_mode == 1 and (mm != 0 or mp != 0 or antipodal)):
            if log_len < log_cap:
                log_step[log_len] = t
                log_edge[log_len] = k
                log_delta[log_len] = d
                log_anti[log_len] = 1 if antipodal else 0
                log_choice[log_len] = choice
                log_sminus[log_len] = sm
                log_splus[log_len] = sp
                log_mminus[log_len] = mm
                log_mplus[log_len] = mp
                log_wind[log_len] = w
                log_len += 1
            else:
                counters[C_LOGDROP] += 1

    return w, log_len


@jit_kernel
def _frame_checkpoint(theta, deltas, eta, s, beta, w0, zeta_mean0, psi_track,
                      s_sum_tol, mean_tol, psi_drift_tol,
                      lift_inc_tol, lift_proj_tol, lift_close_tol,
                      counters, fstats):
    """Verify frame invariants on the drifted state, then rebuild the lift.

    The rebuild re-derives the increments from theta and re-accumulates eta
    from the anchor, preserving the accumulated 2*pi branch of eta(0); this
    bounds floating-point drift on long runs without altering the trajectory.
    Returns the recomputed variance and diameter of the detrended field.
    """
    n = theta.shape[0]

    ssum = 0.0
    for i in range(n):
        ssum += s[i]
    a = abs(ssum)
    if a > fstats[FS_MAX_SSUM]:
        fstats[FS_MAX_SSUM] = a
    if a > s_sum_tol:
        counters[F_SSUM] += 1

    mean = 0.0
    for i in range(n):
        mean += eta[i] - beta * i - s[i]
    mean /= n
    if abs(mean - zeta_mean0) > mean_tol:
        counters[F_MEAN] += 1

    psi_re = 0.0
    for i in range(n):
        z = eta[i] - beta * i - s[i] - zeta_mean0
        psi_re += z * z
    drift = abs(psi_re - psi_track)
    if drift > fstats[FS_MAX_PSI_DRIFT]:
        fstats[FS_MAX_PSI_DRIFT] = drift
    if drift > psi_drift_tol:
        counters[F_PSI_DRIFT] += 1

    max_inc = 0.0
    for i in range(n):
        r = abs((eta[i + 1] - eta[i]) - deltas[i])
        if r > max_inc:
            max_inc = r
    if max_inc > fstats[FS_MAX_LINC]:
        fstats[FS_MAX_LINC] = max_inc
    if max_inc > lift_inc_tol:
        counters[F_LINC] += 1

    max_proj = 0.0
    for i in range(n + 1):
        r = abs(_wrap(eta[i] - theta[i % n]))
        if r > max_proj:
            max_proj = r
    if max_proj > fstats[FS_MAX_LPROJ]:
        fstats[FS_MAX_LPROJ] = max_proj
    if max_proj > lift_proj_tol:
        counters[F_LPROJ] += 1

    close_res = abs(eta[n] - eta[0] - TWO_PI * w0)
    if close_res > fstats[FS_MAX_LCLOSE]:
        fstats[FS_MAX_LCLOSE] = close_res
    if close_res > lift_close_tol:
        counters[F_LCLOSE] += 1

    # rebuild: increments from theta, eta from the anchor branch
    for i in range(n):
        deltas[i] = _wrap(theta[(i + 1) % n] - theta[i])
    offset = TWO_PI * np.rint((eta[0] - theta[0]) / TWO_PI)
    eta[0] = theta[0] + offset
    for i in range(n):
        eta[i + 1] = eta[i] + deltas[i]

    counters[F_RESYNC] += 1

    psi_new = 0.0
    zmin = eta[0] - s[0] - zeta_mean0
    zmax = zmin
    for i in range(n):
        z = eta[i] - beta * i - s[i] - zeta_mean0
        psi_new += z * z
        if z < zmin:
            zmin = z
        if z > zmax:
            zmax = z
    return psi_new, zmax - zmin


@jit_kernel
def run_frame(theta, deltas, eta, s, beta, w0, t0, t1, key, eps_ant,
              check_level, resync_stride,
              zeta_mid_tol, psi_tol, psi_drift_tol, s_sum_tol, s_l2_bound,
              mean_tol, lift_inc_tol, lift_proj_tol, lift_close_tol,
              zeta_mean0, psi_in, r_in, counters, fstats):
    """Advance the synchronized (theta, eta, s) frame on the ring.

    The frame is only valid inside a fixed winding sector: the first
    branch-crossing or antipodal update aborts the loop with a nonzero
    status and the step at which it happened.  check_level: 0 = none,
    1 = per-step local identities (detrended midpoint, variance decrement),
    2 = additionally diameter monotonicity, compensator zero-sum and the
    per-site L2 bound each step.
    """
    n = theta.shape[0]
    psi = psi_in
    r_prev = r_in
    status = FRAME_OK
    fail_step = -1

    for t in range(t0, t1):
        if resync_stride > 0 and t > 0 and t % resync_stride == 0:
            psi, r_prev = _frame_checkpoint(
                theta, deltas, eta, s, beta, w0, zeta_mean0, psi,
                s_sum_tol, mean_tol, psi_drift_tol,
                lift_inc_tol, lift_proj_tol, lift_close_tol, counters, fstats)

        k = np.int64(_draw(key, np.uint64(t), CH_EDGE) % np.uint64(n))
        k1v = (k + 1) % n
        d = deltas[k]

        if abs(d + PI) <= eps_ant:
            status = FRAME_ANTIPODAL
            fail_step = t
            break
        sm = deltas[(k - 1) % n] + 0.5 * d
        sp = deltas[(k + 1) % n] + 0.5 * d
        if abs(sm) >= 1.5 * PI + 1e-9 or abs(sp) >= 1.5 * PI + 1e-9:
            status = FRAME_SDOMAIN
            fail_step = t
            break
        mm = int(np.floor((sm + PI) / TWO_PI))
        mp = int(np.floor((sp + PI) / TWO_PI))
        if mm != 0 or mp != 0:
            status = FRAME_CROSSING
            fail_step = t
            break

        za = eta[k] - beta * k - s[k]
        zb = eta[k + 1] - beta * (k + 1) - s[k1v]
        b_site_old = za  # placeholder; set below
        if k < n - 1:
            b_site_old = zb
        else:
            b_site_old = eta[0] - s[0]

        val = _wrap(theta[k] + 0.5 * d)
        theta[k] = val
        theta[k1v] = val
        deltas[k] = 0.0
        kl = (k - 1) % n
        kr = (k + 1) % n
        deltas[kl] = _wrap(theta[kl + 1 if kl + 1 < n else 0] - theta[kl])
        deltas[kr] = _wrap(theta[kr + 1 if kr + 1 < n else 0] - theta[kr])

        m_lift = 0.5 * (eta[k] + eta[k + 1])
        eta[k] = m_lift
        eta[k + 1] = m_lift
        if k == 0:
            eta[n] = m_lift + TWO_PI * w0
        elif k == n - 1:
            eta[0] = m_lift - TWO_PI * w0

        sa = s[k]
        sb = s[k1v]
        ms = 0.5 * (sa + sb)
        s[k] = ms + 0.5 * beta
        s[k1v] = ms - 0.5 * beta

        if check_level >= 1:
            counters[F_CHECKED] += 1
            zm = 0.5 * (za + zb)
            za2 = eta[k] - beta * k - s[k]
            zb2 = eta[k + 1] - beta * (k + 1) - s[k1v]
            res = abs(za2 - zm)
            r2 = abs(zb2 - zm)
            if r2 > res:
                res = r2
            if res > fstats[FS_MAX_ZMID]:
                fstats[FS_MAX_ZMID] = res
            if res > zeta_mid_tol:
                counters[F_ZMID] += 1

            if k < n - 1:
                b_site_new = zb2
            else:
                b_site_new = eta[0] - s[0]
            ao = za - zeta_mean0
            bo = b_site_old - zeta_mean0
            an = za2 - zeta_mean0
            bn = b_site_new - zeta_mean0
            lhs = (an * an + bn * bn) - (ao * ao + bo * bo)
            rhs = -0.5 * (b_site_old - za) * (b_site_old - za)
            res = abs(lhs - rhs)
            if res > fstats[FS_MAX_PSIID]:
                fstats[FS_MAX_PSIID] = res
            if res > psi_tol:
                counters[F_PSI_ID] += 1
            if lhs > psi_tol:
                counters[F_PSI_INC] += 1
            psi += lhs

        if check_level >= 2:
            zmin = eta[0] - s[0]
            zmax = zmin
            ssum = 0.0
            sl2 = 0.0
            for i in range(n):
                z = eta[i] - beta * i - s[i]
                if z < zmin:
                    zmin = z
                if z > zmax:
                    zmax = z
                ssum += s[i]
                sl2 += s[i] * s[i]
            r_new = zmax - zmin
            # zeta is derived from (eta, s), so the midpoint lands within
            # rounding of [min, max] rather than exactly inside it
            if r_new > r_prev + psi_tol:
                counters[F_RINC] += 1
            r_prev = r_new
            a = abs(ssum)
            if a > fstats[FS_MAX_SSUM]:
                fstats[FS_MAX_SSUM] = a
            if a > s_sum_tol:
                counters[F_SSUM] += 1
            persite = sl2 / n
            if persite > fstats[FS_MAX_SL2]:
                fstats[FS_MAX_SL2] = persite
            if persite > s_l2_bound:
                counters[F_SL2] += 1

    return status, fail_step, psi, r_prev
