"""Compiled sampling kernels: ARMS-within-Gibbs for the logistic model.

Everything here is numba-jitted and allocation-light because one trial round
runs a few thousand Gibbs sweeps and a simulation study runs tens of millions.
The RNG is an explicit xoshiro256** stream seeded via splitmix64, so a chain
is reproducible bit-for-bit from a single uint64 seed regardless of process
or worker layout.

ARMS (adaptive rejection Metropolis sampling) builds a piecewise-linear upper
hull of the log conditional from secants, samples the piecewise-exponential
envelope, refines the hull with rejected points, and applies a Metropolis
correction against the current point. For log-concave conditionals the hull
majorises the density and the correction accepts with probability 1; for
non-log-concave ones the correction keeps the chain exact.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64

_NMAX = 32  # abscissa capacity per ARMS call
_SMAX = 2 * _NMAX + 4  # hull segment capacity
_MAX_REJECTS = 64


@njit(cache=True, inline="always")
def _splitmix64(box):
    box[0] = box[0] + U64(0x9E3779B97F4A7C15)
    z = box[0]
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(cache=True)
def rng_init(seed, state):
    box = np.empty(1, dtype=np.uint64)
    box[0] = U64(seed)
    for i in range(4):
        state[i] = _splitmix64(box)


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (U64(64) - k))


@njit(cache=True, inline="always")
def _next_u64(state):
    result = _rotl(state[1] * U64(5), U64(7)) * U64(9)
    t = state[1] << U64(17)
    state[2] ^= state[0]
    state[3] ^= state[1]
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    state[3] = _rotl(state[3], U64(45))
    return result


@njit(cache=True, inline="always")
def uniform01(state):
    return (_next_u64(state) >> U64(11)) * (1.0 / 9007199254740992.0)


# Prior codes for _log_conditional: 0 = Normal(0, var p1); 1 = Exp(rate p1);
# 2 = Gamma(shape p1, rate p2); 3 = flat; 4 = Normal(mean p1, var p2).


@njit(cache=True, inline="always")
def _log_conditional(x, dim, th, cx1, cx2, cx3, cn, cs, ncell, ptype, p1, p2):
    t0 = th[0]
    t1 = th[1]
    t2 = th[2]
    t3 = th[3]
    if dim == 0:
        t0 = x
    elif dim == 1:
        t1 = x
    elif dim == 2:
        t2 = x
    else:
        t3 = x
    ll = 0.0
    for i in range(ncell):
        z = t0 + t1 * cx1[i] + t2 * cx2[i] + t3 * cx3[i]
        if z > 0.0:
            logp = -np.log1p(np.exp(-z))
            log1mp = logp - z
        else:
            log1mp = -np.log1p(np.exp(z))
            logp = log1mp + z
        ll += cs[i] * logp + (cn[i] - cs[i]) * log1mp
    code = ptype[dim]
    if code == 0:
        ll += -(x * x) / (2.0 * p1[dim])
    elif code == 1:
        ll += -p1[dim] * x
    elif code == 2:
        ll += (p1[dim] - 1.0) * np.log(x) - p2[dim] * x
    elif code == 4:
        d = x - p1[dim]
        ll += -(d * d) / (2.0 * p2[dim])
    if not np.isfinite(ll):
        ll = -1e300
    return ll


@njit(cache=True, inline="always")
def _conditional_domain(dim, th, us, vs, bound):
    """Feasible interval of theta[dim] holding the other coordinates fixed."""
    if dim == 0:
        return -bound, bound
    if dim == 1:
        lo = 0.0
        for k in range(vs.shape[0]):
            c = -th[3] * vs[k]
            if c > lo:
                lo = c
        return lo, bound
    if dim == 2:
        lo = 0.0
        for j in range(us.shape[0]):
            c = -th[3] * us[j]
            if c > lo:
                lo = c
        return lo, bound
    lo = -bound
    hi = bound
    for k in range(vs.shape[0]):
        vk = vs[k]
        if vk < 0.0:
            c = th[1] / -vk
            if c < hi:
                hi = c
        elif vk > 0.0:
            c = -th[1] / vk
            if c > lo:
                lo = c
    for j in range(us.shape[0]):
        uj = us[j]
        if uj < 0.0:
            c = th[2] / -uj
            if c < hi:
                hi = c
        elif uj > 0.0:
            c = -th[2] / uj
            if c > lo:
                lo = c
    return lo, hi


@njit(cache=True, inline="always")
def _push_segment(idx, left, right, yleft, slope, segl, segr, segy, segs):
    segl[idx] = left
    segr[idx] = right
    segy[idx] = yleft
    segs[idx] = slope
    return idx + 1


@njit(cache=True)
def _build_hull(xs, hs, m, lo, hi, segl, segr, segy, segs):
    """Piecewise-linear upper hull from secants on m sorted abscissae.

    Interior intervals take the lower of the two neighbouring secants
    (the adaptive-rejection envelope, exact for concave log densities),
    floored by the interval's own chord where the envelope would dip
    below it (the non-concave case). Boundary intervals extend the
    outermost secants.
    """
    nseg = 0
    s01 = (hs[1] - hs[0]) / (xs[1] - xs[0])
    if xs[0] > lo:
        nseg = _push_segment(nseg, lo, xs[0], hs[0] + s01 * (lo - xs[0]), s01,
                             segl, segr, segy, segs)
    for i in range(m - 1):
        a = xs[i]
        b = xs[i + 1]
        w = b - a
        chord = (hs[i + 1] - hs[i]) / w
        has_left = i >= 1
        has_right = i + 2 <= m - 1
        if has_left and has_right:
            sl = (hs[i] - hs[i - 1]) / (a - xs[i - 1])
            sr = (hs[i + 2] - hs[i + 1]) / (xs[i + 2] - b)
            la = hs[i]
            ra = hs[i + 1] + sr * (a - b)
            denom = sl - sr
            if np.abs(denom) < 1e-300:
                xc = a  # parallel secants: one line covers the interval
            else:
                xc = a + (ra - la) / denom
            if xc <= a or xc >= b:
                # a single secant is the lower one throughout
                mid = a + 0.5 * w
                lmid = la + sl * 0.5 * w
                rmid = ra + sr * (mid - a)
                if lmid <= rmid:
                    y0, sv = la, sl
                else:
                    y0, sv = ra, sr
                if y0 + sv * 0.5 * w < hs[i] + chord * 0.5 * w:
                    y0, sv = hs[i], chord
                nseg = _push_segment(nseg, a, b, y0, sv, segl, segr, segy, segs)
            else:
                # envelope switches lines at xc; floor each piece by the chord
                if la <= ra:
                    y1, s1v, y2, s2v = la, sl, ra + sr * (xc - a), sr
                else:
                    y1, s1v, y2, s2v = ra, sr, la + sl * (xc - a), sl
                half1 = 0.5 * (xc - a)
                if y1 + s1v * half1 < hs[i] + chord * half1:
                    y1, s1v = hs[i], chord
                nseg = _push_segment(nseg, a, xc, y1, s1v, segl, segr, segy, segs)
                half2 = 0.5 * (b - xc)
                cy = hs[i] + chord * (xc - a)
                if y2 + s2v * half2 < cy + chord * half2:
                    y2, s2v = cy, chord
                nseg = _push_segment(nseg, xc, b, y2, s2v, segl, segr, segy, segs)
        elif has_left:
            sl = (hs[i] - hs[i - 1]) / (a - xs[i - 1])
            if hs[i] + sl * 0.5 * w < hs[i] + chord * 0.5 * w:
                nseg = _push_segment(nseg, a, b, hs[i], chord, segl, segr, segy, segs)
            else:
                nseg = _push_segment(nseg, a, b, hs[i], sl, segl, segr, segy, segs)
        elif has_right:
            sr = (hs[i + 2] - hs[i + 1]) / (xs[i + 2] - b)
            ya = hs[i + 1] + sr * (a - b)
            if ya + sr * 0.5 * w < hs[i] + chord * 0.5 * w:
                nseg = _push_segment(nseg, a, b, hs[i], chord, segl, segr, segy, segs)
            else:
                nseg = _push_segment(nseg, a, b, ya, sr, segl, segr, segy, segs)
        else:
            nseg = _push_segment(nseg, a, b, hs[i], chord, segl, segr, segy, segs)
    smn = (hs[m - 1] - hs[m - 2]) / (xs[m - 1] - xs[m - 2])
    if hi > xs[m - 1]:
        nseg = _push_segment(nseg, xs[m - 1], hi, hs[m - 1], smn, segl, segr, segy, segs)
    return nseg


@njit(cache=True, inline="always")
def _hull_at(x, nseg, segl, segr, segy, segs):
    for i in range(nseg):
        if x <= segr[i] or i == nseg - 1:
            return segy[i] + segs[i] * (x - segl[i])
    return segy[0]


@njit(cache=True)
def _arms(dim, th, lo, hi, cx1, cx2, cx3, cn, cs, ncell, ptype, p1, p2,
          state, xs, hs, segl, segr, segy, segs, sega, mh_stats):
    span = hi - lo
    inset = 1e-9 * span
    loi = lo + inset
    hii = hi - inset
    cur = th[dim]
    if cur < loi:
        cur_h = loi
    elif cur > hii:
        cur_h = hii
    else:
        cur_h = cur

    m = 5
    step = (hii - loi) / 6.0
    for i in range(m):
        xs[i] = loi + step * (i + 1)
    # keep one abscissa at (or effectively at) the current point
    near = 0
    best = np.abs(xs[0] - cur_h)
    for i in range(1, m):
        d = np.abs(xs[i] - cur_h)
        if d < best:
            best = d
            near = i
    if best > 1e-12 * span:
        xs[near] = cur_h
    for i in range(m):
        hs[i] = _log_conditional(xs[i], dim, th, cx1, cx2, cx3, cn, cs, ncell,
                                 ptype, p1, p2)
    h_cur = _log_conditional(cur, dim, th, cx1, cx2, cx3, cn, cs, ncell,
                             ptype, p1, p2)

    for _ in range(_MAX_REJECTS):
        nseg = _build_hull(xs, hs, m, loi, hii, segl, segr, segy, segs)
        # segment areas under exp(hull - offset)
        offset = -1e308
        for i in range(nseg):
            ytop = segy[i]
            yr = segy[i] + segs[i] * (segr[i] - segl[i])
            if yr > ytop:
                ytop = yr
            if ytop > offset:
                offset = ytop
        total = 0.0
        for i in range(nseg):
            w = segr[i] - segl[i]
            if w <= 0.0:
                sega[i] = 0.0
                continue
            sv = segs[i]
            ytop = segy[i] if sv <= 0.0 else segy[i] + sv * w
            aw = np.abs(sv) * w
            if aw < 1e-12:
                q = w
            else:
                q = -np.expm1(-aw) / np.abs(sv)
            sega[i] = np.exp(ytop - offset) * q
            total += sega[i]
        if total <= 0.0:
            return cur
        target = uniform01(state) * total
        acc = 0.0
        pick = nseg - 1
        frac = 0.5
        for i in range(nseg):
            if sega[i] <= 0.0:
                continue
            acc += sega[i]
            if target <= acc:
                pick = i
                frac = 1.0 - (acc - target) / sega[i]
                break
        l = segl[pick]
        r = segr[pick]
        w = r - l
        sv = segs[pick]
        aw = sv * w
        if np.abs(aw) < 1e-12:
            x_new = l + frac * w
        elif sv > 0.0:
            x_new = r + np.log(frac + (1.0 - frac) * np.exp(-aw)) / sv
        else:
            x_new = l + np.log((1.0 - frac) + frac * np.exp(aw)) / sv
        if x_new < loi:
            x_new = loi
        elif x_new > hii:
            x_new = hii
        y_hull = segy[pick] + sv * (x_new - l)
        h_new = _log_conditional(x_new, dim, th, cx1, cx2, cx3, cn, cs, ncell,
                                 ptype, p1, p2)
        if np.log(uniform01(state) + 1e-320) > h_new - y_hull:
            # rejected: refine the hull with this point and try again
            if m < _NMAX:
                pos = m
                for i in range(m):
                    if x_new < xs[i]:
                        pos = i
                        break
                sep = 1e-12 * span
                distinct = True
                if pos < m and np.abs(xs[pos] - x_new) < sep:
                    distinct = False
                if pos > 0 and np.abs(xs[pos - 1] - x_new) < sep:
                    distinct = False
                if distinct:
                    for i in range(m, pos, -1):
                        xs[i] = xs[i - 1]
                        hs[i] = hs[i - 1]
                    xs[pos] = x_new
                    hs[pos] = h_new
                    m += 1
            continue
        # Metropolis correction for hull undershoot
        hull_cur = _hull_at(cur_h, nseg, segl, segr, segy, segs)
        a = h_cur if h_cur < hull_cur else hull_cur
        b = h_new if h_new < y_hull else y_hull
        log_ratio = h_new + a - h_cur - b
        mh_stats[0] += U64(1)
        if np.log(uniform01(state) + 1e-320) <= log_ratio:
            mh_stats[1] += U64(1)
            return x_new
        return cur
    return cur


@njit(cache=True)
def gibbs_run(theta, n_burn, n_keep, cx1, cx2, cx3, cn, cs, ncell,
              us, vs, bound, ptype, p1, p2, seed, out, mh_stats):
    """Run n_burn + n_keep full Gibbs sweeps, storing the last n_keep states.

    theta is mutated in place and ends at the final chain state, which lets
    the caller warm-start the next round's chain. Returns 0 on success.
    """
    state = np.empty(4, dtype=np.uint64)
    rng_init(seed, state)
    xs = np.empty(_NMAX, dtype=np.float64)
    hs = np.empty(_NMAX, dtype=np.float64)
    segl = np.empty(_SMAX, dtype=np.float64)
    segr = np.empty(_SMAX, dtype=np.float64)
    segy = np.empty(_SMAX, dtype=np.float64)
    segs = np.empty(_SMAX, dtype=np.float64)
    sega = np.empty(_SMAX, dtype=np.float64)
    total = n_burn + n_keep
    for sweep in range(total):
        for dim in range(4):
            lo, hi = _conditional_domain(dim, theta, us, vs, bound)
            if hi - lo <= 0.0:
                raise ValueError("infeasible conditional domain in Gibbs sweep")
            theta[dim] = _arms(dim, theta, lo, hi, cx1, cx2, cx3, cn, cs,
                               ncell, ptype, p1, p2, state, xs, hs,
                               segl, segr, segy, segs, sega, mh_stats)
        if sweep >= n_burn:
            row = sweep - n_burn
            out[row, 0] = theta[0]
            out[row, 1] = theta[1]
            out[row, 2] = theta[2]
            out[row, 3] = theta[3]
    return 0
