"""Scalar and profile kernels.

Every function here runs either compiled by numba or as plain Python (see
:mod:`hetsched._jit`).  Power functions are passed as ``(kind, prm)`` where
``kind`` is one of the integer codes below and ``prm`` is the packed float
parameter vector built by :class:`hetsched.power.PowerFunction`.

Packed layouts
--------------
POLY    ``[alpha]``
AFFINE  ``[K, c_1..c_K, h_1..h_{2K-1}]`` with ``P(s) = sum c_k s^k`` and
        ``H(s) = sum h_n s^n`` the antiderivative of ``P(s) P'(s) / s``.
TABLE   ``[n, s(n), p(n), m(n), H(n), L(n)]``; breakpoints start at the
        origin, ``m[k]`` is the slope right of breakpoint ``k`` (the last
        slope extends to infinity), ``H`` and ``L`` are the antiderivatives
        of ``P P'/s`` and ``P'/s`` evaluated at the breakpoints.

Integrals over power ``x`` are evaluated in the speed variable ``s = Q(x)``,
where both integrands become elementary:
``int x/Q(x) dx = int P(s) P'(s)/s ds`` and ``int dx/Q(x) = int P'(s)/s ds``.
"""

import math

import numpy as np

from ._jit import njit

POLY = 0
AFFINE = 1
TABLE = 2


# --------------------------------------------------------------------------
# power function primitives


@njit
def _table_seg_speed(prm, s):
    n = int(prm[0])
    k = 0
    while k + 1 < n and prm[1 + k + 1] <= s:
        k += 1
    return k


@njit
def _table_seg_power(prm, y):
    n = int(prm[0])
    k = 0
    while k + 1 < n and prm[1 + n + k + 1] <= y:
        k += 1
    return k


@njit
def power(kind, prm, s):
    if kind == POLY:
        return s ** prm[0]
    if kind == AFFINE:
        K = int(prm[0])
        acc = 0.0
        for k in range(K, 0, -1):
            acc = acc * s + prm[k]
        return acc * s
    n = int(prm[0])
    k = _table_seg_speed(prm, s)
    return prm[1 + n + k] + prm[1 + 2 * n + k] * (s - prm[1 + k])


@njit
def power_derivative(kind, prm, s):
    if kind == POLY:
        a = prm[0]
        if s == 0.0:
            return 0.0
        return a * s ** (a - 1.0)
    if kind == AFFINE:
        K = int(prm[0])
        acc = 0.0
        for k in range(K, 0, -1):
            acc = acc * s + k * prm[k]
        return acc
    n = int(prm[0])
    return prm[1 + 2 * n + _table_seg_speed(prm, s)]


@njit
def slope_at_zero(kind, prm):
    """P'(0); positive exactly when the time to drain a lone job diverges."""
    if kind == POLY:
        return 0.0
    if kind == AFFINE:
        return prm[1]
    n = int(prm[0])
    return prm[1 + 2 * n]


@njit
def speed(kind, prm, y):
    if y <= 0.0:
        return 0.0
    if kind == POLY:
        return y ** (1.0 / prm[0])
    if kind == TABLE:
        n = int(prm[0])
        k = _table_seg_power(prm, y)
        return prm[1 + k] + (y - prm[1 + n + k]) / prm[1 + 2 * n + k]
    # bracketed Newton with bisection fallback
    lo = 0.0
    hi = 1.0
    while power(kind, prm, hi) < y:
        lo = hi
        hi *= 2.0
    s = 0.5 * (lo + hi)
    for _ in range(200):
        f = power(kind, prm, s) - y
        if f == 0.0:
            return s
        if f > 0.0:
            hi = s
        else:
            lo = s
        d = power_derivative(kind, prm, s)
        cand = s - f / d if d > 0.0 else -1.0
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        if abs(cand - s) <= 4e-16 * cand or hi - lo <= 4e-16 * hi:
            return cand
        s = cand
    return s


@njit
def x_over_q(kind, prm, x):
    """x / Q(x), continuously extended to x = 0 by its right limit P'(0)."""
    if x <= 0.0:
        return slope_at_zero(kind, prm)
    if kind == POLY:
        return x ** (1.0 - 1.0 / prm[0])
    return x / speed(kind, prm, x)


# --------------------------------------------------------------------------
# antiderivatives in the speed variable


@njit
def _affine_H(prm, s):
    K = int(prm[0])
    acc = 0.0
    for n in range(2 * K - 1, 0, -1):
        acc = acc * s + prm[K + n]
    return acc * s


@njit
def _affine_Jtail(prm, s):
    # sum_{k>=2} k c_k s^{k-1} / (k-1); the c_1 ln s term is handled apart
    K = int(prm[0])
    acc = 0.0
    for k in range(K, 1, -1):
        acc = acc * s + k * prm[k] / (k - 1)
    return acc * s


@njit
def _table_H(prm, s):
    n = int(prm[0])
    k = _table_seg_speed(prm, s)
    m = prm[1 + 2 * n + k]
    if k == 0:
        return m * m * s
    sk = prm[1 + k]
    c = prm[1 + n + k] - m * sk
    return prm[1 + 3 * n + k] + m * m * (s - sk) + m * c * math.log(s / sk)


@njit
def _table_L(prm, s):
    # antiderivative of P'(s)/s; -inf at s = 0
    n = int(prm[0])
    k = _table_seg_speed(prm, s)
    m = prm[1 + 2 * n + k]
    if k == 0:
        if s <= 0.0:
            return -np.inf
        return m * math.log(s)
    return prm[1 + 4 * n + k] + m * math.log(s / prm[1 + k])


@njit
def int_x_over_q(kind, prm, a, b):
    """int_a^b x/Q(x) dx for 0 <= a <= b."""
    if b <= a:
        return 0.0
    if kind == POLY:
        beta = 2.0 - 1.0 / prm[0]
        return (b ** beta - a ** beta) / beta
    sa = speed(kind, prm, a)
    sb = speed(kind, prm, b)
    if kind == AFFINE:
        return _affine_H(prm, sb) - _affine_H(prm, sa)
    return _table_H(prm, sb) - _table_H(prm, sa)


@njit
def int_inv_q(kind, prm, W, a, b):
    """int_a^b dw / Q(W + w); +inf when the integral diverges at W + a = 0."""
    if b <= a:
        return 0.0
    if kind == POLY:
        e = 1.0 - 1.0 / prm[0]
        return ((W + b) ** e - (W + a) ** e) / e
    sa = speed(kind, prm, W + a)
    sb = speed(kind, prm, W + b)
    if kind == AFFINE:
        c1 = prm[1]
        tail = _affine_Jtail(prm, sb) - _affine_Jtail(prm, sa)
        if c1 > 0.0:
            if sa <= 0.0:
                return np.inf
            return c1 * math.log(sb / sa) + tail
        return tail
    if sa <= 0.0:
        return np.inf
    return _table_L(prm, sb) - _table_L(prm, sa)


@njit
def _affine_J(prm, s):
    c1 = prm[1]
    v = _affine_Jtail(prm, s)
    if c1 > 0.0:
        if s <= 0.0:
            return -np.inf
        v += c1 * math.log(s)
    return v


@njit
def solve_mass(kind, prm, W, a, target):
    """Mass b in [0, a] with int_b^a dw/Q(W+w) = target."""
    if target <= 0.0:
        return a
    if kind == POLY:
        e = 1.0 - 1.0 / prm[0]
        base = (W + a) ** e - e * target
        if base <= 0.0:
            return 0.0
        b = base ** (1.0 / e) - W
        return min(max(b, 0.0), a)
    sa = speed(kind, prm, W + a)
    if kind == TABLE:
        n = int(prm[0])
        goal = _table_L(prm, sa) - target
        k = n - 1
        while k >= 1 and prm[1 + 4 * n + k] > goal:
            k -= 1
        if k == 0:
            s = math.exp(goal / prm[1 + 2 * n])
        else:
            s = prm[1 + k] * math.exp((goal - prm[1 + 4 * n + k]) / prm[1 + 2 * n + k])
    else:
        goal = _affine_J(prm, sa) - target
        lo = speed(kind, prm, W)
        hi = sa
        if _affine_J(prm, lo) >= goal:
            return 0.0
        s = 0.5 * (lo + hi)
        for _ in range(200):
            f = _affine_J(prm, s) - goal
            if f == 0.0:
                break
            if f > 0.0:
                hi = s
            else:
                lo = s
            d = power_derivative(kind, prm, s) / s
            cand = s - f / d
            if not (lo < cand < hi):
                cand = 0.5 * (lo + hi)
            if abs(cand - s) <= 4e-16 * cand or hi - lo <= 4e-16 * hi:
                s = cand
                break
            s = cand
    b = power(kind, prm, s) - W
    return min(max(b, 0.0), a)


# --------------------------------------------------------------------------
# residual profiles


@njit
def _suffix(masses):
    n = masses.shape[0]
    out = np.zeros(n + 1)
    for i in range(n - 1, -1, -1):
        out[i] = out[i + 1] + masses[i]
    return out


@njit
def shadow_weighted(keys, masses, kind, prm):
    suf = _suffix(masses)
    prev = 0.0
    acc = 0.0
    for i in range(keys.shape[0]):
        if keys[i] > prev:
            acc += (keys[i] - prev) * int_x_over_q(kind, prm, 0.0, suf[i])
            prev = keys[i]
    return acc


@njit
def delta_weighted(keys, masses, dj, wj, kind, prm):
    suf = _suffix(masses)
    prev = 0.0
    acc = 0.0
    for i in range(keys.shape[0]):
        end = min(keys[i], dj)
        if end > prev:
            acc += (end - prev) * int_x_over_q(kind, prm, suf[i], suf[i] + wj)
            prev = end
        if keys[i] >= dj:
            break
    if dj > prev:
        acc += (dj - prev) * int_x_over_q(kind, prm, 0.0, wj)
    return acc


@njit
def potential_weighted_raw(ka, ma, ko, mo, kind, prm):
    """int_q int_0^{(w_a(q) - w_o(q))_+} x/Q(x) dx dq over merged breakpoints."""
    sa = _suffix(ma)
    so = _suffix(mo)
    na = ka.shape[0]
    no = ko.shape[0]
    i = 0
    j = 0
    prev = 0.0
    acc = 0.0
    while i < na:
        u = ka[i]
        if j < no and ko[j] < u:
            u = ko[j]
        diff = sa[i] - so[j]
        if diff > 0.0 and u > prev:
            acc += (u - prev) * int_x_over_q(kind, prm, 0.0, diff)
        prev = u
        while i < na and ka[i] <= u:
            i += 1
        while j < no and ko[j] <= u:
            j += 1
    return acc


@njit
def g_prefix(kind, prm, n):
    out = np.zeros(n + 1)
    for j in range(1, n + 1):
        out[j] = out[j - 1] + x_over_q(kind, prm, float(j))
    return out


@njit
def shadow_unweighted(rems, kind, prm):
    n = rems.shape[0]
    G = g_prefix(kind, prm, n)
    prev = 0.0
    acc = 0.0
    for i in range(n):
        if rems[i] > prev:
            acc += (rems[i] - prev) * G[n - i]
            prev = rems[i]
    return acc


@njit
def delta_unweighted(rems, p, kind, prm):
    n = rems.shape[0]
    prev = 0.0
    acc = 0.0
    for i in range(n):
        end = min(rems[i], p)
        if end > prev:
            acc += (end - prev) * x_over_q(kind, prm, float(n - i + 1))
            prev = end
        if rems[i] >= p:
            break
    if p > prev:
        acc += (p - prev) * x_over_q(kind, prm, 1.0)
    return acc


@njit
def potential_unweighted_raw(ra, ro, kind, prm):
    na = ra.shape[0]
    no = ro.shape[0]
    G = g_prefix(kind, prm, na)
    i = 0
    j = 0
    prev = 0.0
    acc = 0.0
    while i < na:
        u = ra[i]
        if j < no and ro[j] < u:
            u = ro[j]
        diff = (na - i) - (no - j)
        if diff > 0 and u > prev:
            acc += (u - prev) * G[diff]
        prev = u
        while i < na and ra[i] <= u:
            i += 1
        while j < no and ro[j] <= u:
            j += 1
    return acc


# --------------------------------------------------------------------------
# single-machine dynamics between events


@njit
def advance_weighted(key0, W, a, end_mass, kind, prm, speedup, horizon):
    """Run the head job (inverse density key0, mass a) with others of mass W.

    Returns (new mass, elapsed, accrued fractional flow, completed).  The
    accrued energy equals the accrued flow since power tracks the
    (unaugmented) fractional weight.
    """
    scale = key0 / speedup
    if a <= end_mass:
        return end_mass, 0.0, 0.0, True
    t_done = scale * int_inv_q(kind, prm, W, end_mass, a)
    if t_done <= horizon:
        flow = scale * int_x_over_q(kind, prm, W + end_mass, W + a)
        return end_mass, t_done, flow, True
    b = solve_mass(kind, prm, W, a, horizon / scale)
    if b < end_mass:
        b = end_mass
    flow = scale * int_x_over_q(kind, prm, W + b, W + a)
    return b, horizon, flow, False


@njit
def potential_weighted_offsets(ka, ma, ko, mo, kind, prm, sp_a, sp_o,
                               end_a, end_o, off_a, off_o):
    """Raw potential and total masses after drifting both sides by offsets."""
    K = off_a.shape[0]
    phi = np.empty(K)
    wa = np.empty(K)
    wo = np.empty(K)
    ma2 = ma.copy()
    mo2 = mo.copy()
    Wa = 0.0
    for i in range(1, ma.shape[0]):
        Wa += ma[i]
    Wo = 0.0
    for i in range(1, mo.shape[0]):
        Wo += mo[i]
    for k in range(K):
        if ma.shape[0] > 0:
            ma2[0] = advance_weighted(ka[0], Wa, ma[0], end_a, kind, prm, sp_a, off_a[k])[0]
        if mo.shape[0] > 0:
            mo2[0] = advance_weighted(ko[0], Wo, mo[0], end_o, kind, prm, sp_o, off_o[k])[0]
        phi[k] = potential_weighted_raw(ka, ma2, ko, mo2, kind, prm)
        wa[k] = ma2.sum()
        wo[k] = mo2.sum()
    return phi, wa, wo


@njit
def potential_unweighted_offsets(ra, ro, kind, prm, sp_a, sp_o, off_a, off_o):
    K = off_a.shape[0]
    phi = np.empty(K)
    ra2 = ra.copy()
    ro2 = ro.copy()
    va = sp_a * speed(kind, prm, float(ra.shape[0]))
    vo = sp_o * speed(kind, prm, float(ro.shape[0]))
    for k in range(K):
        if ra.shape[0] > 0:
            ra2[0] = max(ra[0] - va * off_a[k], 0.0)
        if ro.shape[0] > 0:
            ro2[0] = max(ro[0] - vo * off_o[k], 0.0)
        phi[k] = potential_unweighted_raw(ra2, ro2, kind, prm)
    return phi
