"""Power functions P, their inverses Q and the integrals built on x/Q(x).

Three families are supported, all in canonical form (P(0) = 0, continuous,
strictly increasing, convex, unbounded):

* ``poly``   -- ``P(s) = s**alpha`` with ``alpha > 1``;
* ``affine`` -- ``P(s) = c_1 s + c_2 s**2 + ...`` (convex, no constant term);
* ``table``  -- convex piecewise-linear interpolation through ``(speed, power)``
  breakpoints, extended past the last point with the last slope.

The axioms are checked by sampling when a function is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K


class DomainError(ValueError):
    """Argument outside the domain of a power-function primitive."""


class NonTerminatingSegment(ArithmeticError):
    """The time to drain a job diverges; use a positive completion threshold."""


_KINDS = {"poly": K.POLY, "affine": K.AFFINE, "table": K.TABLE}


@dataclass(frozen=True)
class PowerFunction:
    kind: str
    alpha: float | None = None
    coefficients: tuple[float, ...] = ()
    points: tuple[tuple[float, float], ...] = ()
    code: int = field(init=False, repr=False, compare=False)
    params: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown power-function kind {self.kind!r}")
        if self.kind == "poly":
            if self.alpha is None or not self.alpha > 1.0 or not math.isfinite(self.alpha):
                raise DomainError("polynomial power function needs alpha > 1")
            prm = np.array([float(self.alpha)])
        elif self.kind == "affine":
            prm = _pack_affine(self.coefficients)
        else:
            pts = _normalise_points(self.points)
            object.__setattr__(self, "points", pts)
            prm = _pack_table(pts)
        object.__setattr__(self, "code", _KINDS[self.kind])
        object.__setattr__(self, "params", prm)
        _check_axioms(self)

    # constructors -------------------------------------------------------

    @classmethod
    def polynomial(cls, alpha):
        return cls("poly", alpha=float(alpha))

    @classmethod
    def affine(cls, coefficients):
        return cls("affine", coefficients=tuple(float(c) for c in coefficients))

    @classmethod
    def table(cls, points):
        return cls("table", points=tuple((float(s), float(p)) for s, p in points))

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind")
        if kind == "poly":
            return cls.polynomial(d["alpha"])
        if kind == "affine":
            return cls.affine(d["coefficients"])
        if kind == "table":
            return cls.table(d["points"])
        raise DomainError(f"unknown power-function kind {kind!r}")

    def to_dict(self):
        if self.kind == "poly":
            return {"kind": "poly", "alpha": self.alpha}
        if self.kind == "affine":
            return {"kind": "affine", "coefficients": list(self.coefficients)}
        # the implicit origin is not written back
        return {"kind": "table", "points": [list(p) for p in self.points[1:]]}

    # conveniences --------------------------------------------------------

    def __call__(self, s):
        return eval_power(self, s)

    def inverse(self, y):
        return eval_speed(self, y)

    @property
    def slope_at_zero(self):
        return float(K.slope_at_zero(self.code, self.params))

    @property
    def drains_in_finite_time(self):
        """Whether a lone job on this processor finishes in finite time."""
        return self.slope_at_zero == 0.0


def _pack_affine(coefficients):
    c = [float(x) for x in coefficients]
    while c and c[-1] == 0.0:
        c.pop()
    if len(c) < 2 or c[-1] <= 0.0:
        raise DomainError("affine power function needs a positive coefficient of degree >= 2")
    if c[0] < 0.0:
        raise DomainError("affine power function must be increasing at 0")
    deg = len(c)
    # H(s) = sum_{k,l} l c_k c_l s^(k+l-1) / (k+l-1)
    h = [0.0] * (2 * deg - 1)
    for k in range(1, deg + 1):
        for l in range(1, deg + 1):
            n = k + l - 1
            h[n - 1] += l * c[k - 1] * c[l - 1] / n
    return np.array([float(deg)] + c + h)


def _normalise_points(points):
    pts = sorted((float(s), float(p)) for s, p in points)
    if not pts or pts[0] != (0.0, 0.0):
        pts.insert(0, (0.0, 0.0))
    if len(pts) < 2:
        raise DomainError("power table needs at least one breakpoint besides the origin")
    slopes = []
    for (s0, p0), (s1, p1) in zip(pts, pts[1:]):
        if not (s1 > s0 and p1 > p0):
            raise DomainError("power table must be strictly increasing in speed and power")
        slopes.append((p1 - p0) / (s1 - s0))
    for m0, m1 in zip(slopes, slopes[1:]):
        if m1 < m0 * (1.0 - 1e-12):
            raise DomainError("power table is not convex")
    return tuple(pts)


def _pack_table(pts):
    n = len(pts)
    s = np.array([p[0] for p in pts])
    p = np.array([p[1] for p in pts])
    m = np.empty(n)
    m[:-1] = np.diff(p) / np.diff(s)
    m[-1] = m[-2]
    H = np.zeros(n)
    L = np.zeros(n)
    L[0] = -np.inf
    if n > 1:
        H[1] = m[0] * m[0] * s[1]
        L[1] = m[0] * math.log(s[1])
    for k in range(1, n - 1):
        c = p[k] - m[k] * s[k]
        H[k + 1] = H[k] + m[k] * m[k] * (s[k + 1] - s[k]) + m[k] * c * math.log(s[k + 1] / s[k])
        L[k + 1] = L[k] + m[k] * math.log(s[k + 1] / s[k])
    return np.concatenate([[float(n)], s, p, m, H, L])


def _check_axioms(pf):
    top = 10.0
    if pf.kind == "table":
        top = max(10.0, 2.0 * pf.points[-1][0])
    grid = np.linspace(0.0, top, 257)
    vals = np.array([K.power(pf.code, pf.params, float(x)) for x in grid])
    if vals[0] != 0.0:
        raise DomainError("P(0) must be 0")
    if not np.all(np.diff(vals) > 0.0):
        raise DomainError("power function must be strictly increasing")
    mid = np.array([K.power(pf.code, pf.params, float(x)) for x in 0.5 * (grid[:-1] + grid[1:])])
    chord = 0.5 * (vals[:-1] + vals[1:])
    if np.any(mid > chord + 1e-9 * np.maximum(1.0, chord)):
        raise DomainError("power function must be convex")


# --------------------------------------------------------------------------
# public primitives


def eval_power(pf: PowerFunction, s: float) -> float:
    if s < 0:
        raise DomainError(f"speed must be non-negative, got {s}")
    return float(K.power(pf.code, pf.params, float(s)))


def eval_speed(pf: PowerFunction, y: float) -> float:
    if y < 0:
        raise DomainError(f"power must be non-negative, got {y}")
    return float(K.speed(pf.code, pf.params, float(y)))


def x_over_q(pf: PowerFunction, x: float) -> float:
    """x/Q(x), extended to x = 0 by continuity (0 for polynomial kinds)."""
    if x < 0:
        raise DomainError(f"power must be non-negative, got {x}")
    return float(K.x_over_q(pf.code, pf.params, float(x)))


def integral_x_over_q(pf: PowerFunction, a: float, b: float, method: str = "exact") -> float:
    """Integral of x/Q(x) over [a, b].

    ``method="exact"`` uses closed-form antiderivatives (in the speed
    variable for non-polynomial kinds); ``method="quadrature"`` integrates
    x/Q(x) directly with adaptive Simpson.
    """
    if a < 0 or b < a:
        raise DomainError(f"need 0 <= a <= b, got a={a}, b={b}")
    if method == "exact":
        return float(K.int_x_over_q(pf.code, pf.params, float(a), float(b)))
    if method == "quadrature":
        return adaptive_simpson(lambda x: x_over_q(pf, x), a, b, breaks=_power_breaks(pf))
    raise ValueError(f"unknown method {method!r}")


def integral_inv_q_shift(pf: PowerFunction, W: float, a: float, b: float,
                         method: str = "exact") -> float:
    """Integral of 1/Q(W + w) for w in [a, b].

    This is the time (per unit inverse density, at unit speedup) needed to
    bring a job's fractional weight from ``b`` down to ``a`` while other
    queued jobs hold weight ``W``.  Raises :class:`NonTerminatingSegment`
    when the integral diverges at ``W + a = 0``.
    """
    if a < 0 or b < a or W < 0:
        raise DomainError(f"need W >= 0 and 0 <= a <= b, got W={W}, a={a}, b={b}")
    if b == a:
        return 0.0
    if W + a == 0.0 and not pf.drains_in_finite_time:
        raise NonTerminatingSegment(
            "time to drain diverges at zero weight; run with a positive completion_threshold")
    if method == "exact":
        return float(K.int_inv_q(pf.code, pf.params, float(W), float(a), float(b)))
    if method == "quadrature":
        # w = a + u**m flattens the integrable endpoint singularity at W + a = 0
        m = 3.0
        if pf.kind == "poly":
            m = max(m, math.ceil(pf.alpha / (pf.alpha - 1.0)) + 1.0)

        def f(u):
            if u == 0.0:
                return 0.0
            return m * u ** (m - 1.0) / eval_speed(pf, W + a + u ** m)

        breaks = [(x - W - a) ** (1.0 / m) for x in _power_breaks(pf) if x > W + a]
        return adaptive_simpson(f, 0.0, (b - a) ** (1.0 / m), breaks=breaks)
    raise ValueError(f"unknown method {method!r}")


def _power_breaks(pf):
    if pf.kind == "table":
        return [p for _, p in pf.points[1:]]
    return []


def adaptive_simpson(f, a, b, rel_tol=1e-8, abs_tol=1e-12, max_depth=50, breaks=(), min_depth=5):
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]``.

    ``breaks`` are points where ``f`` may have a kink; the interval is split
    there first.  Every piece is bisected at least ``min_depth`` times so a
    lucky coarse error estimate cannot end the refinement early.
    """
    if b <= a:
        return 0.0
    cuts = [a] + sorted(x for x in breaks if a < x < b) + [b]
    pieces = []
    for lo, hi in zip(cuts, cuts[1:]):
        flo, fmid, fhi = f(lo), f(0.5 * (lo + hi)), f(hi)
        pieces.append((lo, hi, flo, fmid, fhi, (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)))
    rough = abs(sum(p[-1] for p in pieces))
    tol = max(rel_tol * rough, abs_tol)
    total = 0.0
    for lo, hi, flo, fmid, fhi, whole in pieces:
        share = tol * (hi - lo) / (b - a)
        total += _simpson_piece(f, lo, hi, flo, fmid, fhi, whole, share, max_depth,
                                max_depth - min_depth)
    return total


def _simpson_piece(f, lo, hi, flo, fmid, fhi, whole, tol, depth, accept_below):
    stack = [(lo, hi, flo, fmid, fhi, whole, tol, depth)]
    total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, whole, tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl = f(0.5 * (lo + mid))
        fr = f(0.5 * (mid + hi))
        left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi)
        err = left + right - whole
        if depth <= 0 or (depth <= accept_below and abs(err) <= 15.0 * tol):
            total += left + right + err / 15.0
        else:
            stack.append((lo, mid, flo, fl, fmid, left, 0.5 * tol, depth - 1))
            stack.append((mid, hi, fmid, fr, fhi, right, 0.5 * tol, depth - 1))
    return total
