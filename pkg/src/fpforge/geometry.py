"""Quantitative geometry of uniformly convex norms.

Angles between nonzero vectors, lower bounds for the modulus of
convexity (exact Hilbert formula, Clarkson bound for p >= 2, Hanner
implicit solve for 1 < p < 2, user tables), the angle budget epsilon0,
cone openings, the strengthened triangle inequality, and the
angle-opposition certificate used by the Hammerstein solver.

Every shipped modulus is a lower bound for the true modulus of its
space, which keeps the strengthened triangle inequality valid and makes
the opposition check conservative: a PASS is trustworthy, a FAIL may be
a false alarm.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .engine import Certificate, FAIL, PASS, PASS_VACUOUS
from .errors import DegenerateAngle, FpforgeError, InvalidProblem, NoEpsilon0
from .space import GridFunction, node_norms, norm

_EPS_RANGE_SLACK = 1e-12


class ProfileKind(Enum):
    HILBERT = "hilbert"
    LP = "lp"
    LP_SMALL = "lp-small"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class ConvexityProfile:
    """Modulus-of-convexity model: closed form, implicit solve, or table."""

    kind: ProfileKind
    p: float = None
    delta_table: tuple = None  # ((eps, delta), ...) covering [0, 2]

    @staticmethod
    def hilbert():
        return ConvexityProfile(kind=ProfileKind.HILBERT)

    @staticmethod
    def lp(p):
        """Profile for an Lp-type norm; dispatches on the exponent."""
        if not p > 1:
            raise InvalidProblem(f"lp profile needs p > 1, got {p}")
        if p >= 2:
            return ConvexityProfile(kind=ProfileKind.LP, p=float(p))
        return ConvexityProfile(kind=ProfileKind.LP_SMALL, p=float(p))

    @staticmethod
    def from_table(pairs):
        """Empirical profile from (eps, delta) samples on [0, 2], linearly interpolated."""
        tab = tuple((float(e), float(d)) for e, d in pairs)
        if len(tab) < 2:
            raise InvalidProblem("delta table needs at least two rows")
        eps = [e for e, _ in tab]
        del_ = [d for _, d in tab]
        if eps[0] != 0.0 or del_[0] != 0.0:
            raise InvalidProblem("delta table must start at (0, 0)")
        if eps[-1] != 2.0:
            raise InvalidProblem("delta table must reach eps = 2")
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise InvalidProblem("table eps column must be strictly increasing")
        if any(b < a for a, b in zip(del_, del_[1:])):
            raise InvalidProblem("delta must be nondecreasing")
        if any(not (0.0 <= d <= 1.0) for d in del_):
            raise InvalidProblem("delta values must lie in [0, 1]")
        if any(d <= 0.0 for d in del_[1:]):
            raise InvalidProblem("uniform convexity needs delta(eps) > 0 for eps > 0")
        return ConvexityProfile(kind=ProfileKind.EMPIRICAL, delta_table=tab)


def _hanner_delta(p, eps):
    """Implicit Hanner relation for 1 < p < 2, solved for delta by bisection.

    delta(eps) solves (1 - d + eps/2)^p + |1 - d - eps/2|^p = 2; the left
    side is nonincreasing in d on [0, 1].
    """
    e = np.asarray(eps, dtype=float)
    lo = np.zeros_like(e)
    hi = np.ones_like(e)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        val = (1.0 - mid + e / 2.0) ** p + np.abs(1.0 - mid - e / 2.0) ** p
        high = val > 2.0
        lo = np.where(high, mid, lo)
        hi = np.where(high, hi, mid)
    return 0.5 * (lo + hi)


def _modulus_array(profile, eps):
    e = np.asarray(eps, dtype=float)
    if np.any((e < -_EPS_RANGE_SLACK) | (e > 2.0 + _EPS_RANGE_SLACK)):
        raise FpforgeError("modulus argument must lie in [0, 2]")
    e = np.clip(e, 0.0, 2.0)
    if profile.kind is ProfileKind.HILBERT:
        return 1.0 - np.sqrt(np.clip(1.0 - e * e / 4.0, 0.0, 1.0))
    if profile.kind is ProfileKind.LP:
        p = profile.p
        return 1.0 - (1.0 - (e / 2.0) ** p) ** (1.0 / p)
    if profile.kind is ProfileKind.LP_SMALL:
        return _hanner_delta(profile.p, e)
    tab = np.asarray(profile.delta_table, dtype=float)
    return np.interp(e, tab[:, 0], tab[:, 1])


def modulus(profile, eps):
    """Lower bound for the modulus of convexity delta(eps), eps in [0, 2]."""
    return float(_modulus_array(profile, eps))


def _worst_split(profile, e0, grid_n=10_001):
    """Minimum of delta(e1) + delta(e0 - e1) over admissible splits of e0."""
    lo = max(0.0, e0 - 2.0)
    hi = min(2.0, e0)
    e1 = np.linspace(lo, hi, grid_n)
    s = _modulus_array(profile, e1) + _modulus_array(profile, e0 - e1)
    i = int(np.argmin(s))
    best = float(s[i])
    # Local golden-section refinement around the grid argmin.
    a = e1[max(i - 1, 0)]
    b = e1[min(i + 1, grid_n - 1)]
    if b - a <= 1e-15:
        return best
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)

    def f(x):
        return modulus(profile, x) + modulus(profile, e0 - x)

    fc, fd = f(c), f(d)
    for _ in range(80):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return min(best, fc, fd)


@lru_cache(maxsize=128)
def epsilon0(profile, tol=1e-9):
    """Smallest angle budget e0 in (0, 4] whose every split (e1, e2) in
    [0, 2]^2 satisfies delta(e1) + delta(e2) >= 1/2.

    The worst-split value is nondecreasing in e0 (delta is nondecreasing),
    so bisection on the predicate is exact up to `tol`.
    """
    if _worst_split(profile, 4.0) < 0.5 - 1e-12:
        raise NoEpsilon0(
            "profile modulus never reaches 1/4 at eps = 2; no angle budget exists on (0, 4]"
        )
    lo, hi = 0.0, 4.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _worst_split(profile, mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    return hi


def _gnorm(x, spec):
    if isinstance(x, GridFunction):
        return norm(x, spec)
    v = np.asarray(x, dtype=float)
    return float(node_norms(v[None, :], spec.vector_p)[0])


def _as_pair(x, y):
    """Return (sub, scale) callables valid for both plain vectors and grid functions."""
    if isinstance(x, GridFunction):
        return (lambda u, v: u - v), (lambda a, u: a * u)
    return (lambda u, v: np.asarray(u, float) - np.asarray(v, float)), (
        lambda a, u: a * np.asarray(u, float)
    )


def angle(x, y, spec):
    """Angle alpha(x, y) = || x/||x|| - y/||y|| || in [0, 2]; needs nonzero arguments."""
    nx = _gnorm(x, spec)
    ny = _gnorm(y, spec)
    if nx == 0.0 or ny == 0.0:
        raise DegenerateAngle("angle is defined only for nonzero vectors")
    sub, scale = _as_pair(x, y)
    return _gnorm(sub(scale(1.0 / nx, x), scale(1.0 / ny, y)), spec)


def strong_triangle_bound(vs, spec, profile):
    """Evaluate both sides of the strengthened triangle inequality.

    Returns (bound, lhs) with lhs = ||sum v_i|| and
    bound = sum (1 - 2 delta(alpha_i)) ||v_i||, alpha_i = angle(v_i, sum).
    Callers assert lhs <= bound.
    """
    vs = list(vs)
    if not vs:
        raise FpforgeError("strong_triangle_bound needs at least one vector")
    total = vs[0]
    for v in vs[1:]:
        total = total + v
    lhs = _gnorm(total, spec)
    if lhs == 0.0:
        raise DegenerateAngle("sum of the vectors vanishes; angles to it are undefined")
    bound = 0.0
    for v in vs:
        nv = _gnorm(v, spec)
        if nv == 0.0:
            raise DegenerateAngle("strong_triangle_bound needs nonzero vectors")
        bound += (1.0 - 2.0 * modulus(profile, angle(v, total, spec))) * nv
    return bound, lhs


def cone_opening(xs, spec):
    """Largest pairwise angle over a finite sample (lower bound for the cone opening)."""
    xs = list(xs)
    if not xs:
        raise FpforgeError("cone_opening needs at least one vector")
    worst = 0.0
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            worst = max(worst, angle(xs[i], xs[j], spec))
    return worst


def check_opposition(au, bu, spec, profile):
    """Angle-opposition certificate: alpha(A, A+B) + alpha(B, A+B) >= epsilon0.

    Degenerate inputs (A, B, or A+B vanishing) are a PASS-VACUOUS verdict,
    not an error: with a constant forcing term the condition holds trivially.
    """
    na = _gnorm(au, spec)
    nb = _gnorm(bu, spec)
    if isinstance(au, GridFunction):
        total = au + bu
    else:
        total = np.asarray(au, float) + np.asarray(bu, float)
    ns = _gnorm(total, spec)
    tiny = 1e-14 * max(na, nb, 1.0)
    if na <= tiny or nb <= tiny or ns <= tiny:
        return Certificate(
            kind="opposition", verdict=PASS_VACUOUS, margin=0.0,
            witness={"norm_a": na, "norm_b": nb, "norm_sum": ns},
        )
    alpha_a = angle(au, total, spec)
    alpha_b = angle(bu, total, spec)
    budget = epsilon0(profile)
    margin = alpha_a + alpha_b - budget
    return Certificate(
        kind="opposition",
        verdict=PASS if margin >= 0 else FAIL,
        margin=margin,
        witness={"alpha_a": alpha_a, "alpha_b": alpha_b, "epsilon0": budget},
    )
