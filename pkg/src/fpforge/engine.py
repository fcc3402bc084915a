"""Hybrid fixed-point engine for operator sums u = A(u) + B(u).

The inner resolvent inverts (I - B) by Banach iteration when B is a
strict contraction; the outer loop is plain Picard on the composed map
(I - B)^{-1} o A.  A continuation driver handles nonexpansive B by
stepping a relaxation parameter up to 1, and a family of radius
certificates turns the a-priori ball hypotheses of the scheme into
machine-checked verdicts.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContinuationStalled, FpforgeError, NoConvergence, NotAContraction
from .seeding import substream
from .space import GridFunction, axpy, norm, zeros

PASS = "PASS"
FAIL = "FAIL"
PASS_VACUOUS = "PASS-VACUOUS"

# Absolute fuzz used when comparing norms that are equal in exact arithmetic.
_FLOAT_SLACK = 1e-12


@dataclass
class OperatorPair:
    """Evaluators for A and B plus the declared Lipschitz factor of B.

    Evaluators must be pure: same input grid function, same output.
    `b_lip` is the Lipschitz constant of B under the solve's norm;
    the resolvent requires b_lip < 1.
    """

    a: callable
    b: callable
    b_lip: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.b_lip) and self.b_lip >= 0):
            raise NotAContraction(f"b_lip must be a finite nonnegative real, got {self.b_lip}")


@dataclass
class IterationReport:
    converged: bool
    iterations: int
    residual_history: list
    inner_iterations: int
    membership_violations: int
    final: GridFunction
    extras: dict = field(default_factory=dict)


@dataclass
class Certificate:
    """Outcome of a hypothesis check: verdict plus margin, radius, witness."""

    kind: str
    verdict: str
    margin: float
    radius: float = None
    witness: dict = None

    @property
    def passed(self):
        return self.verdict in (PASS, PASS_VACUOUS)


def _resolve(b, b_lip, w, spec, tol, max_iter, allow_nonexpansive=False):
    """Solve u = B(u) + w; returns (u, iterations).

    Contractive route: Banach iteration from u0 = w, with the geometric
    error bound checked against the declared b_lip at every step.
    Nonexpansive route (b_lip ~ 1, continuation end stage only): averaged
    iteration u <- (u + B(u) + w)/2 on a fixed budget, no rate guarantee.
    """
    if tol <= 0:
        raise FpforgeError(f"tol must be positive, got {tol}")
    averaged = b_lip >= 1.0
    if averaged and not allow_nonexpansive:
        raise NotAContraction(f"resolvent needs b_lip < 1, got {b_lip}")
    u = w
    d1 = None
    r = math.inf
    for k in range(1, max_iter + 1):
        v = b(u) + w
        r = norm(u - v, spec)
        if d1 is None:
            d1 = r
        if not averaged:
            # Geometric a-priori bound: step k-1 defect <= b^(k-1)/(1-b) * d1.
            # Fuzz scales with d1 so cancellation noise on large data does
            # not masquerade as a rate violation.
            bound = (b_lip ** (k - 1)) / (1.0 - b_lip) * d1 + _FLOAT_SLACK * (1.0 + d1)
            if r > bound:
                raise NotAContraction(
                    f"observed defect {r:.3e} at inner step {k} exceeds the geometric "
                    f"bound {bound:.3e}; declared b_lip={b_lip} is not a valid Lipschitz factor"
                )
        if r <= tol:
            return (u if averaged else v), k
        u = axpy(0.5, u, 0.5 * v) if averaged else v
    raise NoConvergence(
        f"inner resolvent did not reach tol={tol} in {max_iter} iterations", residual=r
    )


def resolve_contraction(b, b_lip, w, spec, tol, max_iter=100_000):
    """Unique solution of u = B(u) + w for a b_lip-contraction B (b_lip < 1)."""
    u, _ = _resolve(b, b_lip, w, spec, tol, max_iter)
    return u


def krasnoselskii_solve(
    pair,
    u0,
    spec,
    tol=1e-8,
    max_outer=200,
    membership=None,
    monitor=None,
    max_inner=100_000,
    _allow_nonexpansive=False,
):
    """Picard iteration on T = (I - B)^{-1} o A until ||u - A(u) - B(u)|| <= tol.

    `membership`, when given, realizes the invariant-set hypothesis as a
    runtime monitor: iterates failing the predicate are counted, not fatal.
    `monitor(k, u, au, bu)` is called once per outer iterate for callers
    that track extra per-iterate diagnostics.
    """
    u = u0
    residuals = []
    inner_total = 0
    violations = 0
    inner_tol = tol / 10.0
    for k in range(max_outer + 1):
        au = pair.a(u)
        bu = pair.b(u)
        resid = norm(u - au - bu, spec)
        residuals.append(resid)
        if membership is not None and not membership(u):
            violations += 1
        if monitor is not None:
            monitor(k, u, au, bu)
        if resid <= tol:
            return IterationReport(
                converged=True,
                iterations=k,
                residual_history=residuals,
                inner_iterations=inner_total,
                membership_violations=violations,
                final=u,
            )
        if k == max_outer:
            break
        u, inner_k = _resolve(
            pair.b, pair.b_lip, au, spec, inner_tol, max_inner,
            allow_nonexpansive=_allow_nonexpansive,
        )
        inner_total += inner_k
    report = IterationReport(
        converged=False,
        iterations=max_outer,
        residual_history=residuals,
        inner_iterations=inner_total,
        membership_violations=violations,
        final=u,
    )
    raise NoConvergence(
        f"outer iteration did not reach tol={tol} in {max_outer} steps "
        f"(last residual {residuals[-1]:.3e})",
        residual=residuals[-1],
        report=report,
    )


def continuation_solve(pair, lambdas, u0, spec, tol=1e-8, max_outer=200, membership=None, monitor=None):
    """Solve u = lambda_n B(u) + A(u) along a ladder of lambdas ending at 1.

    Each stage is warm-started from the previous solution.  Stages with
    lambda * b_lip < 1 use the contractive resolvent; a final stage at
    the nonexpansive boundary (lambda * b_lip = 1) is attempted with the
    averaged resolvent on a fixed budget and reported honestly.
    """
    lams = [float(l) for l in lambdas]
    if not lams or lams[-1] != 1.0:
        raise FpforgeError("lambda ladder must be nonempty and end at 1")
    if any(not (0 < l <= 1) for l in lams) or any(b > a for a, b in zip(lams[1:], lams[:-1])):
        raise FpforgeError("lambda ladder must be nondecreasing within (0, 1]")
    if pair.b_lip > 1:
        raise NotAContraction(f"continuation needs b_lip <= 1, got {pair.b_lip}")

    u = u0
    stages = []
    report = None
    for lam in lams:
        b_eff = lam * pair.b_lip
        stage_pair = OperatorPair(
            a=pair.a, b=(lambda v, _l=lam: _l * pair.b(v)), b_lip=b_eff, metadata=pair.metadata
        )
        try:
            report = krasnoselskii_solve(
                stage_pair, u, spec, tol=tol, max_outer=max_outer,
                membership=membership, monitor=monitor,
                _allow_nonexpansive=b_eff >= 1.0,
            )
        except (NoConvergence, NotAContraction) as exc:
            raise ContinuationStalled(
                f"continuation stalled at lambda={lam}: {exc}",
                stage_lambda=lam,
                completed=stages,
                cause=exc,
            ) from exc
        u = report.final
        stages.append(
            {"lambda": lam, "iterations": report.iterations,
             "residual": report.residual_history[-1], "inner": report.inner_iterations}
        )
    report.extras["stages"] = stages
    report.inner_iterations = sum(s["inner"] for s in stages)
    return report


def reduce_parameter(pair, lam):
    """Rewrite u = A(u) + lam*B(u) as an equivalent contractive pair.

    Returns (cal_A, cal_B) with cal_A(u) = (A(u) + lam*b_lip*u)/(1 + lam*b_lip)
    and cal_B(u) = lam*B(u)/(1 + lam*b_lip); the new Lipschitz factor is
    lam*b_lip/(1 + lam*b_lip) < 1, and fixed points coincide nodewise.
    """
    if lam < 0:
        raise FpforgeError(f"lambda must be nonnegative, got {lam}")
    if lam == 0:
        return OperatorPair(a=pair.a, b=lambda u: 0.0 * u, b_lip=0.0, metadata=pair.metadata)
    c = lam * pair.b_lip
    scale = 1.0 / (1.0 + c)

    def cal_a(u):
        return axpy(c * scale, u, scale * pair.a(u))

    def cal_b(u):
        return (lam * scale) * pair.b(u)

    return OperatorPair(a=cal_a, b=cal_b, b_lip=c * scale, metadata=pair.metadata)


def _golden_max(f, lo, hi, iters=200, tol=1e-13):
    """Golden-section maximization of a unimodal f on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a <= tol * (1.0 + abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    xs = [(fc, c), (fd, d)]
    return max(xs)[1]


def radius_mu_star(p, q, a, b, lam_b, bracket=(1e-6, 1e8)):
    """Best coefficient mu* with mu*R^p + a R^q + lam_b R + b <= R for some R.

    Maximizes mu(R) = (R(1 - lam_b) - a R^q - b)/R^p over a log-spaced
    bracket (golden-section refinement around the grid argmax).  PASS
    records the maximizing R and mu* = margin > 0; FAIL reports the best
    numerator seen on the bracket.
    """
    if not (p > 1 and 0 < q < 1 and a >= 0 and b >= 0 and 0 <= lam_b < 1):
        raise FpforgeError("radius_mu_star needs p > 1, q in (0,1), a,b >= 0, lam_b in [0,1)")
    lo, hi = bracket
    if not (0 < lo <= hi):
        raise FpforgeError(f"invalid bracket {bracket}")

    def numerator(R):
        return R * (1.0 - lam_b) - a * R**q - b

    def mu(R):
        return numerator(R) / R**p

    if lo == hi:
        R = lo
        m = mu(R)
        verdict = PASS if numerator(R) > 0 else FAIL
        return Certificate(
            kind="mu-star", verdict=verdict,
            margin=m if verdict == PASS else numerator(R),
            radius=R, witness={"R": R, "mu_star": m},
        )

    grid = np.exp(np.linspace(math.log(lo), math.log(hi), 4000))
    nums = numerator(grid)
    if nums.max() <= 0:
        return Certificate(kind="mu-star", verdict=FAIL, margin=float(nums.max()), radius=None,
                           witness={"bracket": list(bracket)})
    mus = nums / grid**p
    i = int(np.argmax(mus))
    xlo = math.log(grid[max(i - 1, 0)])
    xhi = math.log(grid[min(i + 1, len(grid) - 1)])
    xbest = _golden_max(lambda x: mu(math.exp(x)), xlo, xhi)
    R = math.exp(xbest)
    m = mu(R)
    return Certificate(kind="mu-star", verdict=PASS, margin=m, radius=R,
                       witness={"R": R, "mu_star": m})


def radius_power(a, p):
    """Ball radius for a power-bounded operator ||A(u)|| <= a ||u||^p, p > 1.

    The map r -> r - a r^p peaks at r* = (1/(a p))^(1/(p-1)); any shift h
    with ||h|| <= R = r* - a r*^p keeps the ball of radius r* invariant.
    """
    if not (a > 0 and p > 1):
        raise FpforgeError("radius_power needs a > 0 and p > 1")
    r_star = (1.0 / (a * p)) ** (1.0 / (p - 1.0))
    radius = r_star - a * r_star**p
    return Certificate(kind="power", verdict=PASS, margin=radius, radius=radius,
                       witness={"r_star": r_star})


def radius_poly_growth(c, t_end, r, f0_norm):
    """Radius R > f0_norm with C(T^r + 1) = (R - f0_norm)/(R^r + 1).

    The right side vanishes at R = f0_norm and is continuous; a root is
    located by bisection between log-grid brackets.  When the left side
    exceeds the supremum of the right side no radius exists: FAIL with
    that supremum as the margin.
    """
    if not (c > 0 and t_end > 0 and r >= 0 and f0_norm >= 0):
        raise FpforgeError("radius_poly_growth needs c, t_end > 0 and r, f0_norm >= 0")
    lhs = c * (t_end**r + 1.0)

    def rhs(R):
        return (R - f0_norm) / (R**r + 1.0)

    grid = f0_norm + np.exp(np.linspace(math.log(1e-9), math.log(1e12), 8000))
    vals = rhs(grid)
    i = int(np.argmax(vals))
    xlo = math.log(grid[max(i - 1, 0)] - f0_norm)
    xhi = math.log(grid[min(i + 1, len(grid) - 1)] - f0_norm)
    xsup = _golden_max(lambda x: rhs(f0_norm + math.exp(x)), xlo, xhi)
    sup_rhs = max(float(vals.max()), rhs(f0_norm + math.exp(xsup)))

    crossing = np.nonzero(vals >= lhs)[0]
    if len(crossing) == 0:
        return Certificate(kind="c6", verdict=FAIL, margin=sup_rhs, radius=None,
                           witness={"lhs": lhs, "sup_rhs": sup_rhs})
    j = int(crossing[0])
    lo = f0_norm if j == 0 else grid[j - 1]
    hi = grid[j]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rhs(mid) >= lhs:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * (1.0 + hi):
            break
    R = 0.5 * (lo + hi)
    return Certificate(kind="c6", verdict=PASS, margin=sup_rhs - lhs, radius=R,
                       witness={"lhs": lhs, "sup_rhs": sup_rhs})


def check_expanding(b, spec, samples, lambda_grid, grid=None, dim=1, seed=0):
    """Monte-Carlo falsification of ||u|| <= ||u - lam*B(u)|| for all lam > 0.

    A FAIL carries a concrete witness; a PASS is sampled evidence, not a
    proof, and records the smallest margin observed.
    """
    if samples < 1:
        raise FpforgeError("samples must be >= 1")
    if grid is None:
        from .space import Grid

        grid = Grid(t_end=1.0, n_steps=4)
    rng = substream(seed, "engine", "expanding")
    best = math.inf
    for i in range(samples):
        scale = 10.0 ** rng.uniform(-2, 2)
        u = GridFunction(grid, scale * rng.standard_normal((grid.n_steps + 1, dim)))
        nu = norm(u, spec)
        for lam in lambda_grid:
            margin = norm(axpy(-float(lam), b(u), u), spec) - nu
            if margin < best:
                best = margin
            if margin < -_FLOAT_SLACK:
                witness = {"lambda": float(lam), "sample": i, "norm_u": nu}
                if u.values.size <= 64:
                    witness["u"] = u.values.tolist()
                return Certificate(kind="expanding", verdict=FAIL, margin=margin, witness=witness)
    return Certificate(kind="expanding", verdict=PASS, margin=max(best, 0.0),
                       witness={"samples": samples, "evidence": "sampled, not a proof"})


def zero_function_like(u0):
    """Zero grid function on the same grid/dimension (default outer start)."""
    return zeros(u0.grid, u0.dim)
