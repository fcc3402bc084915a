"""Volterra and Hammerstein integral equations on a time grid.

Volterra: u(t) = f(u(t)) + integral_0^t g(s, u(s)) ds, solved inside the
a-priori tube ||u(t)|| <= b(t) obtained by inverting the growth integral
J(z) = integral_{||f(0)||}^z dx / phi(x) along the running mass of alpha.

Hammerstein: u(t) = f(t, u(t)) + Phi(t, integral_0^t k(t,s) u(s) ds) in an
Lp time norm, guarded by an invariant-ball certificate and per-iterate
angle-opposition monitoring.

All evaluators are vectorized over nodes: f(values), g(t, values),
f(t, values), Phi(t, values) map (n+1, d) arrays to (n+1, d) arrays;
alpha(t), G(t), psi(x) map arrays to arrays; k(T, S) acts on meshgrids.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    Certificate,
    FAIL,
    OperatorPair,
    PASS,
    PASS_VACUOUS,
    continuation_solve,
    krasnoselskii_solve,
)
from .errors import (
    BlowupBeforeT,
    CertificateRequired,
    GridMismatch,
    InvalidProblem,
    InvariantBallViolated,
)
from .geometry import ConvexityProfile, check_opposition
from .space import Grid, GridFunction, SpaceSpec, TimeNorm, cumulative_integral, node_norms, norm, zeros

_J_CAP = 1e12


@dataclass
class VolterraProblem:
    """Data for u = f(u) + integral_0^t g(s, u) ds with growth bound
    ||g(s, x)|| <= alpha(s) * phi(||x||).

    `lam` is the Lipschitz constant of f (must be < 1); `phi` must be
    positive and nondecreasing on the range it is evaluated on.
    """

    f: callable
    g: callable
    alpha: callable
    phi: callable
    grid: Grid
    dim: int
    lam: float
    vector_p: float = 2.0

    def __post_init__(self):
        if not (0.0 <= self.lam < 1.0):
            raise InvalidProblem(f"f must be a strict contraction: lam = {self.lam}")
        if self.dim < 1:
            raise InvalidProblem("dim must be >= 1")


def _f_at_zero(prob):
    row = np.asarray(prob.f(np.zeros((1, prob.dim))), dtype=float)
    return row.reshape(-1)


def _z_nodes(z0, z1, n):
    # Wide multiplicative ranges need geometrically growing cells, or the
    # trapezoid rule cannot resolve integrands that decay away from z0.
    span = z1 - z0
    if span <= 100.0 * max(1.0, abs(z0)):
        return np.linspace(z0, z1, n + 1)
    offsets = np.geomspace(span * 1e-15, span, n)
    return np.concatenate([[z0], z0 + offsets])


def _growth_table(phi, z0, z1):
    """Cumulative trapezoid table of J(z) = integral_{z0}^z dx/phi(x) on [z0, z1].

    The node count doubles until the total integral is converged to 1e-13
    relative (adaptive trapezoid); phi must be positive on [z0, z1].
    """
    n = 1 << 14
    prev_total = None
    while True:
        z = _z_nodes(z0, z1, n)
        ph = np.asarray(phi(z), dtype=float)
        if not np.all(np.isfinite(ph)) or np.any(ph <= 0):
            raise InvalidProblem(
                f"phi must be positive and finite on [{z0}, {z1}]; the growth bound is undefined"
            )
        integrand = 1.0 / ph
        table = np.concatenate(
            [[0.0], np.cumsum(0.5 * np.diff(z) * (integrand[:-1] + integrand[1:]))]
        )
        total = table[-1]
        if prev_total is not None and abs(total - prev_total) <= 1e-13 * max(1.0, abs(total)):
            return z, table
        if n >= 1 << 21:
            return z, table
        prev_total = total
        n *= 2


def _invert_growth(phi, zgrid, jtable, targets):
    """Monotone inversion of the J table: b with J(b) = target, per target.

    Brackets each target inside a table cell, then bisects the local
    trapezoid increment; vectorized over all targets.
    """
    t = np.asarray(targets, dtype=float)
    j = np.clip(np.searchsorted(jtable, t, side="right") - 1, 0, len(zgrid) - 2)
    lo = zgrid[j]
    hi = zgrid[j + 1]
    resid = t - jtable[j]
    inv_lo = 1.0 / np.asarray(phi(lo), dtype=float)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        val = (mid - zgrid[j]) * 0.5 * (inv_lo + 1.0 / np.asarray(phi(mid), dtype=float))
        go_up = val < resid
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
    return 0.5 * (lo + hi)


def bound_b(prob):
    """A-priori tube radius b(t) = J^{-1}(integral_0^t alpha) as a scalar grid function.

    b(0) = ||f(0)|| and b is nondecreasing.  If the growth integral cannot
    dominate the alpha mass before t_end (Osgood condition fails at grid
    scale), raises BlowupBeforeT naming the first unreachable node.
    """
    grid = prob.grid
    f0n = float(node_norms(_f_at_zero(prob)[None, :], prob.vector_p)[0])
    av = np.asarray(prob.alpha(grid.nodes), dtype=float)
    if av.shape != grid.nodes.shape or not np.all(np.isfinite(av)) or np.any(av < 0):
        raise InvalidProblem("alpha must be finite and nonnegative on the grid")
    mass = np.concatenate([[0.0], np.cumsum(0.5 * grid.h * (av[:-1] + av[1:]))])
    if mass[-1] == 0.0:
        return GridFunction(grid, np.full((grid.n_steps + 1, 1), f0n))

    z1 = max(2.0 * f0n, f0n + 1.0)
    while True:
        zgrid, jtable = _growth_table(prob.phi, f0n, z1)
        if jtable[-1] > mass[-1]:
            break
        if z1 >= _J_CAP:
            bad = int(np.argmax(mass > jtable[-1]))
            raise BlowupBeforeT(
                f"growth bound blows up before t_end: node {bad} (t = {grid.nodes[bad]:.6g}) "
                f"needs J beyond the cap {_J_CAP:.0e}",
                node_index=bad,
                node_time=float(grid.nodes[bad]),
            )
        z1 = min(_J_CAP, f0n + 2.0 * (z1 - f0n))
    b_vals = _invert_growth(prob.phi, zgrid, jtable, mass)
    return GridFunction(grid, b_vals[:, None])


def volterra_A(prob, u):
    """A(u)(t) = f(0) + running integral of s -> g(s, u(s))."""
    if u.grid != prob.grid or u.dim != prob.dim:
        raise GridMismatch("grid function does not match the problem grid")
    gv = np.asarray(prob.g(prob.grid.nodes, u.values), dtype=float)
    integ = cumulative_integral(GridFunction(prob.grid, gv))
    return GridFunction(prob.grid, integ.values + _f_at_zero(prob)[None, :])


def solve_volterra(prob, tol=1e-8, max_outer=200):
    """Hybrid solve of the Volterra equation with tube membership monitoring.

    B(u)(t) = f(u(t)) - f(0) is the contraction part (factor lam); the
    report records how many iterates left the tube and how tightly the
    final solution fills it.
    """
    b = bound_b(prob)
    btube = b.values[:, 0]
    spec = SpaceSpec(TimeNorm.SUP, vector_p=prob.vector_p)
    f0 = _f_at_zero(prob)

    def a_op(u):
        return volterra_A(prob, u)

    def b_op(u):
        return GridFunction(prob.grid, np.asarray(prob.f(u.values), dtype=float) - f0[None, :])

    flags = []

    def member(u):
        vn = node_norms(u.values, prob.vector_p)
        # Relative fuzz absorbs round-off on the tube boundary.
        ok = bool(np.all(vn <= btube * (1.0 + 1e-10) + 1e-12))
        flags.append(ok)
        return ok

    pair = OperatorPair(a=a_op, b=b_op, b_lip=prob.lam)
    report = krasnoselskii_solve(
        pair, zeros(prob.grid, prob.dim), spec, tol=tol, max_outer=max_outer, membership=member
    )
    vn = node_norms(report.final.values, prob.vector_p)
    slack = float(np.min(btube - vn))
    report.extras["bound"] = b
    report.extras["membership_flags"] = flags
    report.extras["bound_tightness"] = float(np.max(vn / np.maximum(btube, 1e-300)))
    report.extras["tube_certificate"] = Certificate(
        kind="tube-bound",
        verdict=PASS if slack >= -1e-10 * (1.0 + float(btube.max())) else FAIL,
        margin=slack,
        radius=float(btube[-1]),
        witness={"tightness": report.extras["bound_tightness"]},
    )
    return report


@dataclass
class HammersteinProblem:
    """Data for u(t) = f(t, u(t)) + Phi(t, integral_0^t k(t,s) u(s) ds) in Lp.

    `f_lip` bounds ||f(t,x) - f(t,y)|| <= f_lip ||x - y|| and must be <= 1;
    `g_growth` (G) and `psi` majorize Phi: ||Phi(t, v)|| <= G(t) psi(||v||)
    with psi nondecreasing.
    """

    f: callable
    f_lip: float
    k: callable
    phi_op: callable
    g_growth: callable
    psi: callable
    p: float
    grid: Grid
    dim: int
    vector_p: float = 2.0
    _kmat: np.ndarray = field(init=False, repr=False, default=None)
    _kvals: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if not (1.0 < self.p < math.inf):
            raise InvalidProblem(f"p must lie in (1, inf), got {self.p}")
        if not (0.0 <= self.f_lip <= 1.0):
            raise InvalidProblem(f"f_lip must lie in [0, 1], got {self.f_lip}")
        if self.dim < 1:
            raise InvalidProblem("dim must be >= 1")

    def space(self):
        return SpaceSpec(TimeNorm.LP, vector_p=self.vector_p, lp_exponent=self.p)


def _kernel_values(prob):
    if prob._kvals is None:
        t = prob.grid.nodes
        tt, ss = np.meshgrid(t, t, indexing="ij")
        kv = np.asarray(prob.k(tt, ss), dtype=float)
        if kv.shape != tt.shape:
            raise InvalidProblem("kernel evaluator must preserve the meshgrid shape")
        prob._kvals = kv
    return prob._kvals


def _kernel_matrix(prob):
    if prob._kmat is None:
        n = prob.grid.n_steps
        h = prob.grid.h
        w = np.tril(np.full((n + 1, n + 1), h))
        w[:, 0] = h / 2.0
        np.fill_diagonal(w, h / 2.0)
        w[0, :] = 0.0
        prob._kmat = _kernel_values(prob) * w
    return prob._kmat


def kernel_apply(prob, u):
    """K(u)(t_i): trapezoid quadrature of s -> k(t_i, s) u(s) over [0, t_i]."""
    if u.grid != prob.grid or u.dim != prob.dim:
        raise GridMismatch("grid function does not match the problem grid")
    return GridFunction(prob.grid, _kernel_matrix(prob) @ u.values)


def kernel_bound(prob):
    """Discrete C = max_i || k(t_i, .) ||_q over the triangular kernel, q = p/(p-1).

    With the shared trapezoid weights, Hoelder gives the exact discrete
    estimate ||K(u)||_sup <= C ||u||_Lp.
    """
    q = prob.p / (prob.p - 1.0)
    kv = np.abs(np.tril(_kernel_values(prob)))
    w = prob.grid.trapezoid_weights
    return float(np.max((kv**q @ w) ** (1.0 / q)))


def _f_zero_curve(prob):
    t = prob.grid.nodes
    vals = np.asarray(prob.f(t, np.zeros((len(t), prob.dim))), dtype=float)
    return GridFunction(prob.grid, vals)


def hammerstein_A(prob, u):
    """A(u)(t) = f(t, 0) + Phi(t, K(u)(t))."""
    kv = kernel_apply(prob, u)
    phi_vals = np.asarray(prob.phi_op(prob.grid.nodes, kv.values), dtype=float)
    return GridFunction(prob.grid, _f_zero_curve(prob).values + phi_vals)


def hammerstein_B(prob, u):
    """B(u)(t) = f(t, u(t)) - f(t, 0)."""
    fu = np.asarray(prob.f(prob.grid.nodes, u.values), dtype=float)
    return GridFunction(prob.grid, fu - _f_zero_curve(prob).values)


def invariant_ball_certificate(prob):
    """Smallest ball radius R with ||G||_p psi(C R) / (R - ||f(.,0)||_p) <= 1.

    Scans a log grid of radii and bisects the first feasible bracket.
    PASS radius is the smallest certified R; FAIL margin is the smallest
    ratio observed (> 1 means no ball of the scanned sizes is invariant).
    """
    spec = prob.space()
    f0p = norm(_f_zero_curve(prob), spec)
    w = prob.grid.trapezoid_weights
    gv = np.asarray(prob.g_growth(prob.grid.nodes), dtype=float)
    if np.any(gv < 0) or not np.all(np.isfinite(gv)):
        raise InvalidProblem("growth majorant G must be finite and nonnegative")
    gp = float((w @ gv**prob.p) ** (1.0 / prob.p))
    c_bound = kernel_bound(prob)

    def ratio(r):
        return gp * float(np.asarray(prob.psi(np.asarray([c_bound * r])), dtype=float)[0]) / (r - f0p)

    r_lo = max(f0p * (1.0 + 1e-6), 1e-9)
    radii = np.exp(np.linspace(math.log(r_lo), math.log(1e6), 4000))
    psis = np.asarray(prob.psi(c_bound * radii), dtype=float)
    vals = gp * psis / (radii - f0p)
    witness = {"C": c_bound, "f0_norm_p": f0p, "G_norm_p": gp}
    feasible = np.nonzero(vals <= 1.0)[0]
    if len(feasible) == 0:
        i = int(np.argmin(vals))
        best = float(vals[i])
        lo = radii[max(i - 1, 0)]
        hi = radii[min(i + 1, len(radii) - 1)]
        for _ in range(120):  # golden-free ternary polish of the minimum
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if ratio(m1) <= ratio(m2):
                hi = m2
            else:
                lo = m1
        best = min(best, ratio(0.5 * (lo + hi)))
        return Certificate(kind="invariant-ball", verdict=FAIL, margin=best, witness=witness)
    j = int(feasible[0])
    if j == 0:
        rbar = r_lo
    else:
        lo, hi = radii[j - 1], radii[j]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if ratio(mid) <= 1.0:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-13 * hi:
                break
        rbar = hi
    return Certificate(
        kind="invariant-ball", verdict=PASS, margin=max(0.0, 1.0 - ratio(rbar)),
        radius=float(rbar), witness=witness,
    )


_CONTINUATION_LADDER = (0.5, 0.9, 0.99, 1.0)


def solve_hammerstein(prob, profile=None, tol=1e-8, max_outer=200, override=False, u0=None):
    """Solve the Hammerstein equation under the invariant-ball certificate.

    The certificate must PASS (or `override` be set).  Every iterate is
    monitored: Lp norm against the certified radius, angle opposition of
    A(u) and B(u), and, when the opposition check passes non-vacuously,
    the resulting ball contraction of A + B.  Monitor outcomes are
    warnings in the report; only a material final-ball violation raises.
    """
    cert = invariant_ball_certificate(prob)
    if cert.verdict == FAIL and not override:
        raise CertificateRequired(
            f"invariant-ball certificate failed (best ratio {cert.margin:.6g}); "
            "pass override to solve anyway",
            certificate=cert,
        )
    rbar = cert.radius if cert.verdict == PASS else None
    spec = prob.space()
    if profile is None:
        profile = ConvexityProfile.lp(prob.p)

    a5_margins = []
    ball_flags = []
    contraction_checks = []

    def monitor(_k, u, au, bu):
        if _k == 0:
            # keep only the stage whose report is returned (continuation
            # restarts the outer counter per stage)
            a5_margins.clear()
            ball_flags.clear()
            contraction_checks.clear()
        opp = check_opposition(au, bu, spec, profile)
        a5_margins.append(None if opp.verdict == PASS_VACUOUS else opp.margin)
        if rbar is None:
            ball_flags.append(True)
            return
        ball_flags.append(norm(u, spec) <= rbar * (1.0 + 1e-9))
        if opp.verdict == PASS:
            na, nb = norm(au, spec), norm(bu, spec)
            if na <= rbar * (1.0 + 1e-9) and nb <= rbar * (1.0 + 1e-9):
                contraction_checks.append(norm(au + bu, spec) <= rbar * (1.0 + 1e-9))

    pair = OperatorPair(
        a=lambda u: hammerstein_A(prob, u),
        b=lambda u: hammerstein_B(prob, u),
        b_lip=prob.f_lip,
    )
    start = u0 if u0 is not None else zeros(prob.grid, prob.dim)
    if prob.f_lip < 1.0:
        report = krasnoselskii_solve(
            pair, start, spec, tol=tol, max_outer=max_outer, monitor=monitor
        )
    else:
        report = continuation_solve(
            pair, _CONTINUATION_LADDER, start, spec, tol=tol, max_outer=max_outer, monitor=monitor
        )

    if rbar is not None:
        fin = report.final
        n_sum = norm(hammerstein_A(prob, fin) + hammerstein_B(prob, fin), spec)
        # Slack of 10*tol: the final iterate is only known to tol accuracy.
        if n_sum > rbar * (1.0 + 1e-9) + 10.0 * tol:
            raise InvariantBallViolated(
                f"final iterate leaves the certified ball: ||A+B|| = {n_sum:.6g} > R = {rbar:.6g}",
                certificate=cert,
                observed=n_sum,
            )
    report.extras["ball_certificate"] = cert
    report.extras["radius"] = rbar
    report.extras["a5_margins"] = a5_margins
    report.extras["a5_warnings"] = sum(1 for m in a5_margins if m is not None and m < 0)
    report.extras["ball_flags"] = ball_flags
    report.extras["contraction_checks"] = contraction_checks
    return report
