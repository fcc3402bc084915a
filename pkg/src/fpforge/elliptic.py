"""1D semilinear two-point boundary problem as a fixed-point solve.

-u'' + lam*u = mu*|u|^(p-2)u + a*|u|^(q-2)u + h(x) on (0, 1), u(0)=u(1)=0,
discretized by second differences on n interior points.  Writing w = Lu
(L = -d^2/dx^2), the problem becomes the fixed-point equation
w = N(L^{-1} w) - lam * L^{-1} w, which the hybrid engine solves; the
reported solution is u = L^{-1} w.  All norms are h-weighted.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .engine import (
    Certificate,
    FAIL,
    IterationReport,
    OperatorPair,
    PASS,
    krasnoselskii_solve,
    reduce_parameter,
)
from .errors import CertificateRequired, InvalidProblem
from .seeding import substream
from .space import Grid, GridFunction, SpaceSpec, TimeNorm

GAMMA_SAFETY = 1.05  # inflation applied (and reported) when an estimate feeds a certificate


@dataclass
class EllipticProblem:
    """Forcing h is sampled on the n_interior interior nodes x_i = i*h, h = 1/(n+1)."""

    n_interior: int
    lam: float
    mu: float
    p_exp: float
    q_exp: float
    a_coef: float
    h_data: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.n_interior < 2:
            raise InvalidProblem("need at least two interior points")
        if not self.p_exp > 2:
            raise InvalidProblem(f"p_exp must exceed 2, got {self.p_exp}")
        if not (1.5 <= self.q_exp < 2):
            raise InvalidProblem(f"q_exp must lie in [3/2, 2), got {self.q_exp}")
        if self.a_coef < 0 or self.mu < 0:
            raise InvalidProblem("mu and a_coef must be nonnegative")
        h = np.asarray(self.h_data, dtype=float).reshape(-1)
        if h.shape[0] != self.n_interior or not np.all(np.isfinite(h)):
            raise InvalidProblem("h_data must be a finite vector of length n_interior")
        object.__setattr__(self, "h_data", h)

    @property
    def h(self):
        return 1.0 / (self.n_interior + 1)

    @property
    def x_interior(self):
        return self.h * np.arange(1, self.n_interior + 1)


def lambda1(prob):
    """Smallest eigenvalue of the discrete second-difference operator."""
    h = prob.h
    return 2.0 * (1.0 - math.cos(math.pi * h)) / (h * h)


def _factor(prob):
    if prob._chol is None:
        n = prob.n_interior
        h2 = prob.h * prob.h
        ab = np.zeros((2, n))
        ab[0, 1:] = -1.0 / h2
        ab[1, :] = 2.0 / h2
        prob._chol = cholesky_banded(ab)
    return prob._chol


def laplacian_inverse(prob, w):
    """Direct tridiagonal solve of -u'' = w with zero boundary (interior vector in/out)."""
    w = np.asarray(w, dtype=float)
    return cho_solve_banded((_factor(prob), False), w)


def weighted_norm(prob, v, r=2.0):
    """h-weighted r-norm (h * sum |v_i|^r)^(1/r) of an interior vector."""
    v = np.abs(np.asarray(v, dtype=float))
    if r == 2.0:
        return math.sqrt(prob.h * float((v * v).sum()))
    return (prob.h * float((v**r).sum())) ** (1.0 / r)


def gamma_estimate(prob, p_exp, n_samples=10_000, seed=0, polish_iters=80, return_witness=False):
    """Sampled lower estimate of the best gamma in ||w||_{2p} <= gamma ||Lw||_2.

    Maximizes ||L^{-1} v||_{2p} / ||v||_2 over Gaussian samples, then
    polishes the best candidate with a dual power iteration.  Returns the
    raw estimate (with `return_witness`, also the maximizing v); the
    certificate call sites inflate it by GAMMA_SAFETY and report the
    factor.  Deterministic for a fixed seed.
    """
    if p_exp < 1:
        raise InvalidProblem(f"p_exp must be >= 1, got {p_exp}")
    r = 2.0 * p_exp
    rng = substream(seed, "elliptic", "gamma")
    v = rng.standard_normal((prob.n_interior, n_samples))
    u = cho_solve_banded((_factor(prob), False), v)
    h = prob.h
    num = (h * (np.abs(u) ** r).sum(axis=0)) ** (1.0 / r)
    den = np.sqrt(h * (v * v).sum(axis=0))
    ratios = num / den
    best_idx = int(np.argmax(ratios))
    best = float(ratios[best_idx])
    witness = v[:, best_idx] / den[best_idx]

    vec = witness
    for _ in range(polish_iters):
        u1 = laplacian_inverse(prob, vec)
        grad = np.sign(u1) * np.abs(u1) ** (r - 1.0)
        w = laplacian_inverse(prob, grad)
        nw = weighted_norm(prob, w, 2.0)
        if nw == 0.0:
            break
        vec = w / nw
        cand = float(
            weighted_norm(prob, laplacian_inverse(prob, vec), r) / weighted_norm(prob, vec, 2.0)
        )
        if cand > best:
            best = cand
            witness = vec
    if return_witness:
        return best, witness
    return best


def mu_star(prob, gamma, radius):
    """Critical coefficient mu* = (R - a g^{q-1} R^{q-1} - ||h||_2) / (g^{p-1} R^{p-1}).

    PASS certifies that the substitution map keeps the L2 ball of the
    given radius invariant for every mu < mu*.  FAIL margin is the
    (nonpositive) numerator.
    """
    if gamma <= 0 or radius <= 0:
        raise InvalidProblem("gamma and radius must be positive")
    h2 = weighted_norm(prob, prob.h_data, 2.0)
    p, q, a = prob.p_exp, prob.q_exp, prob.a_coef
    numerator = radius - a * gamma ** (q - 1.0) * radius ** (q - 1.0) - h2
    witness = {"gamma": gamma, "R": radius, "h_norm_2": h2, "numerator": numerator}
    if numerator <= 0:
        return Certificate(kind="mu-star", verdict=FAIL, margin=numerator, radius=radius,
                           witness=witness)
    value = numerator / (gamma ** (p - 1.0) * radius ** (p - 1.0))
    witness["mu_star"] = value
    return Certificate(kind="mu-star", verdict=PASS, margin=value, radius=radius, witness=witness)


def _nemytskii(prob, v):
    """mu |v|^(p-2) v + a |v|^(q-2) v + h, written with sign(v)|v|^(e-1) to stay finite at 0."""
    s = np.sign(v)
    out = prob.h_data.copy()
    if prob.mu != 0.0:
        out = out + prob.mu * s * np.abs(v) ** (prob.p_exp - 1.0)
    if prob.a_coef != 0.0:
        out = out + prob.a_coef * s * np.abs(v) ** (prob.q_exp - 1.0)
    return out


def solve_elliptic(prob, tol=1e-10, max_outer=500, certificate=None, override=False):
    """Solve the discrete boundary problem; the report's final is u on [0, 1].

    lam >= 0 runs the parameter-reduction transform with B = -L^{-1}
    (Lipschitz 1/lambda1 and expanding, since L^{-1} is positive
    definite); -lambda1 < lam < 0 treats |lam| L^{-1} as the contraction
    directly.  When a mu-star certificate is supplied it gates the run:
    FAIL or mu >= mu* raises unless overridden.  Residuals are reported
    in the PDE scale (h-weighted L2 of Lu + lam*u - f(x, u)).
    """
    lam1 = lambda1(prob)
    if prob.lam <= -lam1 * (1.0 - 1e-6):
        raise InvalidProblem(
            f"lam = {prob.lam} is at or below the contraction limit -lambda1 = {-lam1:.6g}"
        )
    if certificate is not None and not override:
        if certificate.verdict == FAIL:
            raise CertificateRequired("mu-star certificate failed", certificate=certificate)
        mu_max = (certificate.witness or {}).get("mu_star", math.inf)
        if prob.mu >= mu_max:
            raise CertificateRequired(
                f"mu = {prob.mu} is not below the certified mu* = {mu_max:.6g}",
                certificate=certificate,
            )

    n = prob.n_interior
    grid = Grid(t_end=1.0, n_steps=n + 1)
    spec = SpaceSpec(TimeNorm.LP, vector_p=2.0, lp_exponent=2.0)

    def embed(interior):
        vals = np.zeros((n + 2, 1))
        vals[1:-1, 0] = interior
        return GridFunction(grid, vals)

    def a_op(wgf):
        w = wgf.values[1:-1, 0]
        return embed(_nemytskii(prob, laplacian_inverse(prob, w)))

    def b_neg_inv(wgf):
        return embed(-laplacian_inverse(prob, wgf.values[1:-1, 0]))

    if prob.lam >= 0:
        base = OperatorPair(a=a_op, b=b_neg_inv, b_lip=1.0 / lam1)
        pair = reduce_parameter(base, prob.lam)
        scale = 1.0 + prob.lam / lam1  # residual contraction of the transform
    else:
        mag = -prob.lam

        def b_pos_inv(wgf):
            return embed(mag * laplacian_inverse(prob, wgf.values[1:-1, 0]))

        pair = OperatorPair(a=a_op, b=b_pos_inv, b_lip=mag / lam1)
        scale = 1.0

    report = krasnoselskii_solve(
        pair, embed(np.zeros(n)), spec, tol=tol / scale, max_outer=max_outer
    )
    w_final = report.final.values[1:-1, 0]
    u_interior = laplacian_inverse(prob, w_final)
    u_full = np.zeros(n + 2)
    u_full[1:-1] = u_interior
    solution = GridFunction(grid, u_full[:, None])
    return IterationReport(
        converged=report.converged,
        iterations=report.iterations,
        residual_history=[r * scale for r in report.residual_history],
        inner_iterations=report.inner_iterations,
        membership_violations=report.membership_violations,
        final=solution,
        extras={
            "w_final": w_final,
            "u_interior": u_interior,
            "lambda1": lam1,
            "certificate": certificate,
        },
    )
