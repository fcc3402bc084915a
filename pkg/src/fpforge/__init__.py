"""fpforge: fixed-point solvers for operator sums u = A(u) + B(u).

The library solves discretized fixed-point equations with a hybrid
scheme (Banach resolvent inside, Picard outside), checks the geometric
and a-priori-radius hypotheses behind the scheme as runtime
certificates, and ships three worked problem families: Volterra
integral equations with an invariant tube, Hammerstein kernel
equations with an invariant-ball certificate, and a 1D semilinear
elliptic two-point boundary problem.
"""

__version__ = "0.1.0"

from .errors import (
    BlowupBeforeT,
    CertificateRequired,
    ConfigError,
    ContinuationStalled,
    DegenerateAngle,
    FpforgeError,
    GridMismatch,
    InvalidProblem,
    InvalidSpace,
    InvariantBallViolated,
    NoConvergence,
    NoEpsilon0,
    NotAContraction,
)
from .space import Grid, GridFunction, SpaceSpec, TimeNorm, axpy, cumulative_integral, norm
from .geometry import ConvexityProfile, angle, check_opposition, cone_opening, epsilon0, modulus, strong_triangle_bound
from .engine import (
    Certificate,
    IterationReport,
    OperatorPair,
    PASS,
    PASS_VACUOUS,
    FAIL,
    check_expanding,
    continuation_solve,
    krasnoselskii_solve,
    radius_mu_star,
    radius_poly_growth,
    radius_power,
    reduce_parameter,
    resolve_contraction,
)
from .integral import (
    HammersteinProblem,
    VolterraProblem,
    bound_b,
    invariant_ball_certificate,
    kernel_apply,
    solve_hammerstein,
    solve_volterra,
    volterra_A,
)
from .elliptic import EllipticProblem, gamma_estimate, laplacian_inverse, mu_star, solve_elliptic
