"""Command-line front end.

Subcommands: solve-volterra and solve-hammerstein (config-file driven),
elliptic, geometry, certify, fuzz (flag driven), and plot (figure recipe
over a finished run's CSVs).  Exit codes: 0 success, 2 config error,
3 certificate/hypothesis failure, 4 no convergence, 5 internal error.
The FPFORGE_SEED environment variable overrides the configured seed.
"""

import argparse
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .config import parse_config, validate
from .elliptic import GAMMA_SAFETY, EllipticProblem, gamma_estimate, mu_star, solve_elliptic
from .engine import (
    FAIL,
    check_expanding,
    radius_mu_star,
    radius_poly_growth,
    radius_power,
)
from .errors import (
    BlowupBeforeT,
    CertificateRequired,
    ConfigError,
    ContinuationStalled,
    DegenerateAngle,
    FpforgeError,
    InvalidProblem,
    InvalidSpace,
    InvariantBallViolated,
    NoConvergence,
    NoEpsilon0,
    NotAContraction,
)
from .geometry import ConvexityProfile, _worst_split, check_opposition, epsilon0, modulus, strong_triangle_bound
from .integral import HammersteinProblem, VolterraProblem, bound_b, solve_hammerstein, solve_volterra, volterra_A
from .presets import ALPHA, EXPANDING_B, HAM_F, HAM_G, HAM_K, HAM_PHI, HAM_PSI, PHI, VOLTERRA_F, VOLTERRA_G, build
from .report import RunManifest, Stopwatch, write_certificates_csv, write_geometry_csv, write_report_csv, write_rows, write_manifest
from .seeding import substream
from .space import Grid, GridFunction, SpaceSpec, TimeNorm, node_norms, norm, write_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERT = 3
EXIT_NOCONV = 4
EXIT_INTERNAL = 5

_CONFIG_ERRORS = (ConfigError, InvalidProblem, InvalidSpace, NotAContraction, DegenerateAngle)
_CERT_ERRORS = (CertificateRequired, BlowupBeforeT, NoEpsilon0, InvariantBallViolated)
_NOCONV_ERRORS = (NoConvergence, ContinuationStalled)


def parse_profile(text):
    """hilbert | lp:<p> | table:<csvpath> -> ConvexityProfile."""
    text = text.strip()
    if text == "hilbert":
        return ConvexityProfile.hilbert()
    if text.startswith("lp:"):
        try:
            return ConvexityProfile.lp(float(text[3:]))
        except ValueError:
            raise ConfigError([f"bad lp profile '{text}': expected lp:<p>"])
    if text.startswith("table:"):
        path = text[6:]
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return ConvexityProfile.from_table([(r[0], r[1]) for r in rows])
    raise ConfigError([f"unknown profile '{text}'; expected hilbert, lp:<p>, or table:<csv>"])


def build_volterra(params):
    f = build(VOLTERRA_F, *params["f"], what="f")
    g = build(VOLTERRA_G, *params["g"], what="g")
    alpha = build(ALPHA, *params["alpha"], what="alpha")
    phi = build(PHI, *params["phi"], what="phi")
    grid = Grid(t_end=params["T"], n_steps=params["n_steps"])
    return VolterraProblem(
        f=f["fn"], g=g["fn"], alpha=alpha["fn"], phi=phi["fn"],
        grid=grid, dim=params["dim"], lam=f["lip"], vector_p=params["vector_p"],
    )


def build_hammerstein(params):
    f = build(HAM_F, *params["f"], what="f")
    k = build(HAM_K, *params["k"], what="k")
    phi_op = build(HAM_PHI, *params["Phi"], what="Phi")
    g_spec = params.get("G") or phi_op["g_default"]
    psi_spec = params.get("psi") or phi_op["psi_default"]
    g = build(HAM_G, *g_spec, what="G")
    psi = build(HAM_PSI, *psi_spec, what="psi")
    f_lip = params.get("f_lip")
    grid = Grid(t_end=params["T"], n_steps=params["n_steps"])
    return HammersteinProblem(
        f=f["fn"], f_lip=f["lip"] if f_lip is None else f_lip,
        k=k["fn"], phi_op=phi_op["fn"], g_growth=g["fn"], psi=psi["fn"],
        p=params["p"], grid=grid, dim=params["dim"], vector_p=params["vector_p"],
    )


def parse_h_preset(text, n):
    """sine:<eps> or const:<c> sampled on the interior nodes."""
    text = text.strip()
    x = (np.arange(1, n + 1)) / (n + 1)
    if text.startswith("sine:"):
        return float(text[5:]) * np.sin(np.pi * x)
    if text.startswith("const:"):
        return np.full(n, float(text[6:]))
    raise ConfigError([f"unknown h-preset '{text}'; expected sine:<eps> or const:<c>"])


def build_elliptic(params):
    n = params["n"]
    return EllipticProblem(
        n_interior=n, lam=params["lambda"], mu=params["mu"], p_exp=params["p"],
        q_exp=params["q"], a_coef=params["a"], h_data=parse_h_preset(params["h_preset"], n),
    )


# -- subcommand runners: (config, out_dir, manifest) -> exit code -----------

def _run_solve_volterra(cfg, out, manifest):
    prob = build_volterra(cfg.params)
    try:
        report = solve_volterra(prob, tol=cfg.params["tol"], max_outer=cfg.params["max_outer"])
    except NoConvergence as exc:
        if exc.report is not None:
            write_report_csv(out / "report.csv", exc.report)
            manifest.outputs.append("report.csv")
        raise
    b = report.extras["bound"]
    bt = b.values[:, 0]
    write_csv(report.final, out / "solution.csv")
    write_rows(out / "bound.csv", ["t", "b"], list(zip(b.grid.nodes, bt)))
    write_report_csv(out / "report.csv", report, membership=report.extras["membership_flags"])
    cert = report.extras["tube_certificate"]
    write_certificates_csv(out / "certificates.csv", [cert])
    manifest.certificates.append(cert)
    manifest.outputs += ["solution.csv", "bound.csv", "report.csv", "certificates.csv"]
    return EXIT_OK


def _run_solve_hammerstein(cfg, out, manifest):
    prob = build_hammerstein(cfg.params)
    profile = parse_profile(cfg.params["profile"]) if cfg.params["profile"] else None
    report = solve_hammerstein(
        prob, profile=profile, tol=cfg.params["tol"], max_outer=cfg.params["max_outer"],
        override=cfg.params["override"],
    )
    write_csv(report.final, out / "solution.csv")
    margins = report.extras["a5_margins"]
    flags = report.extras["ball_flags"]
    write_report_csv(out / "report.csv", report, membership=flags, a5_margins=margins)
    cert = report.extras["ball_certificate"]
    write_certificates_csv(out / "certificates.csv", [cert])
    manifest.certificates.append(cert)
    manifest.outputs += ["solution.csv", "report.csv", "certificates.csv"]
    return EXIT_OK


def _run_elliptic(cfg, out, manifest):
    prob = build_elliptic(cfg.params)
    certs = []
    gate = None
    if cfg.params["auto_mu_star"]:
        if cfg.params["R"] is None:
            raise ConfigError(["auto_mu_star needs R to be set"])
        gamma = gamma_estimate(prob, prob.p_exp - 1.0, seed=cfg.seed) * GAMMA_SAFETY
        gate = mu_star(prob, gamma, cfg.params["R"])
        gate.witness["gamma_safety"] = GAMMA_SAFETY
        certs.append(gate)
    report = solve_elliptic(
        prob, tol=cfg.params["tol"], max_outer=cfg.params["max_outer"],
        certificate=gate, override=cfg.params["override"],
    )
    x = report.final.grid.nodes
    write_rows(out / "solution.csv", ["x", "u"], list(zip(x, report.final.values[:, 0])))
    write_report_csv(out / "report.csv", report)
    write_certificates_csv(out / "certificates.csv", certs)
    manifest.certificates += certs
    manifest.outputs += ["solution.csv", "report.csv", "certificates.csv"]
    return EXIT_OK


def _run_geometry(cfg, out, manifest):
    profile = parse_profile(cfg.params["profile"])
    op = cfg.params["op"]
    rows = []
    code = EXIT_OK
    if op == "modulus":
        for e in [float(tok) for tok in str(cfg.params["eps"]).split(",")]:
            rows.append((f"modulus[eps={e:g}]", modulus(profile, e), None))
    elif op == "epsilon0":
        e0 = epsilon0(profile)
        rows.append(("epsilon0", e0, _worst_split(profile, e0) - 0.5))
    elif op == "triang-fuzz":
        rng = substream(cfg.seed, "geometry", "triang-fuzz")
        vector_p = profile.p if profile.p is not None else 2.0
        spec = SpaceSpec(TimeNorm.SUP, vector_p=vector_p)
        worst = np.inf
        violations = 0
        for _ in range(cfg.params["trials"]):
            d = int(rng.integers(2, 9))
            m = int(rng.integers(2, 11))
            vs = [rng.standard_normal(d) for _ in range(m)]
            try:
                bound, lhs = strong_triangle_bound(vs, spec, profile)
            except DegenerateAngle:
                continue
            worst = min(worst, bound - lhs)
            if lhs > bound + 1e-10:
                violations += 1
        rows += [("trials", cfg.params["trials"], None), ("violations", violations, None),
                 ("min_margin", float(worst), float(worst))]
        code = EXIT_CERT if violations else EXIT_OK
    else:  # a5-demo: a nearly-opposed pair comfortably over the angle budget
        au = np.array([1.0, 0.0])
        bu = np.array([-1.0, 0.05])
        spec = SpaceSpec(TimeNorm.SUP, vector_p=2.0)
        cert = check_opposition(au, bu, spec, profile)
        w = cert.witness or {}
        rows += [
            ("alpha_a", w.get("alpha_a"), None),
            ("alpha_b", w.get("alpha_b"), None),
            ("epsilon0", w.get("epsilon0"), None),
            ("a5_margin", cert.margin, cert.margin),
        ]
        manifest.certificates.append(cert)
        code = EXIT_OK if cert.verdict != FAIL else EXIT_CERT
    write_geometry_csv(out / "geometry.csv", rows)
    manifest.outputs.append("geometry.csv")
    return code


def _require(params, keys, kind):
    missing = [k for k in keys if params.get(k) is None]
    if missing:
        raise ConfigError([f"certify --kind {kind} needs {', '.join(missing)}"])


def _run_certify(cfg, out, manifest):
    p = cfg.params
    kind = p["kind"]
    if kind == "mu-star":
        _require(p, ["p", "q", "a", "b", "lam_b"], kind)
        cert = radius_mu_star(p["p"], p["q"], p["a"], p["b"], p["lam_b"])
    elif kind == "power":
        _require(p, ["a", "p"], kind)
        cert = radius_power(p["a"], p["p"])
    elif kind == "c6":
        _require(p, ["c", "t", "r", "f0"], kind)
        cert = radius_poly_growth(p["c"], p["t"], p["r"], p["f0"])
    else:  # expanding
        _require(p, ["b_preset"], kind)
        b = build(EXPANDING_B, *p["b_preset"], what="b")
        lambdas = [float(tok) for tok in str(p["lambdas"]).split(",")]
        spec = SpaceSpec(TimeNorm.SUP, vector_p=2.0)
        cert = check_expanding(b["fn"], spec, p["samples"], lambdas, dim=p["dim"], seed=cfg.seed)
    write_certificates_csv(out / "certificate.csv", [cert])
    manifest.certificates.append(cert)
    manifest.outputs.append("certificate.csv")
    return EXIT_CERT if cert.verdict == FAIL else EXIT_OK


def _run_fuzz(cfg, out, manifest):
    target = cfg.params["target"]
    trials = cfg.params["trials"]
    rng = substream(cfg.seed, "fuzz", target)
    violations = 0
    worst = np.inf
    if target == "space-triangle":
        spec = SpaceSpec(TimeNorm.LP, vector_p=2.0, lp_exponent=2.0)
        grid = Grid(t_end=1.0, n_steps=16)
        for _ in range(trials):
            d = int(rng.integers(1, 4))
            u = GridFunction(grid, rng.standard_normal((17, d)))
            v = GridFunction(grid, rng.standard_normal((17, d)))
            margin = norm(u, spec) + norm(v, spec) - norm(u + v, spec)
            worst = min(worst, margin)
            violations += margin < -1e-12
    elif target == "strong-triangle-fuzz":
        profile = ConvexityProfile.hilbert()
        spec = SpaceSpec(TimeNorm.SUP, vector_p=2.0)
        for _ in range(trials):
            d = int(rng.integers(2, 9))
            m = int(rng.integers(2, 11))
            try:
                bound, lhs = strong_triangle_bound(
                    [rng.standard_normal(d) for _ in range(m)], spec, profile
                )
            except DegenerateAngle:
                continue
            worst = min(worst, bound - lhs)
            violations += lhs > bound + 1e-10
    elif target == "tube":
        grid = Grid(t_end=1.0, n_steps=1000)
        prob = VolterraProblem(
            f=lambda x: -0.5 * np.arctan(np.asarray(x, float)),
            g=lambda t, x: np.sin(np.asarray(x, float)),
            alpha=lambda t: np.ones_like(np.asarray(t, float)),
            phi=lambda x: np.ones_like(np.asarray(x, float)),
            grid=grid, dim=1, lam=0.5,
        )
        b = bound_b(prob)
        bt = b.values[:, 0]
        for _ in range(trials):
            u = GridFunction(grid, (rng.uniform(-1, 1, size=len(bt)) * bt)[:, None])
            au = volterra_A(prob, u)
            margin = float(np.min(bt - node_norms(au.values, 2.0)))
            worst = min(worst, margin)
            violations += margin < -1e-8
    else:  # expanding
        spec = SpaceSpec(TimeNorm.SUP, vector_p=2.0)
        cert = check_expanding(lambda u: -1.0 * u, spec, trials, [0.1, 0.5, 1.0, 2.0],
                               seed=cfg.seed)
        worst = cert.margin
        violations = int(cert.verdict == FAIL)
    rows = [("trials", trials, None), ("violations", int(violations), None),
            ("min_margin", float(worst), float(worst))]
    write_geometry_csv(out / "fuzz.csv", rows)
    manifest.outputs.append("fuzz.csv")
    return EXIT_CERT if violations else EXIT_OK


_DISPATCH = {
    "solve-volterra": _run_solve_volterra,
    "solve-hammerstein": _run_solve_hammerstein,
    "elliptic": _run_elliptic,
    "geometry": _run_geometry,
    "certify": _run_certify,
    "fuzz": _run_fuzz,
}


def run(cfg):
    """Execute a validated RunConfig: write outputs and the manifest, return the exit code."""
    out = Path(cfg.output_dir)
    manifest = RunManifest(subcommand=cfg.subcommand, params=dict(cfg.params), seed=cfg.seed)
    code = EXIT_OK
    with Stopwatch() as sw:
        try:
            out.mkdir(parents=True, exist_ok=True)
            code = _DISPATCH[cfg.subcommand](cfg, out, manifest)
            if code != EXIT_OK:
                manifest.status = "check-failed"
        except _CERT_ERRORS as exc:
            manifest.status, manifest.error, code = "certificate-failed", str(exc), EXIT_CERT
            cert = getattr(exc, "certificate", None)
            if cert is not None:
                manifest.certificates.append(cert)
        except _NOCONV_ERRORS as exc:
            manifest.status, manifest.error, code = "no-convergence", str(exc), EXIT_NOCONV
        except _CONFIG_ERRORS as exc:
            manifest.status, manifest.error, code = "config-error", str(exc), EXIT_CONFIG
        except Exception as exc:  # noqa: BLE001 - documented internal-error path
            manifest.status, manifest.error, code = "internal-error", repr(exc), EXIT_INTERNAL
            traceback.print_exc(file=sys.stderr)
    manifest.wall_clock_s = sw.elapsed
    manifest.exit_code = code
    try:
        write_manifest(out, manifest)
    except OSError as exc:
        print(f"fpforge: cannot write manifest: {exc}", file=sys.stderr)
        code = max(code, EXIT_INTERNAL)
    if manifest.error:
        print(f"fpforge: {manifest.status}: {manifest.error}", file=sys.stderr)
    return code


def _add_common(sub):
    # None means "not given": config-file values (or schema defaults) apply.
    sub.add_argument("--output-dir", default=None)
    sub.add_argument("--seed", type=int, default=None)


def _parser():
    ap = argparse.ArgumentParser(prog="fpforge", description=__doc__)
    ap.add_argument("--version", action="version", version=f"fpforge {__version__}")
    subs = ap.add_subparsers(dest="subcommand", required=True)

    for name in ("solve-volterra", "solve-hammerstein"):
        sp = subs.add_parser(name, help=f"{name} from a key = value config file")
        sp.add_argument("config", help="path to the config file")
        _add_common(sp)

    sp = subs.add_parser("elliptic", help="1D semilinear boundary problem")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--h-preset", dest="h_preset", required=True)
    sp.add_argument("--R", dest="radius", type=float)
    sp.add_argument("--auto-mu-star", action="store_true")
    sp.add_argument("--override", action="store_true")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-outer", dest="max_outer", type=int)
    _add_common(sp)

    sp = subs.add_parser("geometry", help="convexity geometry reports")
    sp.add_argument("--profile", default="hilbert")
    sp.add_argument("--op", default="epsilon0")
    sp.add_argument("--eps", default="1.0")
    sp.add_argument("--trials", type=int)
    _add_common(sp)

    sp = subs.add_parser("certify", help="radius / expanding certificates")
    sp.add_argument("--kind", required=True)
    for flag in ("p", "q", "a", "b", "c", "t", "r", "f0"):
        sp.add_argument(f"--{flag}", type=float)
    sp.add_argument("--lam-b", dest="lam_b", type=float)
    sp.add_argument("--b-preset", dest="b_preset")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--lambdas")
    _add_common(sp)

    sp = subs.add_parser("fuzz", help="seeded property fuzzers")
    sp.add_argument("--target", required=True)
    sp.add_argument("--trials", type=int)
    _add_common(sp)

    sp = subs.add_parser("plot", help="render figures from a finished run's CSVs")
    sp.add_argument("run_dir")
    sp.add_argument("--dpi", type=int, default=150)
    return ap


_FLAG_KEYS = {
    "elliptic": [("n", "n"), ("lam", "lambda"), ("mu", "mu"), ("p", "p"), ("q", "q"),
                 ("a", "a"), ("h_preset", "h_preset"), ("radius", "R"),
                 ("auto_mu_star", "auto_mu_star"), ("override", "override"),
                 ("tol", "tol"), ("max_outer", "max_outer")],
    "geometry": [("profile", "profile"), ("op", "op"), ("eps", "eps"), ("trials", "trials")],
    "certify": [("kind", "kind"), ("p", "p"), ("q", "q"), ("a", "a"), ("b", "b"),
                ("lam_b", "lam_b"), ("c", "c"), ("t", "t"), ("r", "r"), ("f0", "f0"),
                ("b_preset", "b_preset"), ("dim", "dim"), ("samples", "samples"),
                ("lambdas", "lambdas")],
    "fuzz": [("target", "target"), ("trials", "trials")],
}


def _config_from_args(args):
    sub = args.subcommand
    if sub in ("solve-volterra", "solve-hammerstein"):
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError([f"config file not found: {path}"])
        cfg = parse_config(path.read_text(encoding="utf-8"), sub)
        if args.output_dir is not None:
            cfg.output_dir = args.output_dir
        if args.seed is not None:
            cfg.seed = args.seed
    else:
        items = []
        for attr, key in _FLAG_KEYS[sub]:
            val = getattr(args, attr)
            if val is None or (isinstance(val, bool) and not val):
                continue
            items.append((None, key, "true" if val is True else str(val)))
        if args.seed is not None:
            items.append((None, "seed", str(args.seed)))
        if args.output_dir is not None:
            items.append((None, "output_dir", args.output_dir))
        cfg = validate(sub, items)
    env_seed = os.environ.get("FPFORGE_SEED")
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise ConfigError([f"FPFORGE_SEED must be an integer, got '{env_seed}'"])
    return cfg


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.subcommand == "plot":
        from .plots import plot_run

        try:
            for path in plot_run(args.run_dir, dpi=args.dpi):
                print(path)
            return EXIT_OK
        except FpforgeError as exc:
            print(f"fpforge: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except Exception as exc:  # noqa: BLE001
            print(f"fpforge: internal error: {exc!r}", file=sys.stderr)
            return EXIT_INTERNAL
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"fpforge: config: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
