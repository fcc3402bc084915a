"""Registry of built-in parametric function families for CLI configs.

Config values like `f = affine(c=0.5, w0=1)` name an entry here.  Each
builder returns the vectorized evaluator plus whatever metadata the
solvers need (Lipschitz constants, default growth majorants).
"""

import numpy as np

from .errors import ConfigError


def _np(x):
    return np.asarray(x, dtype=float)


# -- Volterra: f acts on (m, d) value arrays -------------------------------

def _v_f_zero():
    return {"fn": lambda x: np.zeros_like(_np(x)), "lip": 0.0}


def _v_f_affine(c=0.5, w0=1.0):
    c, w0 = float(c), float(w0)
    return {"fn": lambda x: c * _np(x) + w0, "lip": abs(c)}


def _v_f_arctan_damp(scale=0.5):
    scale = float(scale)
    if scale < 0:
        raise ConfigError(["arctan_damp scale must be nonnegative"])
    return {"fn": lambda x: -scale * np.arctan(_np(x)), "lip": scale}


VOLTERRA_F = {"zero": _v_f_zero, "affine": _v_f_affine, "arctan_damp": _v_f_arctan_damp}


# -- Volterra: g acts on (t, values) ---------------------------------------

def _v_g_zero():
    return {"fn": lambda t, x: np.zeros_like(_np(x))}


def _v_g_linear(kappa=0.5):
    kappa = float(kappa)
    return {"fn": lambda t, x: kappa * _np(x)}


def _v_g_sine(amp=1.0):
    amp = float(amp)
    return {"fn": lambda t, x: amp * np.sin(_np(x))}


def _v_g_const(c=1.0):
    c = float(c)
    return {"fn": lambda t, x: np.full_like(_np(x), c)}


VOLTERRA_G = {"zero": _v_g_zero, "linear": _v_g_linear, "sine": _v_g_sine, "const": _v_g_const}


# -- alpha(t) and phi(x) growth data ----------------------------------------

def _alpha_const(c=1.0):
    c = float(c)
    if c < 0:
        raise ConfigError(["alpha const(c) needs c >= 0"])
    return {"fn": lambda t: np.full_like(_np(t), c)}


ALPHA = {"const": _alpha_const}


def _phi_const(c=1.0):
    c = float(c)
    if c <= 0:
        raise ConfigError(["phi const(c) needs c > 0"])
    return {"fn": lambda x: np.full_like(_np(x), c)}


def _phi_identity():
    return {"fn": lambda x: _np(x)}


def _phi_affine(a0=1.0, a1=1.0):
    a0, a1 = float(a0), float(a1)
    if a0 <= 0 or a1 < 0:
        raise ConfigError(["phi affine(a0, a1) needs a0 > 0 and a1 >= 0"])
    return {"fn": lambda x: a0 + a1 * _np(x)}


PHI = {"const": _phi_const, "identity": _phi_identity, "affine": _phi_affine}


# -- Hammerstein: f(t, x), kernel k(t, s), Phi(t, v), G(t), psi(x) ----------

def _h_f_zero():
    return {"fn": lambda t, x: np.zeros_like(_np(x)), "lip": 0.0}


def _h_f_linear_damp(c=0.5):
    c = float(c)
    if not 0 <= c <= 1:
        raise ConfigError(["linear_damp(c) needs c in [0, 1]"])
    return {"fn": lambda t, x: -c * _np(x), "lip": c}


def _h_f_const_shift(h0=1.0):
    h0 = float(h0)
    return {"fn": lambda t, x: np.full_like(_np(x), h0), "lip": 0.0}


HAM_F = {"zero": _h_f_zero, "linear_damp": _h_f_linear_damp, "const_shift": _h_f_const_shift}


def _h_k_const(kappa=1.0):
    kappa = float(kappa)
    return {"fn": lambda t, s: np.full_like(_np(t), kappa)}


def _h_k_exp_diff(rate=1.0):
    rate = float(rate)
    return {"fn": lambda t, s: np.exp(-rate * (_np(t) - _np(s)))}


HAM_K = {"const": _h_k_const, "exp_diff": _h_k_exp_diff}


def _h_phi_identity():
    return {
        "fn": lambda t, v: _np(v),
        "g_default": ("const", {"c": 1.0}),
        "psi_default": ("identity", {}),
    }


def _h_phi_affine_shift(shift=1.0):
    shift = float(shift)
    return {
        "fn": lambda t, v: _np(v) + shift,
        "g_default": ("const", {"c": 1.0}),
        "psi_default": ("affine", {"a0": abs(shift), "a1": 1.0}),
    }


def _h_phi_tanh():
    return {
        "fn": lambda t, v: np.tanh(_np(v)),
        "g_default": ("const", {"c": 1.0}),
        "psi_default": ("capped", {"cap": 1.0}),
    }


HAM_PHI = {"identity": _h_phi_identity, "affine_shift": _h_phi_affine_shift, "tanh": _h_phi_tanh}


def _h_g_const(c=1.0):
    c = float(c)
    if c < 0:
        raise ConfigError(["G const(c) needs c >= 0"])
    return {"fn": lambda t: np.full_like(_np(t), c)}


HAM_G = {"const": _h_g_const}


def _psi_identity():
    return {"fn": lambda x: _np(x)}


def _psi_const(c=1.0):
    c = float(c)
    if c < 0:
        raise ConfigError(["psi const(c) needs c >= 0"])
    return {"fn": lambda x: np.full_like(_np(x), c)}


def _psi_affine(a0=1.0, a1=1.0):
    a0, a1 = float(a0), float(a1)
    return {"fn": lambda x: a0 + a1 * _np(x)}


def _psi_capped(cap=1.0):
    cap = float(cap)
    return {"fn": lambda x: np.minimum(_np(x), cap)}


def _psi_power(k=2.0, coef=1.0):
    k, coef = float(k), float(coef)
    return {"fn": lambda x: coef * _np(x) ** k}


HAM_PSI = {
    "identity": _psi_identity,
    "const": _psi_const,
    "affine": _psi_affine,
    "capped": _psi_capped,
    "power": _psi_power,
}


# -- operators for the expanding-property sampler ---------------------------

def _b_negate():
    return {"fn": lambda u: -1.0 * u}


def _b_identity():
    return {"fn": lambda u: 1.0 * u}


def _b_scale(c=0.5):
    c = float(c)
    return {"fn": lambda u: c * u}


def _b_cubic_damp():
    from .space import GridFunction

    return {"fn": lambda u: GridFunction(u.grid, -(u.values**3))}


EXPANDING_B = {"negate": _b_negate, "identity": _b_identity, "scale": _b_scale,
               "cubic_damp": _b_cubic_damp}


def build(registry, name, params, what):
    """Instantiate `name(**params)` from a registry with friendly errors."""
    if name not in registry:
        raise ConfigError([f"unknown {what} preset '{name}'; choices: {sorted(registry)}"])
    try:
        return registry[name](**params)
    except TypeError as exc:
        raise ConfigError([f"bad parameters for {what} preset '{name}': {exc}"]) from exc
