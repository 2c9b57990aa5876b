"""
TRS-C Solver & Certifier - Configuration
Tolerances, paths and formatting shared by the library and the command line
"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# ===== PATHS =====
PROJECT_ROOT = Path(__file__).parent
DATA_DIR = PROJECT_ROOT / "data"
REPORTS_DIR = PROJECT_ROOT / "reports"

# ===== ENVIRONMENT =====
HCX_SEED = int(os.getenv("HCX_SEED", "20240601"))
LOG_LEVEL = os.getenv("HCX_LOG_LEVEL", "INFO")

# ===== SPECTRAL =====
SPECTRAL_CONFIG = {
    "symmetry_tol": 1e-9,           # ||H - H^T|| relative to max(1, ||H||)
    "eigengap_tol": 1e-9,           # lambda_i - lambda_1 <= tol * max(1, |lambda_1|) -> same eigenspace
    "zero_coeff_tol": 1e-12,        # |g_i| <= tol * ||c|| -> component absent
    "pole_tol": 1e-12,              # absolute distance to a live pole
}

# ===== CONVEX SCALAR FAMILIES =====
CONVEX_CONFIG = {
    "inverse_tol": 1e-12,           # |d1(inv_d1(t)) - t| <= tol * max(1, |t|)
    "inverse_max_iter": 200,
    "bracket_max_expand": 200,
    "concavity_samples": 256,
    "spot_check_samples": 64,
    "spot_check_tol": 1e-10,
}

# Inner Newton for y(mu) = argmin f0(y) + (mu/2) f(y)
NEWTON_CONFIG = {
    "max_iter": 100,
    "grad_tol": 1e-10,              # relative to max(1, ||grad f0(y0)||)
    "armijo": 1e-4,
    "shrink": 0.5,
    "max_backtracks": 60,
    "rounding_factor": 16,          # Newton decrement <= factor * eps * |value| -> below rounding
}

# ===== GLOBAL SOLVER / CHECKER =====
GLOBAL_CONFIG = {
    "root_tol": 1e-10,              # |phi - psi| <= tol * max(1, psi)
    "max_bisect": 200,
    "max_expand": 200,
    "stationarity_tol": 1e-8,       # relative to (1 + ||c||)
    "psd_tol": 1e-9,                # relative to (1 + |lambda_1|)
    "complementarity_tol": 1e-8,
    "multiplier_tol": 1e-12,
}

# ===== LOCAL ENUMERATION =====
LOCAL_CONFIG = {
    "grid_points": 4096,
    "right_margin": 1e-6,           # distance kept from -lambda_1
    "left_margin": 1e-9,
    "bisect_rel_tol": 1e-12,        # |hi - lo| <= tol * |interval|
    "classify_tol": 1e-7,           # relative to (1 + |phi'(mu)|)
    "root_tol": 1e-8,               # |phi - psi| <= tol * (1 + phi)
    "tangency_tol": 1e-10,
    "duplicate_tol": 1e-9,
    "constraint_tol": 1e-8,         # |x^T x - a y - b| <= tol * (1 + |b|) at a materialized root
}

# ===== SECOND-ORDER CERTIFICATES =====
CERTIFY_CONFIG = {
    "psd_tol": 1e-9,                # relative to (1 + ||B||)
    "kkt_tol": 1e-8,
    "x_zero_tol": 1e-12,
    "interval_tol": 1e-12,
}

# ===== ADVERSARIAL BUILDER =====
BUILDER_CONFIG = {
    "o_match_tol": 1e-2,            # displayed o values are rounded to two decimals
    "line_match_tol": 1e-2,         # relative to (1 + phi(mu_i))
    "blend_samples": 64,
    "max_blend_halvings": 30,
    "continuity_tol": 1e-10,
    "monotone_samples": 512,
}

# ===== INSTANCE FILES =====
IO_CONFIG = {
    "schema_version": 1,
    "symmetry_tol": 1e-9,
    "indent": 2,
}

# ===== EXIT CODES =====
EXIT_CODES = {
    "ok": 0,                        # certificate established / command succeeded
    "no_certificate": 1,            # checker reported Violated or NotLocalMin
    "parse_error": 2,
    "solver_error": 3,
    "bad_sequence": 4,
}


# ===== FORMATTING =====
def format_float(value: float, digits: int = 6) -> str:
    """Fixed-width float for console tables"""
    return f"{value: .{digits}f}"


def format_vector(values, digits: int = 4) -> str:
    """Format a vector as (a, b, c)"""
    return "(" + ", ".join(f"{float(v):.{digits}f}" for v in values) + ")"
