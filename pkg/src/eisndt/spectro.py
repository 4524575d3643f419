"""Frequency-dependent contrast scalars and the coefficients of the boundary expansion."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateContrast, NotASegment
from .scene import Bar, Crack, Scene

DEFAULT_C0 = 1e-3
DEFAULT_BETA_WINDOW = (1e-3, 1e3)


class Regime(enum.Enum):
    HIGH = "High"
    LOW = "Low"
    INTERMEDIATE = "Intermediate"


@dataclass(frozen=True)
class ContrastPair:
    lambda_c: complex
    lambda_d: complex
    omega: float


@dataclass(frozen=True)
class CrackCoefficient:
    c_re: complex
    c_im: complex
    k: int = 0


@dataclass(frozen=True)
class BarCoefficient:
    d_re: complex
    d_im: complex
    k: int = 0


def _materials(materials) -> dict:
    if isinstance(materials, Scene):
        return materials.materials
    return dict(materials)


def lambda_c(materials, omega: float) -> complex:
    """Crack-to-background admittivity ratio."""
    m = _materials(materials)
    crack, background = m["crack"], m["background"]
    return complex(crack.sigma, omega * crack.epsilon) / complex(background.sigma,
                                                                 omega * background.epsilon)


def lambda_d(materials, omega: float) -> complex:
    """Bar contrast ((s_d + s_b) + iw(e_d + e_b)) / (2((s_d - s_b) - iw(e_d - e_b)))."""
    m = _materials(materials)
    bar, background = m["bar"], m["background"]
    num = complex(bar.sigma + background.sigma, omega * (bar.epsilon + background.epsilon))
    den = 2.0 * complex(bar.sigma - background.sigma, -omega * (bar.epsilon - background.epsilon))
    if den == 0:
        raise DegenerateContrast("bar and background materials coincide")
    return num / den


def contrast_pair(materials, omega: float) -> ContrastPair:
    return ContrastPair(lambda_c(materials, omega), lambda_d(materials, omega), omega)


def classify_regime(delta_k: float, omega: float, materials, c0: float = DEFAULT_C0,
                    beta_window=DEFAULT_BETA_WINDOW) -> Regime:
    lo, hi = beta_window
    if not (c0 > 0 and 0 < lo < hi < math.inf):
        raise ValueError("need c0 > 0 and 0 < beta_lo < beta_hi < inf")
    mag = abs(lambda_c(materials, omega))
    if mag >= c0:
        return Regime.HIGH
    if mag > 0 and lo <= delta_k / mag <= hi:
        return Regime.LOW
    return Regime.INTERMEDIATE


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if not math.isclose(float(np.linalg.norm(v)), 1.0, rel_tol=1e-9):
        raise ValueError("drive direction must be a unit vector")
    return v


def crack_coefficients(crack: Crack, a, lam_c: complex, k: int = 0) -> CrackCoefficient:
    """Coefficients multiplying ln((x - Q)/(x - P)) for a straight crack from P to Q."""
    if not crack.is_segment:
        raise NotASegment("crack coefficients need a single straight segment")
    a = _unit(a)
    a_tau = float(a @ crack.tangents[0])
    a_nu = float(a @ crack.normals[0])
    scale = crack.half_thickness / math.pi
    along, across = lam_c - 1.0, 1.0 - 1.0 / lam_c
    c_re = scale * complex(along.real * a_tau, across.real * a_nu)
    c_im = scale * complex(along.imag * a_tau, across.imag * a_nu)
    return CrackCoefficient(c_re, c_im, k)


def bar_coefficients(bar: Bar, a, lam_d: complex, k: int = 0) -> BarCoefficient:
    """Coefficients multiplying 1/(x - z) for a disk bar, with a as the complex number a1 + i a2."""
    if lam_d == 0:
        raise DegenerateContrast("lambda_d vanishes")
    a = _unit(a)
    strength = bar.area / (2 * math.pi * lam_d)
    a_c = complex(a[0], a[1])
    return BarCoefficient(-strength.real * a_c, -strength.imag * a_c, k)


def lambda_c_estimate_ratio(materials, omega: float) -> float:
    """|lambda_c| divided by (s_c + w e_c)/(s_b + w e_b)."""
    m = _materials(materials)
    crack, background = m["crack"], m["background"]
    reference = (crack.sigma + omega * crack.epsilon) / (background.sigma + omega * background.epsilon)
    return abs(lambda_c(materials, omega)) / reference


def spectro_table(materials, frequencies_hz) -> list[dict]:
    """Rows of f, omega, lambda_c and lambda_d for a frequency grid."""
    rows = []
    for f in frequencies_hz:
        w = 2 * math.pi * float(f)
        lc, ld = lambda_c(materials, w), lambda_d(materials, w)
        rows.append({"freq_hz": float(f), "omega": w, "re_lambda_c": lc.real,
                     "im_lambda_c": lc.imag, "abs_lambda_c": abs(lc), "re_lambda_d": ld.real,
                     "im_lambda_d": ld.imag, "abs_lambda_d": abs(ld)})
    return rows


