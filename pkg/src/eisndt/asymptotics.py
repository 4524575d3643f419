"""Leading-order boundary expansions and pole recovery.

Points of the plane are also used as complex numbers x1 + i x2. On the
boundary circle the perturbation ``(-1/2 I + K)[u - u0]`` is compared with

    Phi(x) = (1/2pi) sum_k delta_k int_{L_k} (A_k a) . (x - x') / |x - x'|^2 ds'
           + (1/2pi) sum_k (|D_k| / lambda_d) (x - z_k) . a / |x - z_k|^2

(the sign that matches a finite element solve of the same problem), and
with the meromorphic functions

    G(x)  = sum_k c_k ln((x - Q_k)/(x - P_k)) + sum_k d_k / (x - z_k),
    G'(x) = sum_k c_k (1/(x - Q_k) - 1/(x - P_k)) - sum_k d_k / (x - z_k)^2,

which satisfy Re G_re = -Re Phi and Re G_im = -Im Phi on the circle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (AtPole, CoincidentPoints, MissingFluxData, NonUniformSampling,
                     OnBranchCut, PoleOutsideCircle, RankDeficient, ZeroLambda)
from .samples import BoundarySamples, CrackFlux
from .scene import Scene
from .spectro import bar_coefficients, crack_coefficients, lambda_c, lambda_d

N_GAUSS = 32

# ---------------------------------------------------------------------------
# kernels


def fundamental_solution(x, x_prime) -> float:
    """-ln|x - x'| / (2 pi)."""
    r = math.dist(x, x_prime)
    if r == 0.0:
        raise CoincidentPoints("fundamental solution is singular at x = x'")
    return -math.log(r) / (2 * math.pi)


def fundamental_solution_gradient(x, x_prime) -> np.ndarray:
    """Gradient of the fundamental solution with respect to x."""
    d = np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)
    r2 = float(d @ d)
    if r2 == 0.0:
        raise CoincidentPoints("fundamental solution is singular at x = x'")
    return -d / (2 * math.pi * r2)


def _check_uniform_circle(points: np.ndarray, rtol: float = 1e-8) -> float:
    n = len(points)
    radii = np.linalg.norm(points, axis=1)
    R = float(radii.mean())
    if n < 3 or np.abs(radii - R).max() > rtol * R:
        raise NonUniformSampling("samples do not lie on one circle")
    theta = np.unwrap(np.arctan2(points[:, 1], points[:, 0]))
    step = np.diff(np.append(theta, theta[0] + 2 * math.pi * np.sign(theta[-1] - theta[0])))
    if np.abs(np.abs(step) - 2 * math.pi / n).max() > 1e-6 * 2 * math.pi / n:
        raise NonUniformSampling("boundary samples are not uniformly spaced")
    return R


def k_omega_apply(samples: BoundarySamples, min_samples: int = 64) -> BoundarySamples:
    """Nystrom trapezoid rule for the double-layer trace K on the circle."""
    if len(samples) < min_samples:
        raise NonUniformSampling(f"need at least {min_samples} samples, got {len(samples)}")
    x = samples.points
    R = _check_uniform_circle(x)
    nu = x / np.linalg.norm(x, axis=1)[:, None]
    d = x[None, :, :] - x[:, None, :]  # x' - x, rows x, columns x'
    r2 = np.einsum("ijk,ijk->ij", d, d)
    np.fill_diagonal(r2, 1.0)
    kernel = np.einsum("ijk,jk->ij", d, nu) / r2 / (2 * math.pi)
    np.fill_diagonal(kernel, 1.0 / (4 * math.pi * R))
    ds = 2 * math.pi * R / len(samples)
    return samples.with_values(kernel @ samples.values * ds)


# ---------------------------------------------------------------------------
# high-frequency expansion


@dataclass(frozen=True)
class CrackPolarizationMatrix:
    matrix: np.ndarray
    tau: np.ndarray
    nu: np.ndarray
    lambda_c: complex

    @property
    def eigenvalues(self) -> tuple[complex, complex]:
        """(across, along): values on nu and on tau."""
        return 2 * (1 - 1 / self.lambda_c), 2 * (self.lambda_c - 1)


def crack_polarization(lam_c: complex, tau, nu) -> CrackPolarizationMatrix:
    if lam_c == 0:
        raise ZeroLambda("lambda_c must be nonzero")
    tau = np.asarray(tau, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if abs(tau @ nu) > 1e-12 or not np.allclose([tau @ tau, nu @ nu], 1.0):
        raise ValueError("tau and nu must be orthonormal")
    A = 2 * (1 - 1 / lam_c) * np.outer(nu, nu) + 2 * (lam_c - 1) * np.outer(tau, tau)
    return CrackPolarizationMatrix(A, tau, nu, lam_c)


def _panels(p0, p1, points, n_gauss):
    """Gauss-Legendre nodes and weights on [p0, p1], panels sized by distance to ``points``."""
    length = float(np.linalg.norm(p1 - p0))
    dist = _segment_point_distance(p0, p1, points).min()
    n_panels = max(1, math.ceil(length / max(dist, 1e-300)))
    t, w = np.polynomial.legendre.leggauss(n_gauss)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    s = ((edges[:-1, None] + edges[1:, None]) + (edges[1:, None] - edges[:-1, None]) * t) / 2
    weights = ((edges[1:, None] - edges[:-1, None]) / 2 * w).ravel() * length
    return p0 + s.ravel()[:, None] * (p1 - p0), weights


def _segment_point_distance(p0, p1, points):
    d = p1 - p0
    t = np.clip((points - p0) @ d / (d @ d), 0.0, 1.0)
    return np.linalg.norm(p0 + t[:, None] * d - points, axis=1)


def _bar_term(scene: Scene, omega: float, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros(len(x), dtype=complex)
    if not scene.bars:
        return out
    lam = lambda_d(scene, omega)
    for bar in scene.bars:
        d = x - np.asarray(bar.center)
        out += bar.area / (2 * math.pi * lam) * (d @ a) / np.einsum("ij,ij->i", d, d)
    return out


def high_freq_perturbation(scene: Scene, omega: float, a, points, *,
                           n_gauss: int = N_GAUSS) -> BoundarySamples:
    """Leading-order trace of (-1/2 I + K)[u - u0] for unit background and drive a . nu."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(points, dtype=float).reshape(-1, 2)
    values = _bar_term(scene, omega, a, x)
    if scene.cracks:
        lam = lambda_c(scene, omega)
        for crack in scene.cracks:
            pts = crack.points
            for p0, p1, tau, nu in zip(pts[:-1], pts[1:], crack.tangents, crack.normals):
                Aa = crack_polarization(lam, tau, nu).matrix @ a
                nodes, weights = _panels(p0, p1, x, n_gauss)
                d = x[:, None, :] - nodes[None, :, :]
                kernel = (d @ Aa) / np.einsum("ijk,ijk->ij", d, d)
                values += crack.half_thickness / (2 * math.pi) * (kernel @ weights)
    return BoundarySamples(x, values, a, omega)


# ---------------------------------------------------------------------------
# meromorphic functions


@dataclass(frozen=True)
class PoleSet:
    """Endpoints with log coefficients and centres with dipole coefficients (complex)."""

    P: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    Q: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    c: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    z: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    d: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def poles(self) -> np.ndarray:
        return np.concatenate([self.P, self.Q, self.z])


def _as_complex(p) -> complex:
    return complex(p[0], p[1])


def pole_set(scene: Scene, omega: float, a, part: str = "re") -> PoleSet:
    """Coefficients of G_re (``part="re"``) or G_im for straight cracks and disk bars."""
    if part not in ("re", "im"):
        raise ValueError("part must be 're' or 'im'")
    P, Q, c, z, d = [], [], [], [], []
    if scene.cracks:
        lam = lambda_c(scene, omega)
        for k, crack in enumerate(scene.cracks):
            coef = crack_coefficients(crack, a, lam, k)
            P.append(_as_complex(crack.points[0]))
            Q.append(_as_complex(crack.points[-1]))
            c.append(coef.c_re if part == "re" else coef.c_im)
    if scene.bars:
        lam = lambda_d(scene, omega)
        for k, bar in enumerate(scene.bars):
            coef = bar_coefficients(bar, a, lam, k)
            z.append(_as_complex(bar.center))
            d.append(coef.d_re if part == "re" else coef.d_im)
    arr = lambda v: np.asarray(v, dtype=complex)  # noqa: E731
    return PoleSet(arr(P), arr(Q), arr(c), arr(z), arr(d))


def _check_points(poles: PoleSet, x: np.ndarray, tol: float):
    for p in poles.poles():
        if np.any(np.abs(x - p) <= tol * max(1.0, abs(p))):
            raise AtPole(f"evaluation point coincides with pole {p}")


def g_evaluate(poles: PoleSet, x, *, tol: float = 1e-12) -> np.ndarray:
    """Principal-branch G; the cut of each log term is the segment P_k Q_k itself."""
    x = np.asarray(x, dtype=complex)
    _check_points(poles, x, tol)
    out = np.zeros(x.shape, dtype=complex)
    for P, Q, c in zip(poles.P, poles.Q, poles.c):
        ratio = (x - Q) / (x - P)
        on_cut = (ratio.real <= 0) & (np.abs(ratio.imag) <= tol * np.abs(ratio))
        if np.any(on_cut):
            raise OnBranchCut("evaluation point lies on a crack segment")
        out += c * np.log(ratio)
    for z, d in zip(poles.z, poles.d):
        out += d / (x - z)
    return out


def dg_from_poles(poles: PoleSet, x, *, tol: float = 1e-12) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    _check_points(poles, x, tol)
    out = np.zeros(x.shape, dtype=complex)
    for P, Q, c in zip(poles.P, poles.Q, poles.c):
        out += c * (1 / (x - Q) - 1 / (x - P))
    for z, d in zip(poles.z, poles.d):
        out -= d / (x - z) ** 2
    return out


def g_re_evaluate(scene: Scene, omega: float, a, x) -> np.ndarray:
    return g_evaluate(pole_set(scene, omega, a, "re"), x)


def g_im_evaluate(scene: Scene, omega: float, a, x) -> np.ndarray:
    return g_evaluate(pole_set(scene, omega, a, "im"), x)


def dg_evaluate(scene: Scene, omega: float, a, x, part: str = "re") -> np.ndarray:
    return dg_from_poles(pole_set(scene, omega, a, part), x)


# ---------------------------------------------------------------------------
# low-frequency expansion


def low_freq_perturbation(scene: Scene, omega: float, a, points, crack_flux, *,
                          n_gauss: int = 8) -> BoundarySamples:
    """Bar dipoles plus the double layer of the crack jumps [u] = (2 delta / lambda_c) du/dnu."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(points, dtype=float).reshape(-1, 2)
    values = _bar_term(scene, omega, a, x)
    if not scene.cracks:
        return BoundarySamples(x, values, a, omega)
    if crack_flux is None:
        raise MissingFluxData("crack flux samples are required for cracked scenes")
    lam = lambda_c(scene, omega)
    t, w = np.polynomial.legendre.leggauss(n_gauss)
    s = (t + 1) / 2
    for k, crack in enumerate(scene.cracks):
        try:
            flux: CrackFlux = crack_flux[k]
        except (KeyError, IndexError) as exc:
            raise MissingFluxData(f"no flux samples for crack {k + 1}") from exc
        if flux is None:
            raise MissingFluxData(f"no flux samples for crack {k + 1}")
        jump = 2 * crack.half_thickness / lam * np.asarray(flux.flux)
        values += _double_layer(flux.endpoints, flux.normals, jump, x, s, w / 2)
    return BoundarySamples(x, values, a, omega)


def _double_layer(endpoints, normals, density, x, s, w) -> np.ndarray:
    """(1/2pi) sum_e density_e int_e (x' - x) . nu_e / |x - x'|^2 ds'."""
    p0, p1 = endpoints[:, 0], endpoints[:, 1]
    lengths = np.linalg.norm(p1 - p0, axis=1)
    nodes = p0[:, None, :] + s[None, :, None] * (p1 - p0)[:, None, :]  # (E, G, 2)
    out = np.zeros(len(x), dtype=complex)
    for i, xi in enumerate(x):
        d = nodes - xi
        kernel = np.einsum("egk,ek->eg", d, normals) / np.einsum("egk,egk->eg", d, d)
        out[i] = np.sum(density * lengths * (kernel @ w))
    return out / (2 * math.pi)


# ---------------------------------------------------------------------------
# boundary data to G


def uniform_resample(samples: BoundarySamples, n: int) -> BoundarySamples:
    """Periodic cubic interpolation of boundary values onto ``n`` equally spaced angles."""
    theta = np.mod(samples.angles, 2 * math.pi)
    order = np.argsort(theta)
    theta, values = theta[order], samples.values[order]
    theta = np.append(theta, theta[0] + 2 * math.pi)
    values = np.append(values, values[0])
    spline = CubicSpline(theta, values, bc_type="periodic")
    grid = 2 * math.pi * np.arange(n) / n
    R = samples.radius
    pts = R * np.column_stack([np.cos(grid), np.sin(grid)])
    return BoundarySamples(pts, spline(np.where(grid < theta[0], grid + 2 * math.pi, grid)),
                           samples.a, samples.omega)


def analytic_completion(real_trace: np.ndarray) -> np.ndarray:
    """Boundary values of the function holomorphic outside the circle, vanishing at
    infinity, whose real part is ``real_trace`` (uniform samples, mean removed)."""
    h = np.fft.fft(np.asarray(real_trace, dtype=float))
    n = len(h)
    keep = np.zeros(n, dtype=complex)
    neg = np.arange(n // 2 + 1, n)
    keep[neg] = 2 * h[neg]
    if n % 2 == 0:
        keep[n // 2] = h[n // 2]
    return np.fft.ifft(keep)


def dg_from_boundary(perturbation: BoundarySamples, part: str = "re") -> BoundarySamples:
    """Samples of dG/dx on the circle from uniform samples of (-1/2 I + K)[u - u0]."""
    _check_uniform_circle(perturbation.points)
    v = perturbation.values
    real_trace = -(v.real if part == "re" else v.imag)
    G = analytic_completion(real_trace - real_trace.mean())
    n = len(G)
    k = np.fft.fftfreq(n, d=1.0 / n)
    dG_dtheta = np.fft.ifft(1j * k * np.fft.fft(G))
    x = perturbation.points[:, 0] + 1j * perturbation.points[:, 1]
    return perturbation.with_values(dG_dtheta / (1j * x))


# ---------------------------------------------------------------------------
# pole recovery


@dataclass(frozen=True)
class PoleReport:
    cracks: list
    bars: list
    residual: float
    singular_values: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "cracks": [{"P": [p.real, p.imag], "Q": [q.real, q.imag], "residue": [c.real, c.imag]}
                       for p, q, c in self.cracks],
            "bars": [{"z": [z.real, z.imag], "strength": [d.real, d.imag]} for z, d in self.bars],
            "residual": self.residual,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def boundary_moments(samples: BoundarySamples, n_moments: int) -> tuple[np.ndarray, float]:
    """m_n = mu_n / R^n with mu_n = (1/2pi i) closed integral of x^n dG dx, n < n_moments."""
    R = _check_uniform_circle(samples.points)
    x = samples.points[:, 0] + 1j * samples.points[:, 1]
    xi = x / R
    weights = x * samples.values / len(samples)
    powers = xi[None, :] ** np.arange(n_moments)[:, None]
    return powers @ weights, R


def _model_moments(roots, amps, centers, dips, R, n):
    """Moments of sum amps/(x - R roots) - sum dips/(x - R centers)^2 in scaled units."""
    k = np.arange(n)[:, None]
    m = np.zeros(n, dtype=complex)
    if len(roots):
        m += (roots[None, :] ** k) @ amps
    if len(centers):
        m -= (k * centers[None, :] ** np.maximum(k - 1, 0)) @ dips / R
    return m


def _polish(m, roots, amps, centers, dips, R, iterations: int = 50):
    """Damped Gauss-Newton on the moment equations (the model is holomorphic in its
    parameters). Steps are halved until the residual drops, so a poor model fit
    never leaves the starting guess worse off."""
    n = len(m)
    k = np.arange(n)[:, None].astype(float)
    ns, nd = len(roots), len(centers)

    def residual(params):
        with np.errstate(all="ignore"):
            r = m - _model_moments(*params, R, n)
        norm = np.linalg.norm(r)
        return r, (norm if np.isfinite(norm) else np.inf)

    params = (roots, amps, centers, dips)
    r, norm = residual(params)
    for _ in range(iterations):
        roots, amps, centers, dips = params
        cols = []
        if ns:
            cols.append(k * roots ** np.maximum(k - 1, 0) * amps)        # d/d root
            cols.append(roots ** k)                                       # d/d amplitude
        if nd:
            cols.append(-k * (k - 1) * centers ** np.maximum(k - 2, 0) * dips / R)
            cols.append(-k * centers ** np.maximum(k - 1, 0) / R)
        J = np.hstack(cols)
        scale = np.abs(J).max(axis=0)
        scale[scale == 0] = 1.0
        step = np.linalg.lstsq(J / scale, r, rcond=None)[0] / scale
        t = 1.0
        while t > 1e-6:
            s = t * step
            trial = (roots + s[:ns], amps + s[ns:2 * ns], centers + s[2 * ns:2 * ns + nd],
                     dips + s[2 * ns + nd:])
            r_new, norm_new = residual(trial)
            if norm_new < norm:
                break
            t /= 2
        else:
            break
        params, r, norm = trial, r_new, norm_new
        size = np.concatenate([trial[0], trial[2]])
        if np.abs(s).max() < 1e-15 * max(1.0, np.abs(size).max(initial=0)):
            break
    return params


def _pair_double_roots(roots: np.ndarray, n_double: int):
    """Greedily merge the ``n_double`` closest root pairs; return (simple, doubles)."""
    roots = list(roots)
    doubles = []
    for _ in range(n_double):
        best = None
        for i in range(len(roots)):
            for j in range(i + 1, len(roots)):
                dist = abs(roots[i] - roots[j])
                if best is None or dist < best[0]:
                    best = (dist, i, j)
        _, i, j = best
        doubles.append((roots[i] + roots[j]) / 2)
        roots = [r for t, r in enumerate(roots) if t not in (i, j)]
    return np.asarray(roots, dtype=complex), np.asarray(doubles, dtype=complex)


def _pair_endpoints(roots: np.ndarray, amps: np.ndarray):
    """Match simple poles into segments by opposite residues."""
    left = list(range(len(roots)))
    pairs = []
    while left:
        best = None
        for a_i, i in enumerate(left):
            for j in left[a_i + 1:]:
                mismatch = abs(amps[i] + amps[j]) / max(abs(amps[i]), abs(amps[j]), 1e-300)
                if best is None or mismatch < best[0]:
                    best = (mismatch, i, j)
        _, i, j = best
        left = [t for t in left if t not in (i, j)]
        # P is the endpoint with the lexicographically smaller coordinates
        p, q = sorted((i, j), key=lambda t: (round(roots[t].real, 12), roots[t].imag))
        pairs.append((p, q))
    return pairs


def recover_poles(samples: BoundarySamples, n_cracks_hint: int, n_bars_hint: int, *,
                  n_moments: int | None = None, rank_tol: float = 1e-13) -> PoleReport:
    """Recover segment endpoints and bar centres from samples of dG on the circle."""
    order = 2 * n_cracks_hint + 2 * n_bars_hint
    if n_cracks_hint < 0 or n_bars_hint < 0:
        raise ValueError("pole count hints must be non-negative")
    if len(samples) < max(4 * order, 8):
        raise NonUniformSampling(f"need at least {4 * order} boundary samples")
    n_moments = n_moments or min(len(samples) // 2, max(3 * order, 2 * order + 4))
    m, R = boundary_moments(samples, n_moments)
    x = samples.points[:, 0] + 1j * samples.points[:, 1]
    scale = np.abs(samples.values).max(initial=0.0)
    if order == 0:
        return PoleReport([], [], float(scale))
    if np.abs(m).max() <= 1e-10 * scale:
        # data holomorphic inside the circle: nothing to locate
        raise RankDeficient("boundary data carry no singularities inside the circle")
    # Hankel recurrence: sum_i coef_i m_{n+i} = -m_{n+order}
    H = np.array([m[i:i + order] for i in range(n_moments - order)])
    sv = np.linalg.svd(H, compute_uv=False)
    if sv[0] == 0 or sv[-1] < rank_tol * sv[0]:
        raise RankDeficient(f"moment data support fewer than {order} poles")
    coef = np.linalg.lstsq(H, -m[order:n_moments], rcond=None)[0]
    roots = np.roots(np.concatenate([[1.0], coef[::-1]]))
    simple, doubles = _pair_double_roots(roots, n_bars_hint)
    # linear amplitudes for the current root guess
    k = np.arange(n_moments)[:, None]
    V = np.hstack([simple[None, :] ** k, -k * doubles[None, :] ** np.maximum(k - 1, 0) / R])
    lin = np.linalg.lstsq(V, m, rcond=None)[0]
    amps, dips = lin[:len(simple)], lin[len(simple):]
    simple, amps, doubles, dips = _polish(m, simple, amps, doubles, dips, R)
    if np.any(np.abs(np.concatenate([simple, doubles])) >= 1.0):
        raise PoleOutsideCircle("a recovered pole lies on or outside the sampling circle")
    cracks = [(R * simple[p], R * simple[q], amps[q]) for p, q in _pair_endpoints(simple, amps)]
    bars = sorted(((R * z, d) for z, d in zip(doubles, dips)), key=lambda b: (b[0].real, b[0].imag))
    fitted = PoleSet(np.array([c[0] for c in cracks]), np.array([c[1] for c in cracks]),
                     np.array([c[2] for c in cracks]), np.array([b[0] for b in bars]),
                     np.array([b[1] for b in bars]))
    misfit = np.abs(dg_from_poles(fitted, x) - samples.values).max()
    return PoleReport(cracks, bars, float(misfit / scale) if scale > 0 else float(misfit), sv)


def estimate_order(samples: BoundarySamples, n_moments: int = 40, threshold: float = 1e-8) -> int:
    """Number of Hankel singular values above ``threshold`` times the largest."""
    m, _ = boundary_moments(samples, n_moments)
    half = n_moments // 2
    H = np.array([m[i:i + half] for i in range(n_moments - half)])
    sv = np.linalg.svd(H, compute_uv=False)
    return int(np.sum(sv > threshold * sv[0])) if sv[0] > 0 else 0
