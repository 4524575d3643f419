"""Linearised difference imaging from 16-electrode frames.

The sensitivity of the voltage ``V[j, k]`` to a perturbation of the
admittivity on triangle ``p`` about the unit background is
``S[(j, k), p] = area_p * grad U_j . grad U_k``; images solve
``S dgamma = F - F_ref`` with Tikhonov regularisation (or a truncated SVD).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import NonPositiveAlpha, ShapeMismatch
from .forward import Frame, assemble, element_gradients, measure_frame, solve_injection
from .mesh import Mesh
from .scene import Scene

DEFAULT_ALPHA_REL = 1e-4


@dataclass(frozen=True, eq=False)
class SensitivityMatrix:
    """Rows are ordered (j, k) -> 16 j + k with 0-based indices, columns are triangles."""

    matrix: np.ndarray
    mesh: Mesh

    @property
    def n_electrodes(self) -> int:
        return int(round(math.sqrt(self.matrix.shape[0])))

    @cached_property
    def svd(self):
        return np.linalg.svd(self.matrix, full_matrices=False)

    def entry(self, j: int, k: int) -> np.ndarray:
        """Row for the 1-based pair (j, k)."""
        return self.matrix[(j - 1) * self.n_electrodes + (k - 1)]


@dataclass(frozen=True, eq=False)
class AdmittivityImage:
    omega: float
    delta_gamma: np.ndarray

    @property
    def delta_sigma(self) -> np.ndarray:
        return self.delta_gamma.real

    @property
    def delta_epsilon(self) -> np.ndarray:
        if self.omega == 0:
            return np.zeros(len(self.delta_gamma))
        return self.delta_gamma.imag / self.omega

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["triangle_id", "delta_sigma", "delta_epsilon"])
            for i, (s, e) in enumerate(zip(self.delta_sigma, self.delta_epsilon)):
                w.writerow([i, repr(float(s)), repr(float(e))])
        return path


def homogeneous_gradients(mesh: Mesh) -> np.ndarray:
    """Per-triangle gradients of the 16 unit-admittivity injection potentials, shape (16, N_T, 2)."""
    scene = Scene(mesh.domain_radius)
    system = assemble(mesh, scene, 0.0)
    grads = element_gradients(mesh)
    out = []
    for j in range(1, len(mesh.electrodes) + 1):
        u = solve_injection(system, mesh, j).values.real
        out.append(np.einsum("ti,tid->td", u[mesh.triangles], grads))
    return np.asarray(out)


def sensitivity_matrix(mesh: Mesh) -> SensitivityMatrix:
    g = homogeneous_gradients(mesh)
    n = g.shape[0]
    S = np.einsum("jtd,ktd->jkt", g, g) * mesh.areas
    return SensitivityMatrix(S.reshape(n * n, -1), mesh)


def reconstruct_frame(S: SensitivityMatrix, frame: Frame, reference: Frame, alpha: float | None = None,
                      *, alpha_rel: float = DEFAULT_ALPHA_REL, method: str = "tikhonov",
                      rank: int | None = None) -> AdmittivityImage:
    """Regularised least squares for S dgamma = F - F_ref.

    ``alpha`` defaults to ``alpha_rel`` times the largest squared singular
    value. ``method="tsvd"`` keeps the singular values above
    ``sqrt(alpha)`` (or the leading ``rank`` of them).
    """
    if frame.V.shape != reference.V.shape or frame.V.size != S.matrix.shape[0]:
        raise ShapeMismatch(f"frames {frame.V.shape}/{reference.V.shape} do not match S {S.matrix.shape}")
    if not math.isclose(frame.omega, reference.omega, rel_tol=1e-12, abs_tol=1e-12):
        raise ShapeMismatch("frame and reference were measured at different frequencies")
    U, sv, Vt = S.svd
    if alpha is None:
        if not alpha_rel > 0:
            raise NonPositiveAlpha("alpha_rel must be positive")
        alpha = alpha_rel * sv[0] ** 2
    if not alpha > 0:
        raise NonPositiveAlpha("alpha must be positive")
    rhs = (frame.V - reference.V).ravel()
    if method == "tikhonov":
        filt = sv / (sv**2 + alpha)
    elif method == "tsvd":
        keep = np.arange(len(sv)) < rank if rank is not None else sv >= math.sqrt(alpha)
        filt = np.where(keep, 1.0 / np.where(sv > 0, sv, 1.0), 0.0)
    else:
        raise ValueError(f"unknown method {method!r}")
    # S is real: apply the filter to real and imaginary data together
    dgamma = Vt.T @ (filt * (U.T @ rhs))
    return AdmittivityImage(frame.omega, dgamma)


def sweep(scene: Scene, mesh: Mesh, frequencies_hz, alpha_rel: float = DEFAULT_ALPHA_REL, *,
          inverse_mesh: Mesh | None = None, S: SensitivityMatrix | None = None,
          crack_model: str | None = None) -> list[AdmittivityImage]:
    """Simulate F and the defect-free F_ref on ``mesh`` and image each frequency.

    The images live on ``inverse_mesh`` (default: ``mesh``), which decouples
    data generation from inversion.
    """
    frequencies_hz = list(frequencies_hz)
    if not frequencies_hz:
        raise ValueError("at least one frequency is required")
    if any(f < 0 for f in frequencies_hz):
        raise ValueError("frequencies must be non-negative")
    S = S or sensitivity_matrix(inverse_mesh or mesh)
    reference_scene = scene.homogeneous()
    images = []
    for f in frequencies_hz:
        omega = 2 * math.pi * f
        F = measure_frame(scene, mesh, omega, crack_model=crack_model)
        F0 = measure_frame(reference_scene, mesh, omega)
        images.append(reconstruct_frame(S, F, F0, alpha_rel=alpha_rel))
    return images


def _polyline_distance(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    best = np.full(len(points), np.inf)
    for a, b in zip(poly[:-1], poly[1:]):
        d = b - a
        t = np.clip((points - a) @ d / (d @ d), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(a + t[:, None] * d - points, axis=1))
    return best


def defect_neighbourhoods(scene: Scene, mesh: Mesh, dilation: float = 2.0) -> dict:
    """Boolean triangle mask per defect name: centroid within the defect dilated by
    ``dilation`` local element diameters."""
    c, h = mesh.centroids, mesh.diameters
    masks = {}
    for k, crack in enumerate(scene.cracks):
        dist = _polyline_distance(c, crack.points) - crack.half_thickness
        masks[f"crack_{k + 1}"] = _at_least_one(dist <= dilation * h, dist)
    for k, bar in enumerate(scene.bars):
        dist = np.linalg.norm(c - np.asarray(bar.center), axis=1) - bar.radius
        masks[f"bar_{k + 1}"] = _at_least_one(dist <= dilation * h, dist)
    return masks


def _at_least_one(mask: np.ndarray, dist: np.ndarray) -> np.ndarray:
    if not mask.any():
        mask = mask.copy()
        mask[int(np.argmin(dist))] = True
    return mask


def visibility(image: AdmittivityImage, scene: Scene, mesh: Mesh, dilation: float = 2.0) -> dict:
    """Mean |delta_sigma| near each defect over the median |delta_sigma| of the background."""
    if len(image.delta_gamma) != mesh.n_triangles:
        raise ShapeMismatch("image and mesh sizes differ")
    mag = np.abs(image.delta_sigma)
    masks = defect_neighbourhoods(scene, mesh, dilation)
    background = np.ones(mesh.n_triangles, dtype=bool)
    for m in masks.values():
        background &= ~m
    floor = float(np.median(mag[background])) if background.any() else 0.0
    floor = max(floor, 1e-12 * float(mag.max(initial=0.0)), np.finfo(float).tiny)
    return {name: float(mag[m].mean() / floor) for name, m in masks.items()}


# ---------------------------------------------------------------------------
# raster export


def rasterize(mesh: Mesh, values: np.ndarray, size: int = 256) -> np.ndarray:
    """Sample per-triangle values on a size x size grid over the bounding square.

    Row 0 is the top (largest y). Pixels outside the mesh get NaN.
    """
    from matplotlib.tri import Triangulation

    R = mesh.domain_radius
    tri = Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.triangles)
    finder = tri.get_trifinder()
    centers = -R + (np.arange(size) + 0.5) * 2 * R / size
    X, Y = np.meshgrid(centers, centers[::-1])
    idx = finder(X, Y)
    out = np.full(idx.shape, np.nan)
    inside = idx >= 0
    out[inside] = np.asarray(values, dtype=float)[idx[inside]]
    return out


def write_pgm(path, raster: np.ndarray, label: str = "") -> Path:
    """ASCII PGM (P2) with linear min-max scaling; the bounds go in a header comment."""
    path = Path(path)
    finite = raster[np.isfinite(raster)]
    lo = float(finite.min()) if finite.size else 0.0
    hi = float(finite.max()) if finite.size else 0.0
    span = hi - lo
    grey = np.zeros(raster.shape, dtype=int)
    if span > 0:
        grey = np.rint(np.nan_to_num((raster - lo) / span, nan=0.0) * 255).astype(int)
    rows, cols = raster.shape
    lines = ["P2", f"# {label} min={lo!r} max={hi!r}".replace("#  ", "# "), f"{cols} {rows}", "255"]
    lines += [" ".join(map(str, row)) for row in grey]
    path.write_text("\n".join(lines) + "\n")
    return path
