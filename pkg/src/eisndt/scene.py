"""Phantom geometry and materials.

A scene is a disk of radius ``domain_radius`` holding thin insulating cracks
(polylines thickened by a half-thickness) and disk-shaped reinforcing bars.
All quantities are SI.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometry, PointOutsideDomain, SeparationViolation, UnknownModel

EPS0 = 8.85e-12  # F/m, value used for the material table of the built-in models


@dataclass(frozen=True)
class Material:
    sigma: float
    epsilon: float

    def __post_init__(self):
        for name in ("sigma", "epsilon"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DegenerateGeometry(f"material {name} must be finite and >= 0, got {value}")

    def admittivity(self, omega: float) -> complex:
        """gamma = sigma + i omega epsilon."""
        return complex(self.sigma, omega * self.epsilon)


@dataclass(frozen=True)
class Crack:
    polyline: tuple
    half_thickness: float

    def __post_init__(self):
        pts = tuple(tuple(float(c) for c in p) for p in self.polyline)
        object.__setattr__(self, "polyline", pts)

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.polyline, dtype=float)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    @property
    def tangents(self) -> np.ndarray:
        """Unit tangent per segment, pointing from vertex i to vertex i+1."""
        d = np.diff(self.points, axis=0)
        return d / np.linalg.norm(d, axis=1)[:, None]

    @property
    def normals(self) -> np.ndarray:
        """Unit normal per segment: the tangent rotated by +90 degrees (the "+" side)."""
        t = self.tangents
        return np.column_stack([-t[:, 1], t[:, 0]])

    @property
    def is_segment(self) -> bool:
        return len(self.polyline) == 2

    def distance(self, point) -> float:
        """Distance to the centre curve, with flat caps at both ends.

        Points whose projection falls beyond an endpoint (off the end of the
        first or last segment) are reported at infinite distance.
        """
        p = np.asarray(point, dtype=float)
        pts = self.points
        a, d = pts[:-1], np.diff(pts, axis=0)
        t = np.einsum("ij,ij->i", p - a, d) / np.einsum("ij,ij->i", d, d)
        dist = np.linalg.norm(a + np.clip(t, 0.0, 1.0)[:, None] * d - p, axis=1)
        k = int(np.argmin(dist))
        if (k == 0 and t[0] < 0.0) or (k == len(t) - 1 and t[-1] > 1.0):
            return math.inf
        return float(dist[k])

    def contains(self, point) -> bool:
        return self.distance(point) <= self.half_thickness


@dataclass(frozen=True)
class Bar:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def contains(self, point) -> bool:
        return math.dist(point, self.center) <= self.radius


# Table of admittivities used by the three built-in phantoms.
CONCRETE = Material(sigma=1.0, epsilon=1e4 * EPS0)
STEEL = Material(sigma=1e5, epsilon=1e6 * EPS0)
AIR_GAP = Material(sigma=1e-6, epsilon=1e2 * EPS0)


@dataclass(frozen=True)
class Scene:
    domain_radius: float
    cracks: tuple = ()
    bars: tuple = ()
    mat_crack: Material = AIR_GAP
    mat_bar: Material = STEEL
    mat_background: Material = CONCRETE
    d0: float = 0.005

    def __post_init__(self):
        object.__setattr__(self, "cracks", tuple(self.cracks))
        object.__setattr__(self, "bars", tuple(self.bars))

    @property
    def materials(self) -> dict:
        return {"crack": self.mat_crack, "bar": self.mat_bar, "background": self.mat_background}

    def homogeneous(self) -> "Scene":
        """Same disk and materials without any defect."""
        return replace(self, cracks=(), bars=())

    def without_cracks(self) -> "Scene":
        return replace(self, cracks=())

    def without_bars(self) -> "Scene":
        return replace(self, bars=())

    def with_crack_thickness(self, half_thickness: float) -> "Scene":
        """Copy with every crack rethickened, for scaled-thickness studies."""
        cracks = tuple(replace(c, half_thickness=half_thickness) for c in self.cracks)
        return replace(self, cracks=cracks)

    def region(self, point) -> tuple:
        """("crack", k), ("bar", k) or ("background", None) for a point."""
        for k, crack in enumerate(self.cracks):
            if crack.contains(point):
                return ("crack", k)
        for k, bar in enumerate(self.bars):
            if bar.contains(point):
                return ("bar", k)
        return ("background", None)

    # -- serialisation -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "domain_radius": self.domain_radius,
            "d0": self.d0,
            "materials": {
                name: {"sigma": m.sigma, "epsilon": m.epsilon} for name, m in self.materials.items()
            },
            "cracks": [
                {"points": [list(p) for p in c.polyline], "half_thickness": c.half_thickness}
                for c in self.cracks
            ],
            "bars": [{"center": list(b.center), "radius": b.radius} for b in self.bars],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scene":
        mats = data.get("materials", {})

        def mat(name, default):
            if name not in mats:
                return default
            return Material(float(mats[name]["sigma"]), float(mats[name]["epsilon"]))

        return cls(
            domain_radius=float(data["domain_radius"]),
            cracks=tuple(
                Crack(tuple(map(tuple, c["points"])), float(c["half_thickness"]))
                for c in data.get("cracks", [])
            ),
            bars=tuple(Bar(tuple(b["center"]), float(b["radius"])) for b in data.get("bars", [])),
            mat_crack=mat("crack", AIR_GAP),
            mat_bar=mat("bar", STEEL),
            mat_background=mat("background", CONCRETE),
            d0=float(data.get("d0", 0.005)),
        )

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text_or_path) -> "Scene":
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            text = Path(text_or_path).read_text()
        return cls.from_dict(json.loads(text))


def _polyline_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Minimum distance between two polylines (segment-segment brute force)."""
    best = math.inf
    for a0, a1 in zip(p[:-1], p[1:]):
        for b0, b1 in zip(q[:-1], q[1:]):
            best = min(best, _segment_distance(a0, a1, b0, b1))
    return best


def _point_segment_distance(x, a, b) -> float:
    d = b - a
    t = np.clip(np.dot(x - a, d) / np.dot(d, d), 0.0, 1.0)
    return float(np.linalg.norm(a + t * d - x))


def _segment_distance(a0, a1, b0, b1) -> float:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a0, a1, b0), orient(a0, a1, b1)
    o3, o4 = orient(b0, b1, a0), orient(b0, b1, a1)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return 0.0
    return min(
        _point_segment_distance(a0, b0, b1),
        _point_segment_distance(a1, b0, b1),
        _point_segment_distance(b0, a0, a1),
        _point_segment_distance(b1, a0, a1),
    )


def polyline_point_distance(points: np.ndarray, x) -> float:
    x = np.asarray(x, dtype=float)
    return min(_point_segment_distance(x, a, b) for a, b in zip(points[:-1], points[1:]))


def separation_report(scene: Scene) -> list:
    """Every pairwise distance constrained by the separation conditions.

    Returns a list of ``(first, second, distance, required)`` tuples.
    """
    R, d0 = scene.domain_radius, scene.d0
    rows = []
    for i, c in enumerate(scene.cracks):
        reach = float(np.max(np.linalg.norm(c.points, axis=1)))
        edge = math.hypot(reach, c.half_thickness)
        rows.append((f"crack {i + 1}", "boundary", R - edge, d0))
    for i, b in enumerate(scene.bars):
        rows.append((f"bar {i + 1}", "boundary", R - math.hypot(*b.center) - b.radius, d0))
    for (i, c1), (j, c2) in combinations(enumerate(scene.cracks), 2):
        gap = _polyline_distance(c1.points, c2.points) - c1.half_thickness - c2.half_thickness
        rows.append((f"crack {i + 1}", f"crack {j + 1}", gap, d0))
    for (i, b1), (j, b2) in combinations(enumerate(scene.bars), 2):
        gap = math.dist(b1.center, b2.center) - b1.radius - b2.radius
        rows.append((f"bar {i + 1}", f"bar {j + 1}", gap, d0))
    for i, c in enumerate(scene.cracks):
        for j, b in enumerate(scene.bars):
            gap = polyline_point_distance(c.points, b.center) - b.radius - c.half_thickness
            rows.append((f"crack {i + 1}", f"bar {j + 1}", gap, 2 * d0))
    return rows


def _check_geometry(scene: Scene):
    if not (math.isfinite(scene.domain_radius) and scene.domain_radius > 0):
        raise DegenerateGeometry(f"domain radius must be positive, got {scene.domain_radius}")
    if not scene.d0 > 0:
        raise DegenerateGeometry(f"d0 must be positive, got {scene.d0}")
    if not scene.mat_background.sigma > 0:
        raise DegenerateGeometry("background conductivity must be positive")
    for i, c in enumerate(scene.cracks):
        pts = c.points
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2 or not np.all(np.isfinite(pts)):
            raise DegenerateGeometry(f"crack {i + 1}: polyline needs at least two finite 2D points")
        if np.any(c.segment_lengths <= 0):
            raise DegenerateGeometry(f"crack {i + 1}: repeated consecutive points")
        if not c.half_thickness > 0:
            raise DegenerateGeometry(f"crack {i + 1}: half-thickness must be positive")
        if c.half_thickness > c.length / 20:
            raise DegenerateGeometry(
                f"crack {i + 1}: half-thickness {c.half_thickness} exceeds length/20 = {c.length / 20}"
            )
    for i, b in enumerate(scene.bars):
        if not (math.isfinite(b.radius) and b.radius > 0):
            raise DegenerateGeometry(f"bar {i + 1}: radius must be positive, got {b.radius}")


def validate_scene(scene: Scene) -> Scene:
    """Return ``scene`` unchanged if its geometry and separations are valid."""
    _check_geometry(scene)
    for first, second, distance, required in separation_report(scene):
        if distance < required:
            raise SeparationViolation(first, second, distance, required)
    return scene


def admittivity_at(scene: Scene, point, omega: float) -> complex:
    """Complex admittivity sigma + i omega epsilon at ``point``."""
    x, y = float(point[0]), float(point[1])
    if math.hypot(x, y) > scene.domain_radius * (1 + 1e-12):
        raise PointOutsideDomain(f"({x}, {y}) lies outside the disk of radius {scene.domain_radius}")
    kind, _ = scene.region((x, y))
    return scene.materials[kind].admittivity(omega)


def _sampled_curve(fn, x0, x1, n):
    xs = np.linspace(x0, x1, n + 1)
    return tuple((float(x), float(fn(x))) for x in xs)


def builtin_model(model_id: int) -> Scene:
    """Built-in test scene 1, 2 or 3 on the disk of radius 0.1 m."""
    R = 0.1
    if model_id == 1:
        bars = (Bar((-0.05, 0.0), 0.015), Bar((0.05, 0.0), 0.015))
        cracks = (
            Crack(((-0.07, 0.03), (0.07, 0.03)), 5e-5),
            Crack(((-0.07, -0.03), (0.07, -0.03)), 2.5e-5),
        )
    elif model_id == 2:
        bars = (Bar((-0.05, 0.0), 0.015), Bar((0.05, 0.0), 0.015))
        cracks = (
            Crack(((-0.07, 0.03), (0.07, 0.03)), 2.5e-5),
            Crack(((-0.07, -0.03), (0.07, -0.03)), 2.5e-5),
            Crack(((-0.08, -0.03), (-0.08, 0.03)), 2.5e-5),
            Crack(((0.08, -0.03), (0.08, 0.03)), 2.5e-5),
        )
    elif model_id == 3:
        bars = (Bar((-0.045, 0.02), 0.02), Bar((0.05, 0.03), 0.015))
        # the curves are our own choice; only their thickness and the bars are prescribed
        upper = _sampled_curve(lambda x: 0.066 + 0.006 * math.sin(2 * math.pi * (x + 0.05) / 0.09),
                               -0.05, 0.04, 24)
        lower = _sampled_curve(lambda x: -0.035 + 0.01 * math.sin(2 * math.pi * x / 0.12),
                               -0.06, 0.06, 32)
        cracks = (Crack(upper, 5e-5), Crack(lower, 5e-5))
    else:
        raise UnknownModel(f"unknown built-in model {model_id!r}; expected 1, 2 or 3")
    return Scene(domain_radius=R, cracks=cracks, bars=bars, d0=0.005)
