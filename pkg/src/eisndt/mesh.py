"""Triangulated disk with 16 electrode arcs and region labels.

Meshes are produced with Shewchuk's Triangle (constrained, quality
conforming) and then refined until a geometric sizing function is met.
Everything is deterministic: the same scene and parameters give the same
arrays bit for bit.

Region labels are integers: 0 is the background, ``1 + k`` is crack ``k``
and ``1 + n_cracks + k`` is bar ``k``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import triangle
from scipy.spatial import cKDTree
from shapely.geometry import LineString, Polygon, box

from .errors import InfeasibleResolution, MeshBudgetExceeded
from .scene import Scene

N_ELECTRODES = 16
DEFAULT_CAP = 200_000
_CRACK_MARKER = 10
_EQUILATERAL = math.sqrt(3) / 4
_BOUNDARY_FILL = 0.7


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    triangles: np.ndarray
    region_label: np.ndarray
    electrodes: tuple
    boundary_edges: np.ndarray
    domain_radius: float
    n_cracks: int = 0
    n_bars: int = 0
    interfaces: dict = field(default_factory=dict)
    electrode_centers: np.ndarray = None
    electrode_width: float = 0.0
    crack_mode: str = "strip"
    target_h: float = 0.0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def diameters(self) -> np.ndarray:
        return _diameters(self.nodes, self.triangles)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        """Boundary node indices in counter-clockwise loop order."""
        return self.boundary_edges[:, 0].copy()

    @cached_property
    def boundary_weights(self) -> np.ndarray:
        """Lumped arc-length weight of each node in ``boundary_nodes``."""
        lengths = np.linalg.norm(
            self.nodes[self.boundary_edges[:, 1]] - self.nodes[self.boundary_edges[:, 0]], axis=1
        )
        return 0.5 * (lengths + np.roll(lengths, 1))

    def region_name(self, label: int) -> str:
        if label == 0:
            return "background"
        if label <= self.n_cracks:
            return f"crack_{label}"
        return f"bar_{label - self.n_cracks}"

    def crack_label(self, k: int) -> int:
        return 1 + k

    def bar_label(self, k: int) -> int:
        return 1 + self.n_cracks + k

    # -- export ---------------------------------------------------------
    def export_csv(self, directory) -> dict:
        """Write nodes.csv, triangles.csv and electrodes.csv; return the paths."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "nodes": directory / "nodes.csv",
            "triangles": directory / "triangles.csv",
            "electrodes": directory / "electrodes.csv",
        }
        with open(paths["nodes"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "x", "y"])
            for i, (x, y) in enumerate(self.nodes):
                w.writerow([i, repr(float(x)), repr(float(y))])
        with open(paths["triangles"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "n1", "n2", "n3", "region"])
            for i, (t, r) in enumerate(zip(self.triangles, self.region_label)):
                w.writerow([i, *map(int, t), self.region_name(int(r))])
        with open(paths["electrodes"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["electrode_id", "node_id", "order"])
            for k, nodes in enumerate(self.electrodes):
                for order, n in enumerate(nodes):
                    w.writerow([k + 1, int(n), order])
        return paths


def _diameters(nodes, tris) -> np.ndarray:
    p = nodes[tris]
    return np.max(
        np.stack([
            np.linalg.norm(p[:, 0] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 1] - p[:, 2], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 0], axis=1),
        ]),
        axis=0,
    )


def _even_ceil(x: float) -> int:
    n = max(2, math.ceil(x - 1e-9))
    return n + (n % 2)


def electrode_layout(n_electrodes: int, coverage: float):
    """Centre angles and angular width; electrode 1 is centred at angle 0."""
    pitch = 2 * math.pi / n_electrodes
    return pitch * np.arange(n_electrodes), coverage * pitch


def boundary_angles(R: float, h: float, coverage: float, n_electrodes: int = N_ELECTRODES):
    """Angles of boundary vertices: each electrode and each gap uniformly split.

    Arc end points are always vertices; electrode and gap centres are too
    (even subdivision counts), which keeps the layout dihedrally symmetric.
    """
    centers, width = electrode_layout(n_electrodes, coverage)
    pitch = 2 * math.pi / n_electrodes
    gap = pitch - width
    n_e = _even_ceil(width * R / h)
    n_g = _even_ceil(gap * R / h)
    angles = []
    for c in centers:
        start = c - width / 2
        angles.extend(start + width * np.arange(n_e) / n_e)
        angles.extend(c + width / 2 + gap * np.arange(n_g) / n_g)
    return np.asarray(angles)


class _PSLG:
    """Planar straight line graph with vertex de-duplication."""

    def __init__(self, scale: float):
        self.scale = scale
        self.vertices = []
        self.index = {}
        self.segments = {}

    def point(self, p) -> int:
        x, y = float(p[0]), float(p[1])
        if abs(x) < 1e-12 * self.scale:
            x = 0.0
        if abs(y) < 1e-12 * self.scale:
            y = 0.0
        key = (round(x / self.scale, 11), round(y / self.scale, 11))
        if key not in self.index:
            self.index[key] = len(self.vertices)
            self.vertices.append((x, y))
        return self.index[key]

    def polyline(self, pts, marker: int, closed: bool = False):
        ids = [self.point(p) for p in pts]
        if closed:
            ids.append(ids[0])
        for a, b in zip(ids[:-1], ids[1:]):
            if a == b:
                continue
            key = (min(a, b), max(a, b))
            # crack markers take precedence over plain polygon edges
            if key not in self.segments or marker >= _CRACK_MARKER:
                self.segments[key] = marker


def _offset_vertices(points: np.ndarray, sign: float, delta: float) -> np.ndarray:
    d = np.diff(points, axis=0)
    t = d / np.linalg.norm(d, axis=1)[:, None]
    n = np.column_stack([-t[:, 1], t[:, 0]])
    m = np.empty_like(points)
    m[0], m[-1] = n[0], n[-1]
    for i in range(1, len(points) - 1):
        s = n[i - 1] + n[i]
        m[i] = s / (1.0 + np.dot(n[i - 1], n[i]))
    return points + sign * delta * m


def half_strip_polygons(points: np.ndarray, delta: float):
    """The "+" and "-" halves of a flat-capped strip around a polyline."""
    upper = np.vstack([points, _offset_vertices(points, +1.0, delta)[::-1]])
    lower = np.vstack([points, _offset_vertices(points, -1.0, delta)[::-1]])
    return Polygon(upper), Polygon(lower)


def bar_polygon(center, radius: float, n: int) -> np.ndarray:
    """Regular n-gon with the same area as the disk (vertex at angle 0)."""
    r_eq = radius * math.sqrt(2 * math.pi / (n * math.sin(2 * math.pi / n)))
    th = 2 * math.pi * np.arange(n) / n
    return np.column_stack([center[0] + r_eq * np.cos(th), center[1] + r_eq * np.sin(th)])


def _point_polyline_distance(x: np.ndarray, pts: np.ndarray) -> np.ndarray:
    best = np.full(len(x), np.inf)
    for a, b in zip(pts[:-1], pts[1:]):
        d = b - a
        t = np.clip(((x - a) @ d) / (d @ d), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(a + t[:, None] * d - x, axis=1))
    return best


@dataclass
class _Sizing:
    """Target element diameter as a function of position."""

    target_h: float
    grading: float
    features: list  # (kind, geometry, h_min, radius_of_influence)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        h = np.full(len(x), self.target_h)
        for kind, geom, h_min, core in self.features:
            if kind == "line":
                dist = _point_polyline_distance(x, geom)
            else:
                center, radius = geom
                dist = np.abs(np.linalg.norm(x - np.asarray(center), axis=1) - radius)
            h = np.minimum(h, h_min + self.grading * np.maximum(dist - core, 0.0))
        return h


def estimate_strip_elements(scene: Scene, target_h: float) -> float:
    """Rough triangle count needed to resolve every crack strip.

    Each strip is resolved by elements no larger than its half-thickness in
    a band one ``target_h`` wide on either side of the centre curve.
    """
    return sum(
        2.0 * c.length * target_h / (_EQUILATERAL * c.half_thickness**2) for c in scene.cracks
    )


def build_mesh(
    scene: Scene,
    target_h: float,
    electrode_coverage: float = 0.5,
    *,
    cap: int = DEFAULT_CAP,
    crack_mode: str = "strip",
    symmetry: str | None = None,
    interface_h: float | None = None,
    bar_h: float | None = None,
    grading: float = 0.3,
    n_electrodes: int = N_ELECTRODES,
) -> Mesh:
    """Triangulate the disk of ``scene``.

    crack_mode:
        ``"strip"`` meshes each crack as a thin region labelled crack k,
        ``"interface"`` meshes only the centre curves (for the zero-thickness
        solver), ``"both"`` does both on the same triangulation.
    symmetry:
        ``None``; ``"mirror"`` (reflection about the y axis, the scene must be
        mirror symmetric) or ``"dihedral"`` (16-fold, defect-free scenes only).
    """
    if not target_h > 0:
        raise ValueError("target_h must be positive")
    if not 0 < electrode_coverage < 1:
        raise ValueError("electrode_coverage must lie in (0, 1)")
    if crack_mode not in ("strip", "interface", "both"):
        raise ValueError(f"unknown crack_mode {crack_mode!r}")
    R = scene.domain_radius
    if math.pi * R**2 / (_EQUILATERAL * target_h**2) > cap:
        raise MeshBudgetExceeded(f"target_h={target_h} needs more than {cap} triangles")
    strips = crack_mode in ("strip", "both") and scene.cracks
    if strips:
        need = estimate_strip_elements(scene, target_h)
        if need > cap:
            thinnest = min(c.half_thickness for c in scene.cracks)
            raise InfeasibleResolution(
                f"resolving crack half-thickness {thinnest:g} m needs ~{need:.3g} triangles "
                f"(cap {cap}); use crack_mode='interface' with the zero-thickness solver"
            )
    interface_h = interface_h or target_h / 2
    sizing = _make_sizing(scene, target_h, crack_mode, interface_h, bar_h, grading)

    # boundary vertices are frozen ('Y'), so leave headroom below target_h
    angles = boundary_angles(R, _BOUNDARY_FILL * target_h, electrode_coverage, n_electrodes)
    if symmetry is None:
        region = None
    elif symmetry == "mirror":
        labels = _mirror_labels(scene)
        region = box(0.0, -2 * R, 2 * R, 2 * R)
    elif symmetry == "dihedral":
        if scene.cracks or scene.bars:
            raise ValueError("dihedral symmetry is only available for defect-free scenes")
        region = "wedge"
    else:
        raise ValueError(f"unknown symmetry {symmetry!r}")

    pslg, seeds = _build_pslg(scene, angles, region, crack_mode, sizing, n_electrodes)
    nodes, tris, attrs, segs, seg_markers = _triangulate(pslg, seeds, sizing, target_h, cap)

    if symmetry == "mirror":
        nodes, tris, attrs, segs, seg_markers = _mirror(nodes, tris, attrs, segs, seg_markers, labels, R)
    elif symmetry == "dihedral":
        nodes, tris, attrs, segs, seg_markers = _dihedral(nodes, tris, attrs, segs, seg_markers,
                                                          n_electrodes, R)
    if len(tris) > cap:
        raise MeshBudgetExceeded(f"mesh has {len(tris)} triangles (cap {cap})")

    return _assemble_mesh(scene, nodes, tris, attrs, segs, seg_markers, electrode_coverage,
                          n_electrodes, crack_mode, target_h)


def _make_sizing(scene, target_h, crack_mode, interface_h, bar_h, grading) -> _Sizing:
    features = []
    for c in scene.cracks:
        if crack_mode in ("strip", "both"):
            features.append(("line", c.points, min(target_h, c.half_thickness), c.half_thickness))
        if crack_mode in ("interface", "both"):
            features.append(("line", c.points, min(target_h, interface_h), 0.0))
    for b in scene.bars:
        h_b = bar_h or min(target_h, 2 * math.pi * b.radius / 24)
        features.append(("circle", (b.center, b.radius), min(target_h, h_b), 0.0))
    return _Sizing(target_h, grading, features)


def _mirror_labels(scene: Scene) -> np.ndarray:
    """Region label permutation induced by reflection about the y axis."""

    def match(keys, mirrored, what):
        index = {k: i for i, k in enumerate(keys)}
        if len(index) != len(keys) or set(index) != set(mirrored):
            raise ValueError(f"scene {what} are not mirror symmetric about the y axis")
        return [index[k] for k in mirrored]

    def crack_key(pts, delta):
        a = tuple(map(tuple, np.round(pts, 12) + 0.0))
        return min(a, a[::-1]), round(delta, 15)

    def bar_key(x, y, r):
        return round(x, 12) + 0.0, round(y, 12) + 0.0, round(r, 12)

    cracks = match([crack_key(c.points, c.half_thickness) for c in scene.cracks],
                   [crack_key(c.points * [-1.0, 1.0], c.half_thickness) for c in scene.cracks],
                   "cracks")
    bars = match([bar_key(*b.center, b.radius) for b in scene.bars],
                 [bar_key(-b.center[0], b.center[1], b.radius) for b in scene.bars], "bars")
    for b in scene.bars:
        if 0 < abs(b.center[0]) < b.radius:
            raise ValueError("bars straddling the mirror axis are not supported")
    nc = len(scene.cracks)
    return np.array([0] + [1 + j for j in cracks] + [1 + nc + j for j in bars], dtype=np.int64)


def _geoms(obj):
    if obj.is_empty:
        return []
    if hasattr(obj, "geoms"):
        out = []
        for g in obj.geoms:
            out.extend(_geoms(g))
        return out
    return [obj]


def _axis_points(y0: float, y1: float, sizing: _Sizing, fixed: list) -> list:
    """Vertices along the mirror axis spaced by the sizing function."""
    ys = sorted(set([y0, y1] + fixed))
    out = []
    for a, b in zip(ys[:-1], ys[1:]):
        probe = np.column_stack([np.zeros(9), np.linspace(a, b, 9)])
        h = _BOUNDARY_FILL * float(sizing(probe).min())
        n = max(1, math.ceil((b - a) / h))
        out.extend(np.linspace(a, b, n + 1)[:-1].tolist())
    out.append(y1)
    return out


def _ray_points(theta: float, R: float, sizing: _Sizing) -> np.ndarray:
    n = max(2, math.ceil(R / (_BOUNDARY_FILL * sizing.target_h)))
    r = np.linspace(0.0, R, n + 1)
    return np.column_stack([r * math.cos(theta), r * math.sin(theta)])


def _build_pslg(scene, angles, region, crack_mode, sizing, n_electrodes):
    R = scene.domain_radius
    pslg = _PSLG(R)
    seeds = []
    circle = np.column_stack([R * np.cos(angles), R * np.sin(angles)])

    if region is None:
        pslg.polyline(circle, 1, closed=True)
    elif region == "wedge":
        half_pitch = math.pi / n_electrodes
        a = np.mod(angles, 2 * math.pi)
        sel = (a >= -1e-12) & (a <= half_pitch + 1e-12)
        arc = circle[sel][np.argsort(a[sel])]
        pslg.polyline(arc, 1)
        pslg.polyline(_ray_points(0.0, R, sizing), 1)
        pslg.polyline(_ray_points(half_pitch, R, sizing), 1)

    def clip(geom):
        if region is None or region == "wedge":
            return [geom]
        return _geoms(geom.intersection(region))

    for k, c in enumerate(scene.cracks):
        if crack_mode in ("strip", "both"):
            for poly in half_strip_polygons(c.points, c.half_thickness):
                for piece in clip(poly):
                    pslg.polyline(np.asarray(piece.exterior.coords)[:-1], 2, closed=True)
                    rp = piece.representative_point()
                    seeds.append([rp.x, rp.y, 1 + k])
        if crack_mode in ("interface", "both"):
            for piece in clip(LineString(c.points)):
                pslg.polyline(np.asarray(piece.coords), _CRACK_MARKER + k)
    for k, b in enumerate(scene.bars):
        h_b = float(sizing(np.array([[b.center[0] + b.radius, b.center[1]]]))[0])
        n = max(16, math.ceil(2 * math.pi * b.radius / h_b))
        n += (-n) % 4  # keeps the polygon symmetric about both axes through its centre
        for piece in clip(Polygon(bar_polygon(b.center, b.radius, n))):
            pslg.polyline(np.asarray(piece.exterior.coords)[:-1], 3, closed=True)
            rp = piece.representative_point()
            seeds.append([rp.x, rp.y, 1 + len(scene.cracks) + k])

    if region is not None and region != "wedge":
        # right half of the circle plus the mirror axis through every vertex on it
        a = np.arctan2(circle[:, 1], circle[:, 0])
        sel = np.abs(a) <= math.pi / 2 + 1e-12
        arc = circle[sel][np.argsort(a[sel])]
        arc[0], arc[-1] = (0.0, -R), (0.0, R)
        pslg.polyline(arc, 1)
        on_axis = [v[1] for v in pslg.vertices if v[0] == 0.0 and abs(v[1]) < R]
        ys = _axis_points(-R, R, sizing, on_axis)
        pslg.polyline([(0.0, y) for y in ys], 1)
    return pslg, seeds


def _triangulate(pslg: _PSLG, seeds, sizing: _Sizing, target_h: float, cap: int):
    keys = sorted(pslg.segments)
    data = {
        "vertices": np.asarray(pslg.vertices, dtype=float),
        "segments": np.asarray(keys, dtype=np.int32),
        "segment_markers": np.asarray([[pslg.segments[k]] for k in keys], dtype=np.int32),
    }
    if seeds:
        data["regions"] = np.asarray([[x, y, attr, 0.0] for x, y, attr in seeds])
    max_area = _EQUILATERAL * target_h**2
    out = triangle.triangulate(data, f"pq30AYa{max_area:.12e}")
    for _ in range(40):
        nodes, tris = out["vertices"], out["triangles"]
        cent = nodes[tris].mean(axis=1)
        h = sizing(cent)
        diam = _diameters(nodes, tris)
        bad = diam > h * (1 + 1e-9)
        if not bad.any():
            break
        if len(tris) > 4 * cap:
            raise MeshBudgetExceeded(f"refinement exceeded {4 * cap} triangles")
        area = np.full(len(tris), -1.0)
        # thin triangles can meet an area bound and still be too long
        e1, e2 = nodes[tris[:, 1]] - nodes[tris[:, 0]], nodes[tris[:, 2]] - nodes[tris[:, 0]]
        current = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        area[bad] = np.minimum(0.5 * _EQUILATERAL * h[bad] ** 2, 0.5 * current[bad])
        out["triangle_max_area"] = area
        out = triangle.triangulate(out, "rpq30AYa")
    attrs = out.get("triangle_attributes")
    attrs = np.zeros(len(out["triangles"]), int) if attrs is None else np.rint(attrs[:, 0]).astype(int)
    return (out["vertices"], out["triangles"].astype(np.int64), attrs,
            out["segments"].astype(np.int64), out["segment_markers"].ravel().astype(int))


def _merge(nodes_list, tris_list, attrs_list, segs_list, markers_list, scale):
    """Concatenate mesh copies and fuse coincident nodes (first occurrence wins)."""
    offsets = np.cumsum([0] + [len(n) for n in nodes_list])
    all_nodes = np.vstack(nodes_list)
    tree = cKDTree(all_nodes)
    pairs = tree.query_pairs(1e-10 * scale, output_type="ndarray")
    parent = np.arange(len(all_nodes))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in sorted(map(tuple, pairs)):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(all_nodes))])
    unique_roots, new_index = np.unique(roots, return_inverse=True)
    nodes = all_nodes[unique_roots]
    tris = np.vstack([new_index[t + o] for t, o in zip(tris_list, offsets)])
    segs = np.vstack([new_index[s + o] for s, o in zip(segs_list, offsets)])
    segs = np.sort(segs, axis=1)
    markers = np.concatenate(markers_list)
    _, first = np.unique(segs, axis=0, return_index=True)
    first = np.sort(first)
    return nodes, tris, np.concatenate(attrs_list), segs[first], markers[first]


def _mirror(nodes, tris, attrs, segs, markers, labels, R):
    reflected = nodes * np.array([-1.0, 1.0])
    crack = markers >= _CRACK_MARKER
    mirrored_markers = markers.copy()
    mirrored_markers[crack] = _CRACK_MARKER + labels[1 + markers[crack] - _CRACK_MARKER] - 1
    return _merge([nodes, reflected], [tris, tris[:, ::-1]], [attrs, labels[attrs]], [segs, segs],
                  [markers, mirrored_markers], R)


def _dihedral(nodes, tris, attrs, segs, markers, n_electrodes, R):
    pitch = 2 * math.pi / n_electrodes
    copies = []
    for m in range(n_electrodes):
        c, s = math.cos(m * pitch), math.sin(m * pitch)
        rot = np.array([[c, -s], [s, c]])
        copies.append((nodes @ rot.T, tris))
        copies.append(((nodes * [1.0, -1.0]) @ rot.T, tris[:, ::-1]))
    return _merge([p for p, _ in copies], [t for _, t in copies], [attrs] * len(copies),
                  [segs] * len(copies), [markers] * len(copies), R)


def _assemble_mesh(scene, nodes, tris, attrs, segs, markers, coverage, n_electrodes, crack_mode,
                   target_h) -> Mesh:
    R = scene.domain_radius
    # orientation
    p = nodes[tris]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    neg = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) < 0
    tris = tris.copy()
    tris[neg] = tris[neg][:, ::-1]

    # boundary loop from edges used by exactly one triangle
    edges = np.sort(np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    bnodes = np.unique(uniq[counts == 1])
    theta = np.mod(np.arctan2(nodes[bnodes, 1], nodes[bnodes, 0]), 2 * math.pi)
    centers, width = electrode_layout(n_electrodes, coverage)
    start = np.mod(-width / 2, 2 * math.pi)
    order = np.argsort(np.mod(theta - start + 1e-12, 2 * math.pi))
    loop = bnodes[order]
    boundary_edges = np.column_stack([loop, np.roll(loop, -1)])

    electrodes = []
    rel_all = np.mod(theta[order] - start + 1e-12, 2 * math.pi)
    for k, c in enumerate(centers):
        lo = np.mod(c - width / 2 - start, 2 * math.pi)
        sel = (rel_all >= lo - 1e-9) & (rel_all <= lo + width + 1e-9)
        electrodes.append(loop[sel].copy())

    interfaces = {}
    for k in range(len(scene.cracks)):
        e = segs[markers == _CRACK_MARKER + k]
        if len(e):
            interfaces[k] = np.sort(e, axis=1)

    return Mesh(
        nodes=np.ascontiguousarray(nodes, dtype=float),
        triangles=np.ascontiguousarray(tris, dtype=np.int64),
        region_label=attrs.astype(np.int64),
        electrodes=tuple(electrodes),
        boundary_edges=boundary_edges,
        domain_radius=R,
        n_cracks=len(scene.cracks),
        n_bars=len(scene.bars),
        interfaces=interfaces,
        electrode_centers=centers,
        electrode_width=width,
        crack_mode=crack_mode,
        target_h=target_h,
    )


def region_volumes(mesh: Mesh) -> dict:
    """Total area per region name."""
    out = {}
    if mesh.n_triangles == 0:
        return out
    for label in np.unique(mesh.region_label):
        out[mesh.region_name(int(label))] = float(mesh.areas[mesh.region_label == label].sum())
    return out
