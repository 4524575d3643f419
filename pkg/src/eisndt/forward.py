"""Piecewise-linear finite elements for div(gamma grad u) = 0 on the disk.

Three boundary value problems are solved:

* adjacent-pair current injection through 16 shunt electrodes
  (each electrode is a single shared unknown, zero flux on the gaps),
* the Neumann problem with boundary data ``a . nu`` on the whole circle,
* the zero-thickness crack model, where each crack curve is an internal
  interface with duplicated nodes coupled by a Robin term
  ``gamma_b du/dnu = (gamma_c / 2 delta) [u]``.

All potentials are returned in the boundary-mean-zero gauge.
"""
from __future__ import annotations

import csv
import math
import weakref
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import MeshMismatch, MeshNotInterfaceReady, NonConvergence, SingularSystem
from .mesh import Mesh
from .samples import BoundarySamples, CrackFlux
from .scene import Scene

# ---------------------------------------------------------------------------
# element level


def element_gradients(mesh: Mesh) -> np.ndarray:
    """Gradients of the three hat functions on every triangle, shape (N_T, 3, 2)."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    twice_area = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    return np.stack([b, c], axis=2) / twice_area[:, None, None]


def element_admittivity(mesh: Mesh, scene: Scene, omega: float, *, relative: bool = False,
                        cracks_as_background: bool = False) -> np.ndarray:
    """Per-triangle complex admittivity sigma + i omega epsilon.

    With ``relative`` every value is divided by the background admittivity,
    which is the unit-background normalisation the asymptotic formulas use.
    """
    gb = scene.mat_background.admittivity(omega)
    table = np.empty(1 + mesh.n_cracks + mesh.n_bars, dtype=complex)
    table[0] = gb
    # a scene without cracks (or bars) on a defect mesh is that mesh's reference
    if scene.cracks and not cracks_as_background:
        table[1:1 + mesh.n_cracks] = scene.mat_crack.admittivity(omega)
    else:
        table[1:1 + mesh.n_cracks] = gb
    table[1 + mesh.n_cracks:] = scene.mat_bar.admittivity(omega) if scene.bars else gb
    if relative:
        table = table / gb
    return table[mesh.region_label]


def stiffness(mesh: Mesh, gamma) -> sp.csr_matrix:
    """Global stiffness matrix for per-triangle coefficients ``gamma``."""
    grads = element_gradients(mesh)
    gamma = np.broadcast_to(np.asarray(gamma), (mesh.n_triangles,))
    local = np.einsum("tid,tjd->tij", grads, grads) * (mesh.areas * gamma)[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_nodes
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def boundary_mass(mesh: Mesh) -> sp.csr_matrix:
    """Consistent P1 mass matrix of the boundary polygon."""
    e = mesh.boundary_edges
    length = np.linalg.norm(mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]], axis=1)
    local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    data = (length[:, None, None] * local).ravel()
    rows = np.repeat(e, 2, axis=1).ravel()
    cols = np.tile(e, (1, 2)).ravel()
    n = mesh.n_nodes
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


# ---------------------------------------------------------------------------
# fields and frames


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Nodal potential of one solve.

    ``drive`` is ``("injection", j)`` with 1-based ``j`` or
    ``("continuous", (a1, a2))``.
    """

    mesh: Mesh
    values: np.ndarray
    omega: float
    drive: tuple
    interfaces: dict = field(default_factory=dict)

    def boundary_trace(self) -> np.ndarray:
        return self.values[self.mesh.boundary_nodes]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node_id", "re_u", "im_u"])
            for i, u in enumerate(self.values):
                w.writerow([i, repr(float(u.real)), repr(float(u.imag))])
        return path


@dataclass(frozen=True, eq=False)
class Frame:
    """Adjacent-drive adjacent-measure data: ``V[j, k]`` = u_j(E_k) - u_j(E_k+1)."""

    omega: float
    V: np.ndarray

    def to_csv(self, path) -> Path:
        path = Path(path)
        n = self.V.shape[0]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["omega", "j", "k", "re_V", "im_V"])
            for j in range(n):
                for k in range(n):
                    v = self.V[j, k]
                    w.writerow([repr(float(self.omega)), j + 1, k + 1,
                                repr(float(v.real)), repr(float(v.imag))])
        return path

    @classmethod
    def from_csv(cls, path) -> "Frame":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        n = max(int(r["j"]) for r in rows)
        V = np.zeros((n, n), dtype=complex)
        for r in rows:
            V[int(r["j"]) - 1, int(r["k"]) - 1] = complex(float(r["re_V"]), float(r["im_V"]))
        return cls(float(rows[0]["omega"]), V)

    def reciprocity_error(self) -> float:
        """max |V - V^T| relative to max |V|."""
        scale = np.abs(self.V).max()
        return float(np.abs(self.V - self.V.T).max() / scale) if scale > 0 else 0.0

    def conservation_error(self) -> float:
        scale = np.abs(self.V).max()
        return float(np.abs(self.V.sum(axis=1)).max() / scale) if scale > 0 else 0.0


def _regauge(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    w = mesh.boundary_weights
    return u - np.dot(w, u[mesh.boundary_nodes]) / w.sum()


# ---------------------------------------------------------------------------
# linear solves


class _PinnedSolver:
    """Factorisation of a singular Neumann-type matrix with one pinned unknown."""

    def __init__(self, matrix: sp.spmatrix, pin: int, method: str = "direct"):
        n = matrix.shape[0]
        keep = np.ones(n, dtype=bool)
        keep[pin] = False
        self.keep = keep
        self.n = n
        reduced = sp.csc_matrix(matrix)[keep][:, keep]
        self.method = method
        if method == "direct":
            try:
                self.lu = spla.splu(reduced.tocsc())
            except RuntimeError as exc:
                raise SingularSystem(str(exc)) from exc
        elif method == "gmres":
            self.matrix = reduced.tocsr()
            self.precond = spla.LinearOperator(reduced.shape, spla.spilu(reduced.tocsc()).solve,
                                               dtype=reduced.dtype)
        else:
            raise ValueError(f"unknown solver method {method!r}")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs)
        out = np.zeros((self.n,) + rhs.shape[1:], dtype=complex)
        if self.method == "direct":
            x = self.lu.solve(np.ascontiguousarray(rhs[self.keep]).astype(complex))
        else:
            cols = rhs[self.keep].reshape(int(self.keep.sum()), -1)
            x = np.empty(cols.shape, dtype=complex)
            for i in range(cols.shape[1]):
                xi, info = spla.gmres(self.matrix, cols[:, i], M=self.precond, rtol=1e-12,
                                      restart=200, maxiter=50)
                if info != 0:
                    raise NonConvergence(f"gmres stopped with info={info}")
                x[:, i] = xi
            x = x.reshape(rhs[self.keep].shape)
        if not np.all(np.isfinite(x)):
            raise SingularSystem("solution is not finite")
        out[self.keep] = x
        return out


@dataclass(eq=False)
class System:
    """Assembled FEM operator together with cached factorisations."""

    mesh: Mesh
    matrix: sp.csr_matrix
    omega: float
    method: str = "direct"
    interfaces: dict = field(default_factory=dict)
    _electrode: tuple | None = None
    _neumann: _PinnedSolver | None = None

    def electrode_solver(self):
        """Solver for the electrode-merged system and the node-to-unknown map."""
        if self._electrode is None:
            dof = electrode_dof_map(self.mesh)
            n_dof = int(dof.max()) + 1
            P = sp.csr_matrix((np.ones(self.mesh.n_nodes), (np.arange(self.mesh.n_nodes), dof)),
                              shape=(self.mesh.n_nodes, n_dof))
            reduced = (P.T @ self.matrix @ P).tocsc()
            self._electrode = (dof, _PinnedSolver(reduced, n_dof - 1, self.method))
        return self._electrode

    def neumann_solver(self) -> _PinnedSolver:
        if self._neumann is None:
            self._neumann = _PinnedSolver(self.matrix, self.mesh.n_nodes - 1, self.method)
        return self._neumann


def electrode_dof_map(mesh: Mesh) -> np.ndarray:
    """Unknown index per node; electrode k owns unknown k, other nodes follow."""
    n_el = len(mesh.electrodes)
    dof = np.full(mesh.n_nodes, -1, dtype=np.int64)
    for k, nodes in enumerate(mesh.electrodes):
        dof[nodes] = k
    free = dof < 0
    dof[free] = n_el + np.arange(int(free.sum()))
    return dof


def assemble(mesh: Mesh, scene: Scene, omega: float, *, relative: bool = False,
             method: str = "direct") -> System:
    """Stiffness operator with per-element admittivity of ``scene`` at ``omega``.

    The matrix is complex symmetric and has the constants as its null space.
    """
    if omega < 0:
        raise ValueError("omega must be non-negative")
    gamma = element_admittivity(mesh, scene, omega, relative=relative)
    return System(mesh, stiffness(mesh, gamma), omega, method)


def solve_injection(system: System, mesh: Mesh, j: int) -> ComplexField:
    """Current -1 through electrode j and +1 through electrode j+1 (1-based, cyclic)."""
    if system.mesh is not mesh:
        raise MeshMismatch("system was assembled on a different mesh")
    n_el = len(mesh.electrodes)
    if not 1 <= j <= n_el:
        raise ValueError(f"electrode index must lie in 1..{n_el}")
    dof, solver = system.electrode_solver()
    rhs = np.zeros(int(dof.max()) + 1, dtype=complex)
    rhs[j - 1] = -1.0
    rhs[j % n_el] = 1.0
    u = solver.solve(rhs)[dof]
    return ComplexField(mesh, _regauge(mesh, u), system.omega, ("injection", j), system.interfaces)


def _injection_potentials(system: System) -> np.ndarray:
    """Electrode potentials for all 16 adjacent injections, shape (16, 16)."""
    mesh = system.mesh
    n_el = len(mesh.electrodes)
    dof, solver = system.electrode_solver()
    rhs = np.zeros((int(dof.max()) + 1, n_el), dtype=complex)
    for j in range(n_el):
        rhs[j, j] = -1.0
        rhs[(j + 1) % n_el, j] = 1.0
    x = solver.solve(rhs)
    u = x[dof]
    w = mesh.boundary_weights
    mean = (w @ u[mesh.boundary_nodes]) / w.sum()
    return (x[:n_el] - mean).T


def frame_from_system(system: System) -> Frame:
    pot = _injection_potentials(system)
    return Frame(system.omega, pot - np.roll(pot, -1, axis=1))


def measure_frame(scene: Scene, mesh: Mesh, omega: float, *, crack_model: str | None = None,
                  relative: bool = False) -> Frame:
    """All 256 adjacent voltage differences at one frequency.

    ``crack_model`` is ``"strip"`` (cracks as meshed material regions) or
    ``"zero_thickness"``; by default it follows the mesh's crack mode.
    """
    system = build_system(scene, mesh, omega, crack_model=crack_model, relative=relative)
    return frame_from_system(system)


def build_system(scene: Scene, mesh: Mesh, omega: float, *, crack_model: str | None = None,
                 relative: bool = False) -> System:
    if crack_model is None:
        crack_model = "zero_thickness" if mesh.crack_mode == "interface" and scene.cracks else "strip"
    if crack_model == "strip":
        if scene.cracks and mesh.crack_mode == "interface":
            raise MeshMismatch("mesh has no crack strips; use the zero-thickness model")
        return assemble(mesh, scene, omega, relative=relative)
    if crack_model == "zero_thickness":
        return assemble_zero_thickness(scene, mesh, omega, relative=relative)
    raise ValueError(f"unknown crack model {crack_model!r}")


def continuous_rhs(mesh: Mesh, a) -> np.ndarray:
    """Load vector for Neumann data a . nu, projected onto zero total flux."""
    a = np.asarray(a, dtype=float)
    g = np.zeros(mesh.n_nodes)
    b = mesh.boundary_nodes
    g[b] = mesh.nodes[b] @ a / np.linalg.norm(mesh.nodes[b], axis=1)
    f = boundary_mass(mesh) @ g
    w = np.zeros(mesh.n_nodes)
    w[b] = mesh.boundary_weights
    return f - w * f.sum() / w.sum()


def _check_unit(a) -> np.ndarray:
    a = np.asarray(a, dtype=float).ravel()
    if a.shape != (2,) or not math.isclose(float(np.linalg.norm(a)), 1.0, rel_tol=1e-9):
        raise ValueError("drive direction must be a unit 2-vector")
    return a


def solve_continuous(scene: Scene, mesh: Mesh, omega: float, a, *, relative: bool = False,
                     system: System | None = None, crack_model: str | None = None) -> ComplexField:
    """Neumann problem with g = a . nu on the full circle (no electrodes).

    Cracks follow the mesh as in ``measure_frame``: strips on a strip mesh,
    the zero-thickness model on an interface mesh.
    """
    a = _check_unit(a)
    system = system or build_system(scene, mesh, omega, crack_model=crack_model, relative=relative)
    return _solve_neumann(system, a)


def _solve_neumann(system: System, a) -> ComplexField:
    mesh = system.mesh
    u = system.neumann_solver().solve(continuous_rhs(mesh, a))
    return ComplexField(mesh, _regauge(mesh, u), system.omega, ("continuous", tuple(map(float, a))),
                        system.interfaces)


# ---------------------------------------------------------------------------
# zero-thickness cracks


@dataclass(frozen=True, eq=False)
class Interface:
    """Duplicated-node bookkeeping for one crack.

    Rows are interface edges in order along the crack. ``plus`` and
    ``minus`` give the node pair on each side (tips are shared),
    ``plus_triangle`` the adjacent triangle on the "+" side and ``normals``
    the unit normal pointing from "-" to "+".
    """

    plus: np.ndarray
    minus: np.ndarray
    plus_triangle: np.ndarray
    normals: np.ndarray


_split_cache: "weakref.WeakKeyDictionary[Mesh, dict]" = weakref.WeakKeyDictionary()


def _chain(edges: np.ndarray, start_near: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Order the nodes of a simple open path of edges."""
    nbrs: dict[int, list[int]] = {}
    for a, b in edges:
        nbrs.setdefault(int(a), []).append(int(b))
        nbrs.setdefault(int(b), []).append(int(a))
    tips = [n for n, v in nbrs.items() if len(v) == 1]
    if len(tips) != 2 or any(len(v) > 2 for v in nbrs.values()):
        raise MeshNotInterfaceReady("crack interface edges do not form a simple open path")
    first = min(tips, key=lambda n: float(np.linalg.norm(nodes[n] - start_near)))
    order, prev = [first], -1
    while len(order) < len(nbrs):
        nxt = [m for m in nbrs[order[-1]] if m != prev]
        prev = order[-1]
        order.append(nxt[0])
    return np.asarray(order)


def split_interfaces(mesh: Mesh, scene: Scene) -> tuple[Mesh, dict]:
    """Duplicate interior crack nodes so the potential may jump across each crack.

    Returns a new mesh (original node numbering kept, duplicates appended)
    and one :class:`Interface` per crack. Cached per input mesh.
    """
    cached = _split_cache.get(mesh)
    if cached is not None and cached["scene"] == scene:
        return cached["result"]
    if not scene.cracks:
        return mesh, {}
    missing = [k for k in range(len(scene.cracks)) if k not in mesh.interfaces]
    if missing:
        raise MeshNotInterfaceReady(
            f"crack(s) {[k + 1 for k in missing]} are not meshed as interfaces; "
            "build the mesh with crack_mode='interface' or 'both'"
        )
    nodes = mesh.nodes
    tris = mesh.triangles.copy()
    centroids = mesh.centroids
    incidence = sp.csr_matrix(
        (np.ones(tris.size), (tris.ravel(), np.repeat(np.arange(len(tris)), 3))),
        shape=(mesh.n_nodes, len(tris)),
    )
    new_nodes = []
    interfaces = {}
    next_id = mesh.n_nodes
    for k, crack in enumerate(scene.cracks):
        chain = _chain(mesh.interfaces[k], crack.points[0], nodes)
        if len(chain) < 3:
            raise MeshNotInterfaceReady(f"crack {k + 1} needs at least two interface edges")
        t = np.diff(nodes[chain], axis=0)
        t /= np.linalg.norm(t, axis=1)[:, None]
        edge_normals = np.column_stack([-t[:, 1], t[:, 0]])
        partner = {int(n): int(n) for n in chain}
        for i in range(1, len(chain) - 1):
            n = int(chain[i])
            on_crack = {int(chain[i - 1]), int(chain[i + 1])}
            fan = incidence.indices[incidence.indptr[n]:incidence.indptr[n + 1]]
            sides = _fan_components(tris, fan, n, on_crack)
            if len(sides) != 2:
                raise MeshNotInterfaceReady(f"node {n} on crack {k + 1} does not separate its fan")
            nu = edge_normals[i - 1] + edge_normals[i]
            score = [float(np.mean((centroids[s] - nodes[n]) @ nu)) for s in sides]
            minus = sides[int(np.argmin(score))]
            for tri in minus:
                tris[tri][tris[tri] == n] = next_id
            partner[n] = next_id
            new_nodes.append(nodes[n])
            next_id += 1
        plus = np.column_stack([chain[:-1], chain[1:]])
        minus_pairs = np.vectorize(partner.get)(plus)
        plus_tri = np.empty(len(plus), dtype=np.int64)
        for e, (p, q) in enumerate(plus):
            cand = [int(c) for c in incidence.indices[incidence.indptr[p]:incidence.indptr[p + 1]]
                    if q in tris[c] and p in tris[c]]
            if len(cand) != 1:
                raise MeshNotInterfaceReady(f"edge {p}-{q} of crack {k + 1} is not split")
            plus_tri[e] = cand[0]
        interfaces[k] = Interface(plus, minus_pairs, plus_tri, edge_normals)
    split = replace(mesh, nodes=np.vstack([nodes] + [np.asarray(new_nodes).reshape(-1, 2)]),
                    triangles=tris)
    result = (split, interfaces)
    _split_cache[mesh] = {"scene": scene, "result": result}
    return result


def _fan_components(tris: np.ndarray, fan: np.ndarray, n: int, cut: set) -> list[np.ndarray]:
    """Group the triangles around node ``n``, never crossing edges n-m with m in ``cut``."""
    label = {int(t): int(t) for t in fan}

    def root(x):
        while label[x] != x:
            x = label[x]
        return x

    by_edge: dict[int, list[int]] = {}
    for t in fan:
        for m in tris[t]:
            if m != n and int(m) not in cut:
                by_edge.setdefault(int(m), []).append(int(t))
    for pair in by_edge.values():
        if len(pair) == 2:
            a, b = root(pair[0]), root(pair[1])
            if a != b:
                label[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for t in fan:
        groups.setdefault(root(int(t)), []).append(int(t))
    return [np.asarray(g) for _, g in sorted(groups.items())]


def jump_coefficient(scene: Scene, k: int, omega: float, *, relative: bool = False) -> complex:
    """Robin coefficient gamma_c / (2 delta_k), optionally over gamma_b."""
    kappa = scene.mat_crack.admittivity(omega) / (2.0 * scene.cracks[k].half_thickness)
    return kappa / scene.mat_background.admittivity(omega) if relative else kappa


def assemble_zero_thickness(scene: Scene, mesh: Mesh, omega: float, *, relative: bool = False,
                            method: str = "direct") -> System:
    """Operator of the effective interface model on the split mesh.

    Strip triangles of a ``"both"`` mesh are treated as background, since
    the crack is represented only by the jump condition.
    """
    split, interfaces = split_interfaces(mesh, scene)
    gamma = element_admittivity(split, scene, omega, relative=relative, cracks_as_background=True)
    K = stiffness(split, gamma)
    # [u] at the two edge ends is B @ (u_plus1, u_plus2, u_minus1, u_minus2)
    B = np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
    local = B.T @ (np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0) @ B
    rows, cols, vals = [], [], []
    for k, itf in interfaces.items():
        kappa = jump_coefficient(scene, k, omega, relative=relative)
        length = np.linalg.norm(split.nodes[itf.plus[:, 1]] - split.nodes[itf.plus[:, 0]], axis=1)
        ids = np.hstack([itf.plus, itf.minus])
        rows.append(np.repeat(ids, 4, axis=1).ravel())
        cols.append(np.tile(ids, (1, 4)).ravel())
        vals.append((kappa * length[:, None, None] * local).ravel())
    robin = sp.csr_matrix((np.concatenate(vals).astype(complex),
                           (np.concatenate(rows), np.concatenate(cols))), shape=K.shape)
    return System(split, (K + robin).tocsr(), omega, method, interfaces)


def solve_zero_thickness(scene: Scene, mesh: Mesh, omega: float, drive, *,
                         relative: bool = False, system: System | None = None) -> ComplexField:
    """Effective zero-thickness crack model driven by injection ``j`` (int) or direction ``a``.

    The returned field lives on the split mesh; boundary node numbering is
    that of ``mesh``.
    """
    system = system or assemble_zero_thickness(scene, mesh, omega, relative=relative)
    if isinstance(drive, (int, np.integer)):
        return solve_injection(system, system.mesh, int(drive))
    return _solve_neumann(system, _check_unit(drive))


def crack_flux(field: ComplexField, k: int) -> CrackFlux:
    """One-sided normal derivative and jump along crack ``k`` of a zero-thickness field."""
    if k not in field.interfaces:
        raise MeshNotInterfaceReady(f"field carries no interface data for crack {k + 1}")
    itf = field.interfaces[k]
    mesh = field.mesh
    grads = element_gradients(mesh)[itf.plus_triangle]
    u = field.values[mesh.triangles[itf.plus_triangle]]
    grad_u = np.einsum("ei,eid->ed", u, grads)
    flux = np.einsum("ed,ed->e", grad_u, itf.normals)
    jump = field.values[itf.plus] - field.values[itf.minus]
    return CrackFlux(mesh.nodes[itf.plus], itf.normals, flux, jump)


def boundary_perturbation(field: ComplexField, reference: ComplexField) -> BoundarySamples:
    """Boundary trace of ``field - reference`` in the boundary-mean-zero gauge."""
    m, r = field.mesh, reference.mesh
    if not (np.array_equal(m.boundary_nodes, r.boundary_nodes)
            and np.allclose(m.nodes[m.boundary_nodes], r.nodes[r.boundary_nodes], atol=0.0)):
        raise MeshMismatch("fields live on meshes with different boundaries")
    if field.drive != reference.drive:
        raise MeshMismatch("fields were computed for different drives")
    diff = field.boundary_trace() - reference.boundary_trace()
    w = m.boundary_weights
    diff = diff - np.dot(w, diff) / w.sum()
    a = np.asarray(field.drive[1]) if field.drive[0] == "continuous" else None
    return BoundarySamples(m.nodes[m.boundary_nodes], diff, a, field.omega)
