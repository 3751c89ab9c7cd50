"""Quasi-static equilibrium of the net by energy minimization.

Objective: spring energy + contact penalty + tangential anchor springs
+ object gravity, minimized over free node positions and (optionally) the
object center with L-BFGS plus Armijo backtracking. Convergence is
declared when the force residual (gradient infinity norm) drops below the
tolerance in newtons.

An unsupported free object would make the objective unbounded (it falls
forever), so the solve watches for loss of contact and freezes the object
as "dropped" instead of diverging.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .contact import ContactParams, FrictionState, cap_tangent, contact_forces
from .errors import ConvergenceError, SingularMeshError
from .mesh import NetMesh, rim_targets as rim_circle_targets

_MIN_EDGE = 1e-12
_DROP_PATIENCE = 30  # contact-free iterations before the object counts as dropped


@dataclass(frozen=True)
class SolverParams:
    tolerance: float = 1e-6  # N, gradient infinity norm
    max_iterations: int = 20000
    history: int = 8  # L-BFGS memory
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    step_cap_mm: float = 2.0  # max per-iteration displacement of any coordinate

    def __post_init__(self):
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.step_cap_mm <= 0.0:
            raise ValueError("step_cap_mm must be positive")


@dataclass
class EquilibriumResult:
    positions: np.ndarray  # (N, 3) mm
    converged: bool
    iterations: int
    residual_norm: float  # N
    energy: float  # N*mm
    contact_normal: np.ndarray  # (N, 3) N, force on each node from the object
    contact_tangent: np.ndarray  # (N, 3) N, capped friction force on each node
    penetration: np.ndarray  # (N,) mm, sdf per node (only valid with an object)
    node_stress: np.ndarray  # (N, 3) N/mm^2
    object_center: np.ndarray | None = None
    object_dropped: bool = False
    residual_history: list = field(default_factory=list)
    lbfgs_state: tuple = ()  # curvature pairs, reusable to warm-start the next tick

    @property
    def contact_forces(self):
        return self.contact_normal + self.contact_tangent


def elastic_energy(mesh: NetMesh, positions):
    """Spring energy (N*mm) and its gradient, zeroed at fixed nodes."""
    positions = np.ascontiguousarray(positions, dtype=float)
    ea, eb = mesh.edge_arrays()
    e, g, min_len = kernels.spring_energy_grad(
        positions, ea, eb, mesh.rest_lengths, mesh.stiffness, mesh.tension_only
    )
    if min_len < _MIN_EDGE:
        raise SingularMeshError(
            f"edge collapsed to length {min_len:.3e} mm; spring direction undefined"
        )
    g = g.copy()
    g[mesh.fixed] = 0.0
    return e, g


def node_stress(mesh: NetMesh, positions) -> np.ndarray:
    """Per-node stress vectors: incident edge tension sums over belt area."""
    positions = np.ascontiguousarray(positions, dtype=float)
    ea, eb = mesh.edge_arrays()
    t = kernels.node_tension_sum(
        positions, ea, eb, mesh.rest_lengths, mesh.stiffness, mesh.tension_only
    )
    return t / mesh.belt_area_mm2


def initialize_positions(mesh: NetMesh, rim_pts) -> np.ndarray:
    """Affine warm start: blend each ring from rest toward the pinned rim."""
    rim_pts = np.atleast_2d(rim_pts)
    r_target = float(np.hypot(rim_pts[0, 0], rim_pts[0, 1]))
    z_target = float(rim_pts[0, 2])
    r_rest = float(np.hypot(*mesh.rest_positions[0, :2]))
    scale = r_target / r_rest
    pos = mesh.rest_positions.copy()
    for i in range(mesh.rings):
        t = i / (mesh.rings - 1)
        s = scale * (1.0 - t) + t
        rows = slice(i * mesh.segments, (i + 1) * mesh.segments)
        pos[rows, 0] *= s
        pos[rows, 1] *= s
        pos[rows, 2] += z_target * (1.0 - t)
    return pos


def _expand_rim(mesh: NetMesh, rim_pts):
    """Accept 8 claw tips or a full per-node rim ring."""
    rim_pts = np.atleast_2d(np.asarray(rim_pts, dtype=float))
    if rim_pts.shape == (mesh.segments, 3):
        return rim_pts
    if rim_pts.shape == (8, 3):
        radius = float(np.hypot(rim_pts[0, 0], rim_pts[0, 1]))
        return rim_circle_targets(mesh, 2.0 * radius, float(rim_pts[0, 2]))
    raise ValueError(f"rim targets must be (8,3) tips or ({mesh.segments},3), got {rim_pts.shape}")


class _Objective:
    """Energy/gradient over the packed variable vector."""

    def __init__(self, mesh, obj, contact_params, friction, free_object, obj_center):
        self.mesh = mesh
        self.obj = obj
        self.cp = contact_params
        self.friction = friction if friction is not None else FrictionState()
        self.free_object = free_object and obj is not None
        self.obj_center = None if obj is None else np.asarray(obj_center, dtype=float).copy()
        self.free_idx = np.flatnonzero(~mesh.fixed)
        self.pos = None  # scratch, set per solve
        self.ea, self.eb = mesh.edge_arrays()

    @property
    def n_vars(self):
        return 3 * len(self.free_idx) + (3 if self.free_object else 0)

    def pack(self, positions, center):
        v = positions[self.free_idx].ravel()
        if self.free_object:
            v = np.concatenate([v, center])
        return v.copy()

    def unpack(self, v):
        self.pos[self.free_idx] = v[: 3 * len(self.free_idx)].reshape(-1, 3)
        center = v[3 * len(self.free_idx):] if self.free_object else self.obj_center
        return self.pos, center

    def __call__(self, v):
        """Returns (energy, gradient, sdf or None). Energy inf on singular."""
        pos, center = self.unpack(v)
        e, g, min_len = kernels.spring_energy_grad(
            pos, self.ea, self.eb, self.mesh.rest_lengths, self.mesh.stiffness,
            self.mesh.tension_only,
        )
        if min_len < _MIN_EDGE or not np.isfinite(e):
            return np.inf, None, None
        grad = g
        g_c = np.zeros(3)
        d = None
        if self.obj is not None:
            local = self.obj.to_local(pos, center)
            d, n_local = kernels.sdf_batch(
                self.obj.code, self.obj.shape_params(), np.ascontiguousarray(local)
            )
            pen = np.minimum(d, 0.0)
            e += 0.5 * self.cp.k_contact * float(np.dot(pen, pen))
            n_world = self.obj.normals_to_world(n_local)
            gpen = (self.cp.k_contact * pen)[:, None] * n_world
            grad = grad + gpen
            if self.free_object:
                g_c -= gpen.sum(axis=0)
            fr = self.friction
            if not fr.empty and self.cp.k_tangent > 0.0:
                y = local[fr.node_idx]
                off = y - fr.anchors_local
                t_off = off - np.einsum("ij,ij->i", off, fr.normals_local)[:, None] * fr.normals_local
                e += 0.5 * self.cp.k_tangent * float(np.sum(t_off * t_off))
                gw = self.obj.normals_to_world(self.cp.k_tangent * t_off)
                grad[fr.node_idx] += gw
                if self.free_object:
                    g_c -= gw.sum(axis=0)
            if self.free_object:
                e += self.obj.mass_kg * self.cp.g * center[2]
                g_c[2] += self.obj.mass_kg * self.cp.g
        grad[self.mesh.fixed] = 0.0
        gv = grad[self.free_idx].ravel()
        if self.free_object:
            gv = np.concatenate([gv, g_c])
        return e, gv, d


def _lbfgs_direction(g, s_list, y_list):
    q = -g
    if not s_list:
        return q
    alphas = []
    rhos = [1.0 / np.dot(y, s) for s, y in zip(s_list, y_list)]
    for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rhos)):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    s, y = s_list[-1], y_list[-1]
    q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(zip(s_list, y_list, rhos), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def solve_equilibrium(
    mesh: NetMesh,
    rim_pts,
    obj=None,
    params: SolverParams | None = None,
    contact_params: ContactParams | None = None,
    positions0=None,
    friction: FrictionState | None = None,
    object_mode: str = "free",
    obj_center0=None,
    lbfgs_state: tuple = (),
) -> EquilibriumResult:
    """Minimize the system energy with the rim pinned at rim_pts.

    rim_pts is either the 8 claw tips or one point per rim node. The object
    center translates freely unless object_mode="fixed". Raises
    ConvergenceError (with the residual trajectory) if the iteration cap is
    hit, SingularMeshError if the start configuration has collapsed edges.
    """
    params = params or SolverParams()
    contact_params = contact_params or ContactParams()
    if object_mode not in ("free", "fixed"):
        raise ValueError(f"object_mode must be 'free' or 'fixed', got {object_mode!r}")

    rim = _expand_rim(mesh, rim_pts)
    if positions0 is None:
        positions = initialize_positions(mesh, rim)
    else:
        positions = np.asarray(positions0, dtype=float).copy()
    positions[: mesh.segments] = rim
    for idx in mesh.apex_nodes:
        positions[idx] = mesh.rest_positions[idx]

    center0 = None
    if obj is not None:
        center0 = np.asarray(obj.position if obj_center0 is None else obj_center0, dtype=float)

    free_object = object_mode == "free" and obj is not None and obj.mass_kg > 0.0
    objective = _Objective(mesh, obj, contact_params, friction, free_object, center0)
    objective.pos = positions
    v = objective.pack(positions, center0)

    e, g, d = objective(v)
    if not np.isfinite(e):
        raise SingularMeshError("initial configuration has collapsed edges")

    history = []
    s_list, y_list = [], []
    dropped = False
    free_streak = 0
    it = 0
    while it < params.max_iterations:
        ginf = float(np.max(np.abs(g))) if len(g) else 0.0
        history.append(ginf)
        if ginf <= params.tolerance:
            break

        if objective.free_object and d is not None and not np.any(d < 0.0):
            free_streak += 1
            if free_streak >= _DROP_PATIENCE:
                # unsupported object: it falls away; relax the net alone
                dropped = True
                _, center = objective.unpack(v)
                drop_center = np.asarray(center, dtype=float).copy()
                objective.obj = None
                objective.free_object = False
                v = objective.pack(objective.pos, None)
                e, g, d = objective(v)
                s_list, y_list = [], []
                it += 1
                continue
        else:
            free_streak = 0

        direction = _lbfgs_direction(g, s_list, y_list)
        slope = float(np.dot(g, direction))
        if slope >= 0.0:
            direction = -g
            slope = -float(np.dot(g, g))
            s_list, y_list = [], []

        t = 1.0
        if not s_list:
            gn = float(np.linalg.norm(g))
            if gn > 0.0:
                t = min(1.0, 1.0 / gn)
        # cap the step so contact windows cannot be tunneled through
        dmax = float(np.max(np.abs(direction)))
        if dmax > 0.0:
            t = min(t, params.step_cap_mm / dmax)
        ok = False
        for _ in range(params.max_backtracks):
            v_new = v + t * direction
            e_new, g_new, d_new = objective(v_new)
            if np.isfinite(e_new) and e_new <= e + params.armijo_c * t * slope:
                ok = True
                break
            t *= params.backtrack
        if not ok:
            if s_list:
                s_list, y_list = [], []  # retry with plain steepest descent
                it += 1
                continue
            raise ConvergenceError(
                f"line search stalled at residual {ginf:.3e} N after {it} iterations",
                residual_history=history,
            )

        s = v_new - v
        yk = g_new - g
        sy = float(np.dot(s, yk))
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(yk)):
            s_list.append(s)
            y_list.append(yk)
            if len(s_list) > params.history:
                s_list.pop(0)
                y_list.pop(0)
        v, e, g, d = v_new, e_new, g_new, d_new
        it += 1
    else:
        raise ConvergenceError(
            f"no equilibrium within {params.max_iterations} iterations "
            f"(residual {history[-1]:.3e} N)",
            residual_history=history,
        )

    positions, center = objective.unpack(v)
    positions = positions.copy()
    if dropped:
        center = drop_center
    residual = history[-1] if history else 0.0

    n_nodes = mesh.n_nodes
    normal = np.zeros((n_nodes, 3))
    tangent = np.zeros((n_nodes, 3))
    pen = np.zeros(n_nodes)
    if obj is not None and not dropped:
        normal, tangent, pen, _ = contact_forces(
            positions, obj, contact_params, center=center,
            friction=objective.friction,
        )
    stress = node_stress(mesh, positions)
    return EquilibriumResult(
        positions=positions,
        converged=True,
        iterations=it,
        residual_norm=residual,
        energy=float(e),
        contact_normal=normal,
        contact_tangent=tangent,
        penetration=pen,
        node_stress=stress,
        object_center=None if obj is None else np.asarray(center, dtype=float).copy(),
        object_dropped=dropped,
        residual_history=history,
    )


def mesh_frame(mesh: NetMesh, result: EquilibriumResult) -> dict:
    """JSON-ready snapshot of an equilibrium (positions, edges, stresses)."""
    return {
        "schema": 1,
        "nodes": result.positions.tolist(),
        "edges": mesh.edges.tolist(),
        "fixed": mesh.fixed.astype(int).tolist(),
        "stress": result.node_stress.tolist(),
        "contact_force": result.contact_forces.tolist(),
        "object_center": None
        if result.object_center is None
        else list(result.object_center),
    }
