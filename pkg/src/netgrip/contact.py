"""Penalty contact between net nodes and a rigid object, with regularized
Coulomb friction and the static hold/slip verdict.

Normal forces come from a quadratic penalty on penetration, so they are the
exact gradient of the penalty energy. Friction is modeled as tangential
anchor springs: each contacting node remembers an anchor point on the
object surface (in the object frame); between equilibrium solves the
anchors are re-projected and slid so the spring force never exceeds
mu * |normal| (radial return). Reported tangential forces are always
capped at the friction cone.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .shapes import RigidObject


@dataclass(frozen=True)
class ContactParams:
    k_contact: float = 50.0  # N/mm penalty stiffness
    k_tangent: float = 2.0  # N/mm tangential anchor stiffness
    mu_default: float = 0.5
    g: float = 9.81  # m/s^2; with mm lengths and kg masses, m*g is in N

    def __post_init__(self):
        if self.k_contact <= 0.0:
            raise ValueError("k_contact must be positive")
        if self.k_tangent < 0.0:
            raise ValueError("k_tangent must be >= 0")


@dataclass(frozen=True)
class FrictionState:
    """Anchor springs for nodes currently in contact (object-frame data)."""

    node_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    anchors_local: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    normals_local: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    @property
    def empty(self):
        return len(self.node_idx) == 0


def contact_forces(positions, obj: RigidObject, params: ContactParams, center=None,
                   friction: FrictionState | None = None):
    """Per-node contact forces and the penalty energy.

    Returns (normal (N,3), tangent (N,3), penetration d (N,), energy).
    Normal force on a penetrating node is k_contact*|sdf| along the outward
    normal; the penalty energy 0.5*k_contact*sum(min(0,d)^2) has that force
    as its exact (negative) gradient. Tangential forces require a friction
    state and are capped at mu*|normal|.
    """
    positions = np.atleast_2d(positions)
    d, n = obj.signed_distance(positions, center)
    pen = np.minimum(d, 0.0)
    normal = (-params.k_contact * pen)[:, None] * n
    energy = float(0.5 * params.k_contact * np.sum(pen * pen))
    tangent = np.zeros_like(positions)
    if friction is not None and not friction.empty:
        raw = _friction_forces_world(positions, obj, friction, params, center)
        tangent[friction.node_idx] = cap_tangent(
            raw, normal[friction.node_idx], obj.mu
        )
    return normal, tangent, d, energy


def _friction_forces_world(positions, obj, friction, params, center=None):
    """Uncapped anchor-spring forces on the anchored nodes, world frame."""
    y = obj.to_local(positions[friction.node_idx], center)
    off = y - friction.anchors_local
    nrm = friction.normals_local
    t_off = off - (np.einsum("ij,ij->i", off, nrm))[:, None] * nrm
    return obj.normals_to_world(-params.k_tangent * t_off)


def cap_tangent(tangent, normal, mu):
    """Scale tangential forces down to the friction cone mu*|normal|."""
    tn = np.sqrt(np.einsum("ij,ij->i", tangent, tangent))
    cap = mu * np.sqrt(np.einsum("ij,ij->i", normal, normal))
    scale = np.where(tn > cap, np.where(tn > 0.0, cap / np.where(tn > 0.0, tn, 1.0), 0.0), 1.0)
    return tangent * scale[:, None]


def update_anchors(positions, obj: RigidObject, params: ContactParams,
                   friction: FrictionState, center=None) -> FrictionState:
    """Advance anchors to the next tick: attach new contacts, drop separated
    ones, re-center sticking anchors, slide sliding ones (radial return)."""
    positions = np.atleast_2d(positions)
    local = obj.to_local(positions, center)
    from . import kernels

    d, n_local = kernels.sdf_batch(obj.code, obj.shape_params(), np.ascontiguousarray(local))
    in_contact = d < 0.0
    idx = np.flatnonzero(in_contact)
    if len(idx) == 0:
        return FrictionState()

    prev = {int(node): i for i, node in enumerate(friction.node_idx)}
    anchors = np.empty((len(idx), 3))
    normals = n_local[idx]
    if params.k_tangent > 0.0:
        cap_off = obj.mu * params.k_contact * (-d[idx]) / params.k_tangent
    else:
        cap_off = np.zeros(len(idx))
    for row, node in enumerate(idx):
        y = local[node]
        nrm = normals[row]
        if int(node) in prev:
            a_old = friction.anchors_local[prev[int(node)]]
            off = y - a_old
            t_off = off - np.dot(off, nrm) * nrm
            mag = np.linalg.norm(t_off)
            if mag > cap_off[row] and mag > 0.0:
                t_off = t_off * (cap_off[row] / mag)
        else:
            t_off = np.zeros(3)
        anchors[row] = y - t_off
    return FrictionState(node_idx=idx.astype(np.int64), anchors_local=anchors,
                         normals_local=normals)


def hold_check(result, obj: RigidObject, params: ContactParams, mass_kg=None, mu=None):
    """Static hold verdict from a converged equilibrium.

    margin = sum of upward normal-force components on the object
           + mu * |normal| friction budget over upward-supporting contacts
           - weight.
    Contacts whose normal pushes the object down contribute nothing: a grasp
    propped up only by friction on such walls is classified as a slip.
    """
    if not result.converged:
        raise ValueError("hold_check requires a converged equilibrium")
    mass = obj.mass_kg if mass_kg is None else mass_kg
    coeff = obj.mu if mu is None else mu
    f_obj = -result.contact_normal  # reaction on the object, per node
    fz = f_obj[:, 2]
    up = fz > 0.0
    support = float(np.sum(fz[up]))
    budget = float(coeff * np.sum(np.sqrt(np.einsum("ij,ij->i", f_obj[up], f_obj[up]))))
    margin = support + budget - mass * params.g
    return ("held" if margin >= 0.0 else "slips"), margin
