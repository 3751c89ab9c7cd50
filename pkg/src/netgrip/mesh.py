"""Triangulated truncated-cone mesh for the elastic belt net.

Ring 0 is the rim (bound to the claw tips), the last ring sits at the top
radius, and a single extra apex node at the cone top center closes the
surface (bound to the fixed central block). Node count is
segments * rings + 1.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshBuildError

MIN_EDGE_LEN_MM = 1e-9


@dataclass(frozen=True)
class NetMesh:
    rest_positions: np.ndarray  # (N, 3) mm
    edges: np.ndarray  # (E, 2) int
    rest_lengths: np.ndarray  # (E,) mm
    stiffness: np.ndarray  # (E,) N/mm
    fixed: np.ndarray  # (N,) bool
    rim_groups: tuple  # 8 tuples of node indices
    apex_nodes: tuple  # node indices bound to the central block
    rings: int
    segments: int
    rim_angles: np.ndarray  # (segments,) construction angle of each rim node
    tension_only: bool = False
    belt_area_mm2: float = 1.0
    build_params: dict = field(default_factory=dict)

    @property
    def n_nodes(self):
        return len(self.rest_positions)

    @property
    def rim_nodes(self):
        return np.arange(self.segments)

    def edge_arrays(self):
        return (
            np.ascontiguousarray(self.edges[:, 0]),
            np.ascontiguousarray(self.edges[:, 1]),
        )


def build_net(
    rings: int,
    segments: int,
    cone_top_radius: float,
    cone_bottom_radius: float,
    depth: float,
    stiffness: float,
    tension_only: bool = False,
    belt_area_mm2: float = 1.0,
) -> NetMesh:
    """Build the rest-state net: rim at z=0, apex at z=depth.

    segments must be a positive multiple of 8 so rim nodes split evenly
    over the 8 claws; radii must be positive. depth=0 degenerates to a
    flat annulus, which is allowed as long as no edge collapses.
    """
    if rings < 2:
        raise MeshBuildError(f"rings must be >= 2, got {rings}")
    if segments < 8 or segments % 8 != 0:
        raise MeshBuildError(f"segments must be a positive multiple of 8, got {segments}")
    if cone_top_radius <= 0.0 or cone_bottom_radius <= 0.0:
        raise MeshBuildError("cone radii must be positive")
    if depth < 0.0:
        raise MeshBuildError("depth must be non-negative")
    if stiffness <= 0.0:
        raise MeshBuildError("stiffness must be positive")

    n_lateral = rings * segments
    apex_index = n_lateral
    pos = np.empty((n_lateral + 1, 3))
    ang = np.arange(segments) * (2.0 * np.pi / segments)
    for i in range(rings):
        t = i / (rings - 1)
        r = cone_bottom_radius + (cone_top_radius - cone_bottom_radius) * t
        z = depth * t
        base = i * segments
        pos[base : base + segments, 0] = r * np.cos(ang)
        pos[base : base + segments, 1] = r * np.sin(ang)
        pos[base : base + segments, 2] = z
    pos[apex_index] = (0.0, 0.0, depth)

    edges = []
    for i in range(rings):
        base = i * segments
        for j in range(segments):
            edges.append((base + j, base + (j + 1) % segments))  # ring
            if i + 1 < rings:
                edges.append((base + j, base + segments + j))  # longitudinal
                edges.append((base + j, base + segments + (j + 1) % segments))  # diagonal
            else:
                edges.append((base + j, apex_index))
    edges = np.asarray(edges, dtype=np.int64)

    d = pos[edges[:, 1]] - pos[edges[:, 0]]
    rest = np.sqrt(np.einsum("ij,ij->i", d, d))
    if np.any(rest <= MIN_EDGE_LEN_MM):
        raise MeshBuildError(
            "degenerate construction: some edges have zero rest length "
            "(coincident rings; check radii/depth)"
        )

    fixed = np.zeros(n_lateral + 1, dtype=bool)
    fixed[:segments] = True  # rim
    fixed[apex_index] = True

    per_claw = segments // 8
    rim_groups = tuple(
        tuple(range(c * per_claw, (c + 1) * per_claw)) for c in range(8)
    )

    mesh = NetMesh(
        rest_positions=pos,
        edges=edges,
        rest_lengths=rest,
        stiffness=np.full(len(edges), float(stiffness)),
        fixed=fixed,
        rim_groups=rim_groups,
        apex_nodes=(apex_index,),
        rings=rings,
        segments=segments,
        rim_angles=ang,
        tension_only=tension_only,
        belt_area_mm2=belt_area_mm2,
        build_params={
            "rings": rings,
            "segments": segments,
            "cone_top_radius": cone_top_radius,
            "cone_bottom_radius": cone_bottom_radius,
            "depth": depth,
            "stiffness": stiffness,
            "tension_only": tension_only,
            "belt_area_mm2": belt_area_mm2,
        },
    )
    if not _connected(mesh):
        raise MeshBuildError("mesh graph is not connected")
    return mesh


def _connected(mesh: NetMesh) -> bool:
    n = mesh.n_nodes
    adj = [[] for _ in range(n)]
    for a, b in mesh.edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return bool(seen.all())


def rim_targets(mesh: NetMesh, aperture_mm: float, rim_z: float) -> np.ndarray:
    """Pinned rim-node positions for a given aperture: the rim circle scaled
    to diameter aperture_mm at height rim_z, each node keeping its angle."""
    r = 0.5 * aperture_mm
    out = np.empty((mesh.segments, 3))
    out[:, 0] = r * np.cos(mesh.rim_angles)
    out[:, 1] = r * np.sin(mesh.rim_angles)
    out[:, 2] = rim_z
    return out


def euler_characteristic(mesh: NetMesh) -> int:
    """V - E + F of the triangulated surface (1 for a disk-like cone)."""
    v = mesh.n_nodes
    e = len(mesh.edges)
    # lateral quads are split in two; the top ring fans into the apex
    f = 2 * (mesh.rings - 1) * mesh.segments + mesh.segments
    return v - e + f
