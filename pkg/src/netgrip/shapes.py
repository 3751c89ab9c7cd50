"""Graspable rigid bodies as posed signed-distance shapes.

Supported shapes: sphere, capsule, box, ellipsoid, frustum. Sphere,
capsule, box and frustum SDFs are exact closed forms; the ellipsoid uses a
bisected nearest-point solve (exact to ~1e-12 mm except exactly on the
medial axis, where the nearest point is ambiguous anyway).
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

_SHAPE_CODES = {
    "sphere": kernels.SHAPE_SPHERE,
    "capsule": kernels.SHAPE_CAPSULE,
    "box": kernels.SHAPE_BOX,
    "ellipsoid": kernels.SHAPE_ELLIPSOID,
    "frustum": kernels.SHAPE_FRUSTUM,
}


def _quat_to_matrix(q):
    w, x, y, z = q
    n = np.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("zero quaternion")
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass
class RigidObject:
    """A posed rigid shape with mass and friction coefficient.

    shape: one of sphere/capsule/box/ellipsoid/frustum
    dims: shape parameters, see shape_params() for the packing
    position: center in world mm; rotation: unit quaternion (w, x, y, z)
    """

    shape: str
    dims: tuple
    position: np.ndarray
    rotation: tuple = (1.0, 0.0, 0.0, 0.0)
    mass_kg: float = 0.0
    mu: float = 0.5
    name: str = ""
    _rot: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.shape not in _SHAPE_CODES:
            raise ValueError(f"unknown shape {self.shape!r}")
        dims = tuple(float(v) for v in self.dims)
        if any(v <= 0.0 for v in dims):
            raise ValueError(f"{self.shape} dimensions must be positive, got {dims}")
        if self.mass_kg < 0.0:
            raise ValueError("mass must be >= 0")
        if self.mu < 0.0:
            raise ValueError("mu must be >= 0")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).copy())
        object.__setattr__(self, "_rot", _quat_to_matrix(self.rotation))

    @property
    def code(self):
        return _SHAPE_CODES[self.shape]

    def shape_params(self):
        """Pack dims into the kernel parameter vector (length 8)."""
        p = np.zeros(8)
        if self.shape == "sphere":
            p[0] = self.dims[0]  # radius
        elif self.shape == "capsule":
            p[0] = self.dims[0]  # radius
            p[1] = 0.5 * self.dims[1]  # half cylinder length
        elif self.shape == "box":
            p[:3] = 0.5 * np.asarray(self.dims[:3])  # half extents
        elif self.shape == "ellipsoid":
            p[:3] = self.dims[:3]  # radii
        elif self.shape == "frustum":
            p[0] = self.dims[0]  # bottom radius
            p[1] = self.dims[1]  # top radius
            p[2] = 0.5 * self.dims[2]  # half height
        return p

    def to_local(self, pts, center=None):
        c = self.position if center is None else center
        return (np.atleast_2d(pts) - c) @ self._rot

    def normals_to_world(self, n_local):
        return n_local @ self._rot.T

    def signed_distance(self, pts, center=None):
        """Signed distances and outward world normals at world points."""
        local = self.to_local(pts, center)
        d, n_local = kernels.sdf_batch(self.code, self.shape_params(), np.ascontiguousarray(local))
        return d, self.normals_to_world(n_local)

    def weight_n(self, g=9.81):
        return self.mass_kg * g


def signed_distance(obj: RigidObject, point) -> tuple:
    """Signed distance (mm) and outward unit normal at a single world point."""
    d, n = obj.signed_distance(np.asarray(point, dtype=float)[None, :])
    return float(d[0]), n[0]
