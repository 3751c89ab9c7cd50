"""Pure-numpy kernels: reference implementation of the hot inner loops.

Same signatures as the numba backend; selected via NETGRIP_BACKEND=numpy.
All arrays are float64; positions are mm, forces N, energies N*mm.
"""

import numpy as np

# shape codes shared with the numba backend
SHAPE_SPHERE = 0
SHAPE_CAPSULE = 1
SHAPE_BOX = 2
SHAPE_ELLIPSOID = 3
SHAPE_FRUSTUM = 4

_ELLIPSOID_BISECT_ITERS = 100


def spring_energy_grad(pos, ea, eb, rest, k, tension_only):
    """Total spring energy, its gradient per node, and the shortest edge length.

    Energy per edge: 0.5*k*(len - rest)^2, or 0 for slack edges in
    tension-only mode.
    """
    d = pos[eb] - pos[ea]
    length = np.sqrt(np.einsum("ij,ij->i", d, d))
    min_len = float(length.min()) if length.size else np.inf
    stretch = length - rest
    if tension_only:
        stretch = np.maximum(stretch, 0.0)
    energy = float(0.5 * np.sum(k * stretch * stretch))
    grad = np.zeros_like(pos)
    safe = np.where(length > 0.0, length, 1.0)
    coef = (k * stretch / safe)[:, None] * d
    np.add.at(grad, ea, -coef)
    np.add.at(grad, eb, coef)
    return energy, grad, min_len


def node_tension_sum(pos, ea, eb, rest, k, tension_only):
    """Vector sum of incident edge tensions at each node (N)."""
    d = pos[eb] - pos[ea]
    length = np.sqrt(np.einsum("ij,ij->i", d, d))
    stretch = length - rest
    if tension_only:
        stretch = np.maximum(stretch, 0.0)
    safe = np.where(length > 0.0, length, 1.0)
    t = (k * stretch / safe)[:, None] * d  # pull on node a toward b
    out = np.zeros_like(pos)
    np.add.at(out, ea, t)
    np.add.at(out, eb, -t)
    return out


def sdf_batch(code, params, pts):
    """Signed distance and outward unit normal for points in the shape frame."""
    if code == SHAPE_SPHERE:
        return _sdf_sphere(params, pts)
    if code == SHAPE_CAPSULE:
        return _sdf_capsule(params, pts)
    if code == SHAPE_BOX:
        return _sdf_box(params, pts)
    if code == SHAPE_ELLIPSOID:
        return _sdf_ellipsoid(params, pts)
    if code == SHAPE_FRUSTUM:
        return _sdf_frustum(params, pts)
    raise ValueError(f"unknown shape code {code}")


def _sdf_sphere(params, pts):
    r = params[0]
    norm = np.sqrt(np.einsum("ij,ij->i", pts, pts))
    d = norm - r
    n = np.zeros_like(pts)
    ok = norm > 0.0
    n[ok] = pts[ok] / norm[ok, None]
    n[~ok] = (0.0, 0.0, 1.0)
    return d, n


def _sdf_capsule(params, pts):
    r, hh = params[0], params[1]
    q = pts.copy()
    q[:, 2] -= np.clip(pts[:, 2], -hh, hh)
    norm = np.sqrt(np.einsum("ij,ij->i", q, q))
    d = norm - r
    n = np.zeros_like(pts)
    ok = norm > 0.0
    n[ok] = q[ok] / norm[ok, None]
    n[~ok] = (0.0, 0.0, 1.0)
    return d, n


def _sdf_box(params, pts):
    h = params[:3]
    a = np.abs(pts)
    q = a - h
    inside = np.all(q < 0.0, axis=1)
    d = np.empty(len(pts))
    n = np.zeros_like(pts)
    # outside: distance to the clamped closest point
    closest = np.clip(pts, -h, h)
    dv = pts - closest
    dist = np.sqrt(np.einsum("ij,ij->i", dv, dv))
    out = ~inside
    d[out] = dist[out]
    nz = out & (dist > 0.0)
    n[nz] = dv[nz] / dist[nz, None]
    n[out & ~nz] = (0.0, 0.0, 1.0)
    # inside: negative distance to the nearest face
    if inside.any():
        qi = q[inside]
        axis = np.argmax(qi, axis=1)
        d[inside] = qi[np.arange(len(qi)), axis]
        sgn = np.sign(pts[inside][np.arange(len(qi)), axis])
        sgn[sgn == 0.0] = 1.0
        ni = np.zeros((len(qi), 3))
        ni[np.arange(len(qi)), axis] = sgn
        n[inside] = ni
    return d, n


def _sdf_ellipsoid(params, pts):
    # exact nearest point on the ellipsoid via bisection on the KKT root;
    # coordinates exactly on a symmetry plane are nudged by ~1e-12*radius,
    # so results within ~1e-12 mm of exact except exactly on the medial axis
    r = params[:3]
    r2 = r * r
    y = pts.copy()
    for i in range(3):
        tiny = np.abs(y[:, i]) < 1e-12 * r[i]
        y[tiny, i] = 1e-12 * r[i]
    a = r[None, :] * y
    amin = np.abs(r[np.argmin(r)] * y[:, np.argmin(r)])
    anorm = np.sqrt(np.einsum("ij,ij->i", a, a))
    rmin2 = float(np.min(r2))
    t_lo = -rmin2 + 0.5 * amin
    t_hi = np.maximum(anorm, t_lo + rmin2 + 1.0)
    a2 = a * a
    for _ in range(_ELLIPSOID_BISECT_ITERS):
        t = 0.5 * (t_lo + t_hi)
        g = np.sum(a2 / (t[:, None] + r2[None, :]) ** 2, axis=1)
        hi = g > 1.0
        t_lo = np.where(hi, t, t_lo)
        t_hi = np.where(hi, t_hi, t)
    t = 0.5 * (t_lo + t_hi)
    foot = r2[None, :] * y / (t[:, None] + r2[None, :])
    dv = y - foot
    dist = np.sqrt(np.einsum("ij,ij->i", dv, dv))
    level = np.sum((y / r[None, :]) ** 2, axis=1)
    d = np.where(level >= 1.0, dist, -dist)
    n = foot / r2[None, :]
    nn = np.sqrt(np.einsum("ij,ij->i", n, n))
    nn[nn == 0.0] = 1.0
    n = n / nn[:, None]
    return d, n


def _seg_closest(px, pz, ax, az, bx, bz):
    """Closest point on segment a-b to p, in the (rho, z) half-plane."""
    abx, abz = bx - ax, bz - az
    denom = abx * abx + abz * abz
    t = np.where(denom > 0.0, ((px - ax) * abx + (pz - az) * abz) / np.where(denom > 0.0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return ax + t * abx, az + t * abz


def _sdf_frustum(params, pts):
    # exact distance to the solid bounded by bottom disk, top disk and the
    # lateral wall; bottom at z=-hh with radius rb, top at z=+hh with rt
    rb, rt, hh = params[0], params[1], params[2]
    rho = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2)
    z = pts[:, 2]
    best_d2 = np.full(len(pts), np.inf)
    best_cx = np.zeros(len(pts))
    best_cz = np.zeros(len(pts))
    for ax, az, bx, bz in ((0.0, -hh, rb, -hh), (0.0, hh, rt, hh), (rb, -hh, rt, hh)):
        cx, cz = _seg_closest(rho, z, ax, az, bx, bz)
        d2 = (rho - cx) ** 2 + (z - cz) ** 2
        closer = d2 < best_d2
        best_d2 = np.where(closer, d2, best_d2)
        best_cx = np.where(closer, cx, best_cx)
        best_cz = np.where(closer, cz, best_cz)
    dist = np.sqrt(best_d2)
    r_at = rb + (rt - rb) * (z + hh) / (2.0 * hh) if hh > 0.0 else np.maximum(rb, rt)
    inside = (z >= -hh) & (z <= hh) & (rho <= r_at)
    d = np.where(inside, -dist, dist)
    # lift the 2D normal back to 3D; on-axis points get an arbitrary radial dir
    sgn = np.where(inside, -1.0, 1.0)
    vx = (rho - best_cx) * sgn
    vz = (z - best_cz) * sgn
    vn = np.sqrt(vx * vx + vz * vz)
    ok = vn > 1e-300
    vx = np.where(ok, vx / np.where(ok, vn, 1.0), 0.0)
    vz = np.where(ok, vz / np.where(ok, vn, 1.0), 1.0)
    n = np.zeros_like(pts)
    safe_rho = np.where(rho > 0.0, rho, 1.0)
    n[:, 0] = np.where(rho > 0.0, vx * pts[:, 0] / safe_rho, vx)
    n[:, 1] = np.where(rho > 0.0, vx * pts[:, 1] / safe_rho, 0.0)
    n[:, 2] = vz
    return d, n
