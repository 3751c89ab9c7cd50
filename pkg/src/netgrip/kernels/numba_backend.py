"""Numba-jitted kernels for the hot inner loops (springs, SDF evaluation).

Signatures match numpy_backend exactly. fastmath stays off so results are
reproducible run to run.
"""

import numpy as np
from numba import njit

SHAPE_SPHERE = 0
SHAPE_CAPSULE = 1
SHAPE_BOX = 2
SHAPE_ELLIPSOID = 3
SHAPE_FRUSTUM = 4

_ELLIPSOID_BISECT_ITERS = 100


@njit(cache=True)
def spring_energy_grad(pos, ea, eb, rest, k, tension_only):
    n_nodes = pos.shape[0]
    grad = np.zeros((n_nodes, 3))
    energy = 0.0
    min_len = np.inf
    for e in range(ea.shape[0]):
        a = ea[e]
        b = eb[e]
        dx = pos[b, 0] - pos[a, 0]
        dy = pos[b, 1] - pos[a, 1]
        dz = pos[b, 2] - pos[a, 2]
        length = np.sqrt(dx * dx + dy * dy + dz * dz)
        if length < min_len:
            min_len = length
        stretch = length - rest[e]
        if tension_only and stretch < 0.0:
            continue
        energy += 0.5 * k[e] * stretch * stretch
        if length > 0.0:
            c = k[e] * stretch / length
            grad[a, 0] -= c * dx
            grad[a, 1] -= c * dy
            grad[a, 2] -= c * dz
            grad[b, 0] += c * dx
            grad[b, 1] += c * dy
            grad[b, 2] += c * dz
    return energy, grad, min_len


@njit(cache=True)
def node_tension_sum(pos, ea, eb, rest, k, tension_only):
    out = np.zeros((pos.shape[0], 3))
    for e in range(ea.shape[0]):
        a = ea[e]
        b = eb[e]
        dx = pos[b, 0] - pos[a, 0]
        dy = pos[b, 1] - pos[a, 1]
        dz = pos[b, 2] - pos[a, 2]
        length = np.sqrt(dx * dx + dy * dy + dz * dz)
        stretch = length - rest[e]
        if tension_only and stretch < 0.0:
            continue
        if length > 0.0:
            c = k[e] * stretch / length
            out[a, 0] += c * dx
            out[a, 1] += c * dy
            out[a, 2] += c * dz
            out[b, 0] -= c * dx
            out[b, 1] -= c * dy
            out[b, 2] -= c * dz
    return out


@njit(cache=True)
def _sdf_point(code, params, px, py, pz):
    """Scalar SDF + outward normal, one point in the shape frame."""
    if code == SHAPE_SPHERE:
        r = params[0]
        norm = np.sqrt(px * px + py * py + pz * pz)
        if norm > 0.0:
            return norm - r, px / norm, py / norm, pz / norm
        return -r, 0.0, 0.0, 1.0
    if code == SHAPE_CAPSULE:
        r = params[0]
        hh = params[1]
        cz = pz
        if cz > hh:
            cz = hh
        elif cz < -hh:
            cz = -hh
        qx, qy, qz = px, py, pz - cz
        norm = np.sqrt(qx * qx + qy * qy + qz * qz)
        if norm > 0.0:
            return norm - r, qx / norm, qy / norm, qz / norm
        return -r, 0.0, 0.0, 1.0
    if code == SHAPE_BOX:
        hx, hy, hz = params[0], params[1], params[2]
        qx = abs(px) - hx
        qy = abs(py) - hy
        qz = abs(pz) - hz
        if qx < 0.0 and qy < 0.0 and qz < 0.0:
            # inside: nearest face
            d = qx
            axis = 0
            if qy > d:
                d = qy
                axis = 1
            if qz > d:
                d = qz
                axis = 2
            nx = ny = nz = 0.0
            if axis == 0:
                nx = 1.0 if px >= 0.0 else -1.0
            elif axis == 1:
                ny = 1.0 if py >= 0.0 else -1.0
            else:
                nz = 1.0 if pz >= 0.0 else -1.0
            return d, nx, ny, nz
        cx = min(max(px, -hx), hx)
        cy = min(max(py, -hy), hy)
        cz = min(max(pz, -hz), hz)
        dx, dy, dz = px - cx, py - cy, pz - cz
        dist = np.sqrt(dx * dx + dy * dy + dz * dz)
        if dist > 0.0:
            return dist, dx / dist, dy / dist, dz / dist
        return 0.0, 0.0, 0.0, 1.0
    if code == SHAPE_ELLIPSOID:
        rx, ry, rz = params[0], params[1], params[2]
        yx, yy, yz = px, py, pz
        if abs(yx) < 1e-12 * rx:
            yx = 1e-12 * rx
        if abs(yy) < 1e-12 * ry:
            yy = 1e-12 * ry
        if abs(yz) < 1e-12 * rz:
            yz = 1e-12 * rz
        ax, ay, az = rx * yx, ry * yy, rz * yz
        rmin = min(rx, min(ry, rz))
        if rx == rmin:
            amin = abs(ax)
        elif ry == rmin:
            amin = abs(ay)
        else:
            amin = abs(az)
        anorm = np.sqrt(ax * ax + ay * ay + az * az)
        rmin2 = rmin * rmin
        t_lo = -rmin2 + 0.5 * amin
        t_hi = anorm
        if t_hi < t_lo + rmin2 + 1.0:
            t_hi = t_lo + rmin2 + 1.0
        rx2, ry2, rz2 = rx * rx, ry * ry, rz * rz
        for _ in range(_ELLIPSOID_BISECT_ITERS):
            t = 0.5 * (t_lo + t_hi)
            g = (ax / (t + rx2)) ** 2 + (ay / (t + ry2)) ** 2 + (az / (t + rz2)) ** 2
            if g > 1.0:
                t_lo = t
            else:
                t_hi = t
        t = 0.5 * (t_lo + t_hi)
        fx = rx2 * yx / (t + rx2)
        fy = ry2 * yy / (t + ry2)
        fz = rz2 * yz / (t + rz2)
        dx, dy, dz = yx - fx, yy - fy, yz - fz
        dist = np.sqrt(dx * dx + dy * dy + dz * dz)
        level = (yx / rx) ** 2 + (yy / ry) ** 2 + (yz / rz) ** 2
        d = dist if level >= 1.0 else -dist
        nx, ny, nz = fx / rx2, fy / ry2, fz / rz2
        nn = np.sqrt(nx * nx + ny * ny + nz * nz)
        if nn == 0.0:
            nn = 1.0
        return d, nx / nn, ny / nn, nz / nn
    # frustum
    rb, rt, hh = params[0], params[1], params[2]
    rho = np.sqrt(px * px + py * py)
    best_d2 = np.inf
    best_cx = 0.0
    best_cz = 0.0
    for seg in range(3):
        if seg == 0:
            sax, saz, sbx, sbz = 0.0, -hh, rb, -hh
        elif seg == 1:
            sax, saz, sbx, sbz = 0.0, hh, rt, hh
        else:
            sax, saz, sbx, sbz = rb, -hh, rt, hh
        abx, abz = sbx - sax, sbz - saz
        denom = abx * abx + abz * abz
        if denom > 0.0:
            t = ((rho - sax) * abx + (pz - saz) * abz) / denom
        else:
            t = 0.0
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        cx = sax + t * abx
        cz = saz + t * abz
        d2 = (rho - cx) ** 2 + (pz - cz) ** 2
        if d2 < best_d2:
            best_d2 = d2
            best_cx = cx
            best_cz = cz
    dist = np.sqrt(best_d2)
    if hh > 0.0:
        r_at = rb + (rt - rb) * (pz + hh) / (2.0 * hh)
    else:
        r_at = max(rb, rt)
    inside = (pz >= -hh) and (pz <= hh) and (rho <= r_at)
    sgn = -1.0 if inside else 1.0
    vx = (rho - best_cx) * sgn
    vz = (pz - best_cz) * sgn
    vn = np.sqrt(vx * vx + vz * vz)
    if vn > 1e-300:
        vx /= vn
        vz /= vn
    else:
        vx, vz = 0.0, 1.0
    if rho > 0.0:
        nx = vx * px / rho
        ny = vx * py / rho
    else:
        nx = vx
        ny = 0.0
    d = -dist if inside else dist
    return d, nx, ny, vz


@njit(cache=True)
def sdf_batch(code, params, pts):
    n = pts.shape[0]
    d = np.empty(n)
    nrm = np.empty((n, 3))
    for i in range(n):
        di, nx, ny, nz = _sdf_point(code, params, pts[i, 0], pts[i, 1], pts[i, 2])
        d[i] = di
        nrm[i, 0] = nx
        nrm[i, 1] = ny
        nrm[i, 2] = nz
    return d, nrm
