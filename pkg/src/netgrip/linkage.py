"""Slider-to-claw kinematics for the eight-claw gripper.

Each claw is a planar two-link crank in its radial (rho, z) plane: a claw
link of length ``claw_length`` pinned to the fixed block at radius
``pivot_radius``, and a connecting rod of length ``rod_length`` from the
slider block on the axis to the claw tip. The three lengths are fitted so
the tip-circle diameter (the aperture) hits the measured closed/open
endpoints exactly at slider travel 0 and ``travel_max``.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .errors import LinkageFitError

ENDPOINT_TOL_MM = 1e-6
_PIVOT_GRID = np.round(np.arange(0.5, 12.01, 0.1), 10)
_MONOTONE_GRID = 1000


@dataclass(frozen=True)
class LinkageConfig:
    """Fitted claw-crank geometry. All lengths in mm."""

    travel_max: float
    aperture_closed: float
    aperture_open: float
    claw_length: float
    rod_length: float
    pivot_radius: float
    tip_z_closed: float
    claw_count: int = 8

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        cfg = cls(**d)
        _validate_endpoints(cfg)
        return cfg


def _tip_planar(cfg, s):
    """Claw-tip (rho, z) for slider travel s; supports array s.

    Intersects the claw circle around the pivot with the rod circle around
    the slider joint, on the tip-up branch.
    """
    pr = cfg.pivot_radius
    lc = cfg.claw_length
    lr = cfg.rod_length
    s = np.asarray(s, dtype=float)
    d2 = pr * pr + s * s
    d = np.sqrt(d2)
    a = (lc * lc - lr * lr + d2) / (2.0 * d)
    h2 = lc * lc - a * a
    if np.any(h2 < 0.0) or np.any(d <= 0.0):
        raise LinkageFitError(
            "claw and rod circles do not intersect inside the travel range",
            residuals={"min_h2": float(np.min(h2))},
        )
    h = np.sqrt(h2)
    u1 = -pr / d
    u2 = s / d
    rho = pr + a * u1 + h * u2
    z = a * u2 - h * u1
    return rho, z


def aperture(cfg: LinkageConfig, s) -> float:
    """Tip-circle diameter (mm) at slider travel s in [0, travel_max]."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0) or np.any(s_arr > cfg.travel_max):
        raise ValueError(f"slider travel {s} outside [0, {cfg.travel_max}]")
    rho, _ = _tip_planar(cfg, s_arr)
    out = 2.0 * rho
    return float(out) if np.isscalar(s) or out.ndim == 0 else out


def tip_height(cfg: LinkageConfig, s) -> float:
    """Tip z (mm) relative to the closed state (tips at z=0 when closed)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0) or np.any(s_arr > cfg.travel_max):
        raise ValueError(f"slider travel {s} outside [0, {cfg.travel_max}]")
    _, z = _tip_planar(cfg, s_arr)
    out = z - cfg.tip_z_closed
    return float(out) if np.isscalar(s) or out.ndim == 0 else out


def claw_tips(cfg: LinkageConfig, s) -> np.ndarray:
    """Positions of the 8 claw tips at slider travel s, shape (8, 3).

    Tips sit on a circle of diameter aperture(s), 45 degrees apart, at the
    common height tip_height(s).
    """
    r = 0.5 * aperture(cfg, s)
    z = tip_height(cfg, s)
    ang = np.arange(cfg.claw_count) * (2.0 * np.pi / cfg.claw_count)
    tips = np.empty((cfg.claw_count, 3))
    tips[:, 0] = r * np.cos(ang)
    tips[:, 1] = r * np.sin(ang)
    tips[:, 2] = z
    return tips


def slider_for_aperture(cfg: LinkageConfig, d: float) -> float:
    """Invert aperture() by bisection on the monotone opening curve."""
    if not (cfg.aperture_closed <= d <= cfg.aperture_open):
        raise ValueError(
            f"aperture {d} outside [{cfg.aperture_closed}, {cfg.aperture_open}]"
        )
    lo, hi = 0.0, cfg.travel_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if aperture(cfg, mid) < d:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, cfg.travel_max):
            break
    return 0.5 * (lo + hi)


def _candidate(aperture_closed, aperture_open, travel_max, pivot_radius):
    """Closed-form (claw, rod) lengths hitting both endpoints for this pivot."""
    rho0 = 0.5 * aperture_closed
    rho1 = 0.5 * aperture_open
    z1 = 0.5 * travel_max + pivot_radius * (rho1 - rho0) / travel_max
    lc2 = (rho1 - pivot_radius) ** 2 + z1 * z1
    z0sq = lc2 - (rho0 - pivot_radius) ** 2
    if z0sq <= 0.0:
        return None
    z0 = np.sqrt(z0sq)
    lr = np.sqrt(rho0 * rho0 + z0 * z0)
    return np.sqrt(lc2), lr


def fit_linkage(aperture_closed: float, aperture_open: float, travel_max: float) -> LinkageConfig:
    """Fit the crank geometry to the two aperture endpoints.

    The pivot radius is the free parameter; among feasible, strictly
    monotone candidates the one with the most linear mid-travel opening is
    chosen. Raises LinkageFitError with the best residuals when no
    candidate works.
    """
    if not (aperture_open > aperture_closed > 0.0):
        raise ValueError("need aperture_open > aperture_closed > 0")
    if travel_max <= 0.0:
        raise ValueError("need travel_max > 0")

    grid = np.linspace(0.0, travel_max, _MONOTONE_GRID)
    mid = 0.5 * (aperture_closed + aperture_open)
    best = None
    best_score = np.inf
    best_residual = {"endpoint": np.inf}
    for pr in _PIVOT_GRID:
        cand = _candidate(aperture_closed, aperture_open, travel_max, pr)
        if cand is None:
            continue
        lc, lr = cand
        cfg = LinkageConfig(
            travel_max=travel_max,
            aperture_closed=aperture_closed,
            aperture_open=aperture_open,
            claw_length=float(lc),
            rod_length=float(lr),
            pivot_radius=float(pr),
            tip_z_closed=0.0,
        )
        try:
            ap = aperture(cfg, grid)
        except LinkageFitError:
            continue
        e0 = abs(ap[0] - aperture_closed)
        e1 = abs(ap[-1] - aperture_open)
        best_residual = {
            "endpoint": min(best_residual["endpoint"], max(e0, e1)),
        }
        if e0 > ENDPOINT_TOL_MM or e1 > ENDPOINT_TOL_MM:
            continue
        if np.any(np.diff(ap) <= 0.0):
            continue
        score = abs(aperture(cfg, 0.5 * travel_max) - mid)
        if score < best_score:
            best_score = score
            best = cfg
    if best is None:
        raise LinkageFitError(
            f"no monotone crank geometry reaches aperture {aperture_closed} -> "
            f"{aperture_open} over {travel_max} mm of travel",
            residuals=best_residual,
        )
    _, z_closed = _tip_planar(best, 0.0)
    cfg = LinkageConfig(
        travel_max=best.travel_max,
        aperture_closed=best.aperture_closed,
        aperture_open=best.aperture_open,
        claw_length=best.claw_length,
        rod_length=best.rod_length,
        pivot_radius=best.pivot_radius,
        tip_z_closed=float(z_closed),
    )
    _validate_endpoints(cfg)
    return cfg


def _validate_endpoints(cfg):
    e0 = abs(aperture(cfg, 0.0) - cfg.aperture_closed)
    e1 = abs(aperture(cfg, cfg.travel_max) - cfg.aperture_open)
    if max(e0, e1) > ENDPOINT_TOL_MM:
        raise LinkageFitError(
            "config does not reproduce its aperture endpoints",
            residuals={"closed": e0, "open": e1},
        )
