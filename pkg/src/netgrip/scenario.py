"""Scenario files: everything that determines a simulation run.

JSON, schema version 1. Validation errors name the offending field. The
bundled scenarios under netgrip/scenarios cover the object families used
in the acceptance suite (sphere, egg ellipsoid, banana capsule, stapler
box, inverted frustum, a light/heavy sphere pair, and an empty run).
"""

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .contact import ContactParams
from .errors import ScenarioError
from .linkage import LinkageConfig, fit_linkage
from .mesh import NetMesh, build_net
from .phases import SegmenterConfig
from .sensing import SensorSpec, default_sensor_layout
from .shapes import RigidObject
from .solver import SolverParams

SCHEMA_VERSION = 1

_SHAPE_DIMS = {
    "sphere": ("radius_mm",),
    "capsule": ("radius_mm", "length_mm"),
    "box": ("size_mm",),  # [a, b, c] full extents
    "ellipsoid": ("radii_mm",),  # [rx, ry, rz]
    "frustum": ("bottom_radius_mm", "top_radius_mm", "height_mm"),
}


@dataclass(frozen=True)
class PolicyControl:
    start_slider_mm: float
    close_speed_mm_s: float
    stop_voltage_v: float | None = None
    stop_force_n: float | None = None
    hold_s: float = 2.0
    reopen_speed_mm_s: float = 3.0
    min_slider_mm: float = 0.0
    tail_s: float = 1.5


@dataclass(frozen=True)
class ScriptControl:
    script: tuple  # ((time_s, slider_mm), ...)


@dataclass(frozen=True)
class Scenario:
    name: str
    linkage: LinkageConfig
    mesh: NetMesh
    obj: RigidObject | None
    sensors: tuple  # 4 SensorSpec
    control: PolicyControl | ScriptControl
    solver: SolverParams
    contact: ContactParams
    segmenter: SegmenterConfig
    sample_rate_hz: float
    seed: int = 0
    noise_sigma_v: float = 0.0
    release_support_ratio: float = 1.0
    raw: dict = field(default_factory=dict, repr=False)


_REQUIRED = object()


def _get(d, field_path, key, typ, default=_REQUIRED):
    path = f"{field_path}.{key}" if field_path else key
    if key not in d:
        if default is _REQUIRED:
            raise ScenarioError(path, "missing required field")
        return default
    val = d[key]
    if typ is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if typ is int and isinstance(val, int) and not isinstance(val, bool):
        return val
    if typ is bool and isinstance(val, bool):
        return val
    if typ is str and isinstance(val, str):
        return val
    if typ is list and isinstance(val, list):
        return val
    raise ScenarioError(path, f"expected {typ.__name__}, got {val!r}")


def _build_object(d):
    if d is None:
        return None
    shape = _get(d, "object", "shape", str)
    if shape not in _SHAPE_DIMS:
        raise ScenarioError("object.shape", f"unknown shape {shape!r}")
    if shape == "sphere":
        dims = (_get(d, "object", "radius_mm", float),)
    elif shape == "capsule":
        dims = (_get(d, "object", "radius_mm", float), _get(d, "object", "length_mm", float))
    elif shape == "box":
        size = _get(d, "object", "size_mm", list)
        if len(size) != 3:
            raise ScenarioError("object.size_mm", "expected 3 values")
        dims = tuple(float(x) for x in size)
    elif shape == "ellipsoid":
        radii = _get(d, "object", "radii_mm", list)
        if len(radii) != 3:
            raise ScenarioError("object.radii_mm", "expected 3 values")
        dims = tuple(float(x) for x in radii)
    else:  # frustum
        dims = (
            _get(d, "object", "bottom_radius_mm", float),
            _get(d, "object", "top_radius_mm", float),
            _get(d, "object", "height_mm", float),
        )
    pos = _get(d, "object", "position_mm", list)
    if len(pos) != 3:
        raise ScenarioError("object.position_mm", "expected 3 values")
    rot = _get(d, "object", "rotation_wxyz", list, default=[1.0, 0.0, 0.0, 0.0])
    if len(rot) != 4:
        raise ScenarioError("object.rotation_wxyz", "expected 4 values")
    try:
        return RigidObject(
            shape=shape,
            dims=dims,
            position=np.asarray([float(x) for x in pos]),
            rotation=tuple(float(x) for x in rot),
            mass_kg=_get(d, "object", "mass_kg", float, default=0.0),
            mu=_get(d, "object", "mu", float, default=0.5),
            name=_get(d, "object", "name", str, default=shape),
        )
    except ValueError as exc:
        raise ScenarioError("object", str(exc)) from None


def scenario_from_dict(data: dict, name: str = "") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    schema = data.get("schema")
    if schema != SCHEMA_VERSION:
        raise ScenarioError("schema", f"expected {SCHEMA_VERSION}, got {schema!r}")

    lk = data.get("linkage", {})
    if "claw_length" in lk:
        try:
            linkage = LinkageConfig.from_dict(lk)
        except (TypeError, ValueError) as exc:
            raise ScenarioError("linkage", str(exc)) from None
    else:
        linkage = fit_linkage(
            _get(lk, "linkage", "aperture_closed_mm", float, default=25.0),
            _get(lk, "linkage", "aperture_open_mm", float, default=84.12),
            _get(lk, "linkage", "travel_max_mm", float, default=9.0),
        )

    nd = data.get("net", {})
    try:
        mesh = build_net(
            rings=_get(nd, "net", "rings", int, default=5),
            segments=_get(nd, "net", "segments", int, default=16),
            cone_top_radius=_get(nd, "net", "top_radius_mm", float, default=6.0),
            cone_bottom_radius=_get(nd, "net", "bottom_radius_mm", float,
                                    default=linkage.aperture_closed / 2.0),
            depth=_get(nd, "net", "depth_mm", float, default=45.0),
            stiffness=_get(nd, "net", "stiffness_n_per_mm", float, default=0.6),
            tension_only=_get(nd, "net", "tension_only", bool, default=False),
            belt_area_mm2=_get(nd, "net", "belt_area_mm2", float, default=1.0),
        )
    except ValueError as exc:
        raise ScenarioError("net", str(exc)) from None

    obj = _build_object(data.get("object"))

    sd = data.get("sensors", {})
    spec_kwargs = dict(
        r0=_get(sd, "sensors", "r0_ohm", float, default=10_000.0),
        r_sat=_get(sd, "sensors", "r_sat_ohm", float, default=2_000.0),
        f_c=_get(sd, "sensors", "f_c_n", float, default=1.0),
        f_sat=_get(sd, "sensors", "f_sat_n", float, default=5.0),
        r_ref=_get(sd, "sensors", "r_ref_ohm", float, default=10_000.0),
        v_supply=_get(sd, "sensors", "v_supply_v", float, default=5.0),
    )
    try:
        sensors = tuple(
            default_sensor_layout(
                mesh,
                spec_kwargs=spec_kwargs,
                ring_lo=_get(sd, "sensors", "patch_ring_lo", int, default=1),
                ring_hi=_get(sd, "sensors", "patch_ring_hi", int, default=3),
                half_width_segments=_get(sd, "sensors", "patch_half_width_segments", int,
                                         default=None),
            )
        )
    except ValueError as exc:
        raise ScenarioError("sensors", str(exc)) from None

    cd = data.get("control")
    if not isinstance(cd, dict):
        raise ScenarioError("control", "missing control section")
    mode = _get(cd, "control", "mode", str)
    travel = linkage.travel_max
    if mode == "policy":
        control = PolicyControl(
            start_slider_mm=_get(cd, "control", "start_slider_mm", float),
            close_speed_mm_s=_get(cd, "control", "close_speed_mm_s", float),
            stop_voltage_v=_get(cd, "control", "stop_voltage_v", float, default=None),
            stop_force_n=_get(cd, "control", "stop_force_n", float, default=None),
            hold_s=_get(cd, "control", "hold_s", float, default=2.0),
            reopen_speed_mm_s=_get(cd, "control", "reopen_speed_mm_s", float, default=3.0),
            min_slider_mm=_get(cd, "control", "min_slider_mm", float, default=0.0),
            tail_s=_get(cd, "control", "tail_s", float, default=1.5),
        )
        if control.stop_voltage_v is None and control.stop_force_n is None:
            raise ScenarioError("control", "policy needs stop_voltage_v or stop_force_n")
        if control.close_speed_mm_s <= 0.0 or control.reopen_speed_mm_s <= 0.0:
            raise ScenarioError("control", "speeds must be positive")
        for key in ("start_slider_mm", "min_slider_mm"):
            val = getattr(control, key)
            if not (0.0 <= val <= travel):
                raise ScenarioError(f"control.{key}", f"{val} outside [0, {travel}]")
    elif mode == "script":
        raw_script = _get(cd, "control", "script", list)
        script = []
        last_t = -np.inf
        for i, row in enumerate(raw_script):
            if not isinstance(row, list) or len(row) != 2:
                raise ScenarioError(f"control.script[{i}]", "expected [time_s, slider_mm]")
            ts, sl = float(row[0]), float(row[1])
            if ts <= last_t:
                raise ScenarioError(f"control.script[{i}]", "times must be strictly increasing")
            if not (0.0 <= sl <= travel):
                raise ScenarioError(f"control.script[{i}]", f"slider {sl} outside [0, {travel}]")
            last_t = ts
            script.append((ts, sl))
        if not script:
            raise ScenarioError("control.script", "script is empty")
        control = ScriptControl(script=tuple(script))
    else:
        raise ScenarioError("control.mode", f"expected 'policy' or 'script', got {mode!r}")

    sv = data.get("solver", {})
    try:
        solver = SolverParams(
            tolerance=_get(sv, "solver", "tolerance_n", float, default=1e-6),
            max_iterations=_get(sv, "solver", "max_iterations", int, default=20000),
            history=_get(sv, "solver", "history", int, default=8),
        )
    except ValueError as exc:
        raise ScenarioError("solver", str(exc)) from None

    ct = data.get("contact", {})
    try:
        contact = ContactParams(
            k_contact=_get(ct, "contact", "k_contact_n_per_mm", float, default=50.0),
            k_tangent=_get(ct, "contact", "k_tangent_n_per_mm", float, default=2.0),
            g=_get(ct, "contact", "g_m_s2", float, default=9.81),
        )
    except ValueError as exc:
        raise ScenarioError("contact", str(exc)) from None
    release_ratio = _get(ct, "contact", "release_support_ratio", float, default=1.0)

    sg = data.get("segmenter", {})
    try:
        segmenter = SegmenterConfig(
            eps_base=_get(sg, "segmenter", "eps_base_v", float, default=0.05),
            slope_min=_get(sg, "segmenter", "slope_min_v_s", float, default=0.01),
            dwell_min=_get(sg, "segmenter", "dwell_min_s", float, default=0.5),
            slope_window=_get(sg, "segmenter", "slope_window", int, default=5),
            sustain=_get(sg, "segmenter", "sustain", int, default=2),
            refine_radius=_get(sg, "segmenter", "refine_radius", int, default=12),
        )
    except ValueError as exc:
        raise ScenarioError("segmenter", str(exc)) from None

    rate = _get(data, "", "sample_rate_hz", float, default=50.0)
    if rate <= 0.0:
        raise ScenarioError("sample_rate_hz", "must be positive")
    seed = _get(data, "", "seed", int, default=0)
    noise = _get(data, "", "noise_sigma_v", float, default=0.0)
    if noise < 0.0:
        raise ScenarioError("noise_sigma_v", "must be >= 0")

    return Scenario(
        name=data.get("name", name),
        linkage=linkage,
        mesh=mesh,
        obj=obj,
        sensors=sensors,
        control=control,
        solver=solver,
        contact=contact,
        segmenter=segmenter,
        sample_rate_hz=rate,
        seed=seed,
        noise_sigma_v=noise,
        release_support_ratio=release_ratio,
        raw=data,
    )


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"invalid JSON: {exc}") from None
    return scenario_from_dict(data, name=str(path))


def bundled_scenario_names() -> list:
    root = resources.files("netgrip").joinpath("scenarios")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str) -> Scenario:
    root = resources.files("netgrip").joinpath("scenarios")
    path = root.joinpath(f"{name}.json")
    if not path.is_file():
        raise ScenarioError("name", f"no bundled scenario {name!r}; "
                            f"available: {bundled_scenario_names()}")
    data = json.loads(path.read_text(encoding="utf-8"))
    return scenario_from_dict(data, name=name)
