"""Piezoresistive sensing chain: patch force -> resistance -> divider voltage.

Resistance model: R(F) = r_sat + (r0 - r_sat) * exp(-F / f_c). The curve
constants are synthetic (chosen so the response is monotone and flattens
out past f_sat, the force the sensor can no longer resolve); only the
shape constraints are meaningful. The divider voltage is normalized so a
zero-force sensor reads exactly v_supply.
"""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SensorSpec:
    id: int
    patch_nodes: tuple
    r0: float = 10_000.0  # ohm at zero force
    r_sat: float = 2_000.0  # ohm asymptote under large force
    f_c: float = 1.0  # N, exponential force constant
    f_sat: float = 5.0  # N, force beyond which dR/dF is negligible
    r_ref: float = 10_000.0  # ohm divider reference
    v_supply: float = 5.0  # V

    def __post_init__(self):
        if not (self.r0 > self.r_sat > 0.0):
            raise ValueError("need r0 > r_sat > 0")
        if self.r_ref <= 0.0 or self.f_c <= 0.0 or self.f_sat <= 0.0:
            raise ValueError("r_ref, f_c, f_sat must be positive")


def force_to_resistance(spec: SensorSpec, force_n: float) -> float:
    """Sensor resistance (ohm) under an aggregate normal force (N)."""
    if force_n < 0.0:
        raise ValueError(f"force must be >= 0, got {force_n}")
    if force_n == 0.0:
        return spec.r0
    return spec.r_sat + (spec.r0 - spec.r_sat) * math.exp(-force_n / spec.f_c)


def resistance_to_voltage(spec: SensorSpec, r_ohm: float) -> float:
    """Divider output (V), scaled so resistance r0 reads exactly v_supply."""
    if r_ohm <= 0.0:
        raise ValueError(f"resistance must be > 0, got {r_ohm}")
    num = r_ohm * (spec.r0 + spec.r_ref)
    den = (r_ohm + spec.r_ref) * spec.r0
    return spec.v_supply * num / den


def force_to_voltage(spec: SensorSpec, force_n: float) -> float:
    return resistance_to_voltage(spec, force_to_resistance(spec, force_n))


def read_sensor(spec: SensorSpec, result) -> tuple:
    """Voltage and aggregate contact normal force over the sensor patch."""
    idx = np.asarray(spec.patch_nodes, dtype=np.int64)
    f = result.contact_normal[idx]
    aggregate = float(np.sum(np.sqrt(np.einsum("ij,ij->i", f, f))))
    return force_to_voltage(spec, aggregate), aggregate


@dataclass(frozen=True)
class CalibrationCurve:
    """Invertible force/resistance/voltage map plus a tabulated grid."""

    r0: float
    r_sat: float
    f_c: float
    f_sat: float
    r_ref: float
    v_supply: float
    table: tuple = field(default=())  # (force, resistance, voltage) rows

    @classmethod
    def from_spec(cls, spec: SensorSpec, f_max: float = 10.0, f_step: float = 0.1):
        grid = np.round(np.arange(0.0, f_max + 0.5 * f_step, f_step), 12)
        rows = []
        for f in grid:
            r = force_to_resistance(spec, float(f))
            rows.append((float(f), r, resistance_to_voltage(spec, r)))
        return cls(
            r0=spec.r0, r_sat=spec.r_sat, f_c=spec.f_c, f_sat=spec.f_sat,
            r_ref=spec.r_ref, v_supply=spec.v_supply, table=tuple(rows),
        )

    def _spec(self):
        return SensorSpec(id=0, patch_nodes=(), r0=self.r0, r_sat=self.r_sat,
                          f_c=self.f_c, f_sat=self.f_sat, r_ref=self.r_ref,
                          v_supply=self.v_supply)

    def voltage_to_force(self, volts: float) -> tuple:
        """Invert the chain analytically. Returns (force N, saturated flag).

        Past the saturation knee the inferred force is unreliable; the flag
        is set and the estimate clamps to the model's resolvable range.
        """
        if not (0.0 < volts <= self.v_supply):
            raise ValueError(f"voltage must be in (0, {self.v_supply}], got {volts}")
        r = volts * self.r0 * self.r_ref / (
            self.v_supply * (self.r0 + self.r_ref) - volts * self.r0
        )
        if r >= self.r0:
            return 0.0, False
        if r <= self.r_sat:
            return self.f_sat, True
        force = -self.f_c * math.log((r - self.r_sat) / (self.r0 - self.r_sat))
        return force, force >= self.f_sat

    def saturation_voltage(self) -> float:
        """Voltage at the saturation force; readings at/below it are flagged."""
        return force_to_voltage(self._spec(), self.f_sat)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(
                "# model "
                + " ".join(
                    f"{k}={getattr(self, k)!r}"
                    for k in ("r0", "r_sat", "f_c", "f_sat", "r_ref", "v_supply")
                )
                + "\n"
            )
            fh.write("force_n,resistance_ohm,voltage_v\n")
            for f, r, v in self.table:
                fh.write(f"{f!r},{r!r},{v!r}\n")

    @classmethod
    def from_csv(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
        if not lines or not lines[0].startswith("# model "):
            raise ValueError(f"{path}: missing calibration model header")
        params = {}
        for tok in lines[0][len("# model "):].split():
            k, val = tok.split("=", 1)
            params[k] = float(val)
        rows = []
        for ln in lines[2:]:
            if not ln:
                continue
            f, r, v = (float(x) for x in ln.split(","))
            rows.append((f, r, v))
        return cls(table=tuple(rows), **params)


def default_sensor_layout(mesh, spec_kwargs=None, ring_lo=1, ring_hi=3,
                          half_width_segments=None):
    """Four disjoint patches 90 degrees apart on the lower cone rings.

    Patches are integer windows of segment indices centered on the four
    quadrant directions, so a rotationally symmetric load reads identically
    on all four sensors.
    """
    spec_kwargs = spec_kwargs or {}
    ring_hi = min(ring_hi, mesh.rings - 1)
    if mesh.segments % 4 != 0:
        raise ValueError("sensor layout needs segments divisible by 4")
    quarter = mesh.segments // 4
    if half_width_segments is None:
        half_width_segments = max(1, mesh.segments // 16)
    if 2 * half_width_segments + 1 > quarter:
        raise ValueError(
            f"half_width_segments={half_width_segments} makes patches overlap"
        )
    specs = []
    for sid in range(1, 5):
        c = (sid - 1) * quarter
        nodes = []
        for ring in range(ring_lo, ring_hi + 1):
            for off in range(-half_width_segments, half_width_segments + 1):
                j = (c + off) % mesh.segments
                nodes.append(ring * mesh.segments + j)
        specs.append(SensorSpec(id=sid, patch_nodes=tuple(sorted(nodes)), **spec_kwargs))
    seen = set()
    for s in specs:
        overlap = seen.intersection(s.patch_nodes)
        if overlap:
            raise ValueError(f"sensor patches overlap at nodes {sorted(overlap)}")
        seen.update(s.patch_nodes)
    return specs
