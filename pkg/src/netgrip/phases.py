"""Five-phase segmentation of grasp voltage traces and plateau statistics.

A grasp trace per sensor: flat at the supply voltage (approach), a
sustained fall while the net closes on the object (closing), a low plateau
(hold), a sustained rise (opening), and flat at supply again (released).
Coarse boundaries come from a trailing least-squares slope plus a
supply-band test; each boundary is then refined to the best two-line
changepoint in a local window, which pins clean corners exactly and noisy
corners to a few samples.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, TraceFormatError

BASELINE_V = 5.0


class GraspPhase(enum.Enum):
    APPROACH = "approach"
    CLOSING = "closing"
    HOLD = "hold"
    OPENING = "opening"
    RELEASED = "released"


PHASE_ORDER = (
    GraspPhase.APPROACH,
    GraspPhase.CLOSING,
    GraspPhase.HOLD,
    GraspPhase.OPENING,
    GraspPhase.RELEASED,
)

NO_CONTACT = "no_contact"


@dataclass(frozen=True)
class SegmenterConfig:
    eps_base: float = 0.05  # V band around the supply baseline
    slope_min: float = 0.01  # V/s, below which the trace counts as flat
    dwell_min: float = 0.5  # s of flatness required to confirm a hold
    slope_window: int = 5  # samples in the trailing slope fit
    sustain: int = 2  # consecutive slope hits to confirm a trend
    refine_radius: int = 12  # samples searched around a coarse boundary
    baseline: float = BASELINE_V

    def __post_init__(self):
        if self.eps_base <= 0.0 or self.slope_min <= 0.0 or self.dwell_min <= 0.0:
            raise ValueError("thresholds must be positive")
        if self.slope_window < 2 or self.sustain < 1 or self.refine_radius < 1:
            raise ValueError("window parameters must be positive")


@dataclass(frozen=True)
class Trace:
    t: np.ndarray  # (n,) s, strictly increasing, uniform step
    voltages: np.ndarray  # (n, n_sensors') V in (0, baseline]
    forces: np.ndarray | None = None  # (n, n_sensors) N, optional

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.atleast_2d(np.asarray(self.voltages, dtype=float))
        if v.shape[0] != len(t):
            raise TraceFormatError("voltage rows do not match timestamps")
        if len(t) >= 2:
            dt = np.diff(t)
            if np.any(dt <= 0.0):
                raise TraceFormatError("timestamps must be strictly increasing")
            if np.max(dt) - np.min(dt) > 1e-9 * max(1.0, np.max(dt)):
                raise TraceFormatError("timestamps must have a uniform step")
        if np.any(v <= 0.0) or np.any(v > BASELINE_V + 1e-9):
            raise TraceFormatError(f"voltages must lie in (0, {BASELINE_V}]")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "voltages", v)
        if self.forces is not None:
            f = np.atleast_2d(np.asarray(self.forces, dtype=float))
            if f.shape != v.shape:
                raise TraceFormatError("force columns do not match voltage columns")
            object.__setattr__(self, "forces", f)

    @property
    def n_samples(self):
        return len(self.t)

    @property
    def n_sensors(self):
        return self.voltages.shape[1]

    @property
    def dt(self):
        return float(self.t[1] - self.t[0]) if len(self.t) >= 2 else 0.0

    def to_csv(self, path):
        cols = ["t"] + [f"v{i + 1}" for i in range(self.n_sensors)]
        if self.forces is not None:
            cols += [f"f{i + 1}" for i in range(self.n_sensors)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for i in range(self.n_samples):
                row = [repr(float(self.t[i]))]
                row += [repr(float(x)) for x in self.voltages[i]]
                if self.forces is not None:
                    row += [repr(float(x)) for x in self.forces[i]]
                fh.write(",".join(row) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise TraceFormatError("empty trace file", line=1)
        header = lines[0].split(",")
        if header[0] != "t" or len(header) < 2:
            raise TraceFormatError(f"bad trace header {lines[0]!r}", line=1)
        n_v = sum(1 for h in header if h.startswith("v"))
        n_f = sum(1 for h in header if h.startswith("f"))
        if n_f not in (0, n_v) or 1 + n_v + n_f != len(header):
            raise TraceFormatError(f"bad trace header {lines[0]!r}", line=1)
        t, vs, fs = [], [], []
        for lineno, ln in enumerate(lines[1:], start=2):
            parts = ln.split(",")
            if len(parts) != len(header):
                raise TraceFormatError(
                    f"expected {len(header)} fields, got {len(parts)}", line=lineno
                )
            try:
                vals = [float(x) for x in parts]
            except ValueError as exc:
                raise TraceFormatError(str(exc), line=lineno) from None
            t.append(vals[0])
            vs.append(vals[1 : 1 + n_v])
            if n_f:
                fs.append(vals[1 + n_v :])
        return cls(
            t=np.asarray(t), voltages=np.asarray(vs),
            forces=np.asarray(fs) if n_f else None,
        )


@dataclass(frozen=True)
class PhaseInterval:
    phase: str  # GraspPhase value or NO_CONTACT
    start: int  # first sample index
    end: int  # last sample index, inclusive
    start_s: float
    end_s: float


@dataclass(frozen=True)
class SensorReport:
    sensor: int
    touched: bool
    intervals: tuple
    truncated: bool = False

    def interval(self, phase: GraspPhase):
        for iv in self.intervals:
            if iv.phase == phase.value:
                return iv
        return None


@dataclass(frozen=True)
class PhaseReport:
    sensors: tuple

    def to_dict(self):
        return {
            "schema": 1,
            "sensors": [
                {
                    "sensor": s.sensor,
                    "touched": s.touched,
                    "truncated": s.truncated,
                    "intervals": [
                        {
                            "phase": iv.phase,
                            "start_index": iv.start,
                            "end_index": iv.end,
                            "start_s": iv.start_s,
                            "end_s": iv.end_s,
                        }
                        for iv in s.intervals
                    ],
                }
                for s in self.sensors
            ],
        }


def trailing_slopes(t, v, window):
    """Least-squares slope (V/s) of the trailing window ending at each i."""
    n = len(v)
    out = np.zeros(n)
    for i in range(1, n):
        a = max(0, i - window + 1)
        tt = t[a : i + 1]
        vv = v[a : i + 1]
        mt = tt.mean()
        mv = vv.mean()
        stt = float(np.sum((tt - mt) ** 2))
        if stt > 0.0:
            out[i] = float(np.sum((tt - mt) * (vv - mv)) / stt)
    return out


def _line_sse(t, y):
    n = len(y)
    if n <= 1:
        return 0.0
    mt = t.mean()
    my = y.mean()
    stt = float(np.sum((t - mt) ** 2))
    sty = float(np.sum((t - mt) * (y - my)))
    syy = float(np.sum((y - my) ** 2))
    if stt <= 0.0:
        return syy
    return max(0.0, syy - sty * sty / stt)


def _refine_boundary(t, v, coarse, lo_limit, hi_limit, radius):
    """Best two-line changepoint near a coarse boundary.

    Candidates k are the first index of the right-hand piece; context for
    the fits extends 2*radius but never across the neighboring boundaries.
    """
    a = max(lo_limit, coarse - 2 * radius)
    b = min(hi_limit, coarse + 2 * radius)  # exclusive
    k_lo = max(a + 1, coarse - radius)
    k_hi = min(b - 1, coarse + radius)
    if k_hi < k_lo:
        return coarse
    best_k = coarse
    best = np.inf
    for k in range(k_lo, k_hi + 1):
        sse = _line_sse(t[a:k], v[a:k]) + _line_sse(t[k:b], v[k:b])
        if sse < best - 1e-15:
            best = sse
            best_k = k
    return best_k


def _sustained(mask, start, count):
    """First index >= start where mask holds for count consecutive samples."""
    run = 0
    for i in range(start, len(mask)):
        run = run + 1 if mask[i] else 0
        if run >= count:
            return i - count + 1
    return None


def _segment_channel(t, v, cfg):
    n = len(v)
    base = cfg.baseline
    below = v < base - cfg.eps_base
    if not below.any():
        return None, False  # untouched

    dt = float(t[1] - t[0])
    dwell_samples = max(1, int(round(cfg.dwell_min / dt)))
    slopes = trailing_slopes(t, v, cfg.slope_window)

    # closing: first sustained departure from the supply band
    c1 = _sustained(below, 0, cfg.sustain)
    if c1 is None:
        return None, False
    # hold: first below-band sample where the trace stops falling and stays
    # flat-or-rising for a dwell
    not_falling = slopes >= -cfg.slope_min
    hold = _sustained(not_falling & below, max(c1 + 1, 1), dwell_samples)
    truncated = False
    opening = released = None
    if hold is None:
        truncated = True
    else:
        rising = slopes > cfg.slope_min
        opening = _sustained(rising, hold + dwell_samples, cfg.sustain)
        if opening is None:
            truncated = True
        else:
            in_band = v >= base - cfg.eps_base
            rel = _sustained(in_band, opening, cfg.sustain)
            if rel is None:
                truncated = True
            else:
                released = rel

    # refinement, left to right, each bounded by its neighbors
    r = cfg.refine_radius
    b1 = _refine_boundary(t, v, c1, 0, hold if hold is not None else n, r) if c1 > 0 else 0
    b2 = b3 = b4 = None
    if hold is not None:
        b2 = _refine_boundary(t, v, hold, b1 + 1, opening if opening is not None else n, r)
        if opening is not None:
            b3 = _refine_boundary(t, v, opening, b2 + 1, released if released is not None else n, r)
            if released is not None:
                b4 = _refine_boundary(t, v, released, b3 + 1, n, r)

    bounds = [0, b1]
    phases = [GraspPhase.APPROACH, GraspPhase.CLOSING]
    for b, ph in ((b2, GraspPhase.HOLD), (b3, GraspPhase.OPENING), (b4, GraspPhase.RELEASED)):
        if b is not None:
            bounds.append(max(b, bounds[-1]))  # refinement never reorders phases
            phases.append(ph)
    bounds.append(n)

    intervals = []
    for idx in range(len(phases)):
        lo, hi = bounds[idx], bounds[idx + 1]
        if hi > lo:
            intervals.append(
                PhaseInterval(
                    phase=phases[idx].value, start=lo, end=hi - 1,
                    start_s=float(t[lo]), end_s=float(t[hi - 1]),
                )
            )
    return tuple(intervals), truncated


def segment(trace: Trace, cfg: SegmenterConfig | None = None) -> PhaseReport:
    """Segment every sensor channel into the five grasp phases.

    Sensors that never leave the supply band get a single no-contact
    interval; traces that end mid-grasp are reported truncated with the
    phases found so far.
    """
    cfg = cfg or SegmenterConfig()
    if trace.n_samples < 2:
        raise InsufficientDataError("trace needs at least two samples")
    if float(trace.t[-1] - trace.t[0]) < cfg.dwell_min:
        raise InsufficientDataError(
            f"trace spans {trace.t[-1] - trace.t[0]:.3f} s, "
            f"shorter than dwell_min={cfg.dwell_min}"
        )
    reports = []
    for s in range(trace.n_sensors):
        intervals, truncated = _segment_channel(trace.t, trace.voltages[:, s], cfg)
        if intervals is None:
            n = trace.n_samples
            reports.append(
                SensorReport(
                    sensor=s + 1, touched=False,
                    intervals=(
                        PhaseInterval(NO_CONTACT, 0, n - 1, float(trace.t[0]), float(trace.t[-1])),
                    ),
                )
            )
        else:
            reports.append(
                SensorReport(sensor=s + 1, touched=True, intervals=intervals,
                             truncated=truncated)
            )
    return PhaseReport(sensors=tuple(reports))


def plateau_stats(trace: Trace, report: PhaseReport, curve) -> list:
    """Per-sensor (mean hold voltage, mean hold force, saturated fraction).

    Untouched sensors report (baseline, 0, 0); a touched sensor without a
    hold interval violates the precondition.
    """
    out = []
    for s in report.sensors:
        if not s.touched:
            out.append((BASELINE_V, 0.0, 0.0))
            continue
        iv = s.interval(GraspPhase.HOLD)
        if iv is None:
            raise ValueError(f"sensor {s.sensor} has no hold interval")
        vs = trace.voltages[iv.start : iv.end + 1, s.sensor - 1]
        forces = []
        flags = []
        for v in vs:
            f, sat = curve.voltage_to_force(float(v))
            forces.append(f)
            flags.append(sat)
        out.append((float(vs.mean()), float(np.mean(forces)), float(np.mean(flags))))
    return out


class StreamSegmenter:
    """Incremental phase tracking that matches the batch segmenter on
    completed traces (finalize() runs the batch algorithm on the buffer).

    Live phase estimates use the same thresholds but no refinement, so they
    lag a boundary by up to the slope window plus the sustain/dwell counts.
    """

    def __init__(self, n_sensors: int, cfg: SegmenterConfig | None = None):
        self.cfg = cfg or SegmenterConfig()
        self.n_sensors = n_sensors
        self._t = []
        self._v = []
        self._phase = [GraspPhase.APPROACH] * n_sensors
        self._touched = [False] * n_sensors
        self._runs = [{"fall": 0, "flat": 0, "rise": 0} for _ in range(n_sensors)]

    def push(self, t: float, volts) -> list:
        self._t.append(float(t))
        self._v.append([float(x) for x in volts])
        cfg = self.cfg
        n = len(self._t)
        if n < 2:
            return self.current_phases()
        dt = self._t[1] - self._t[0]
        dwell_samples = max(1, int(round(cfg.dwell_min / dt)))
        w = cfg.slope_window
        ta = np.asarray(self._t[max(0, n - w):])
        for s in range(self.n_sensors):
            v = self._v[-1][s]
            va = np.asarray([row[s] for row in self._v[max(0, n - w):]])
            mt, mv = ta.mean(), va.mean()
            stt = float(np.sum((ta - mt) ** 2))
            slope = float(np.sum((ta - mt) * (va - mv)) / stt) if stt > 0 else 0.0
            below = v < cfg.baseline - cfg.eps_base
            runs = self._runs[s]
            runs["fall"] = runs["fall"] + 1 if (below and slope < -cfg.slope_min) else 0
            runs["flat"] = runs["flat"] + 1 if (below and abs(slope) <= cfg.slope_min) else 0
            runs["rise"] = runs["rise"] + 1 if slope > cfg.slope_min else 0
            ph = self._phase[s]
            if ph == GraspPhase.APPROACH and runs["fall"] >= cfg.sustain:
                self._phase[s] = GraspPhase.CLOSING
                self._touched[s] = True
            elif ph == GraspPhase.CLOSING and runs["flat"] >= dwell_samples:
                self._phase[s] = GraspPhase.HOLD
            elif ph == GraspPhase.HOLD and runs["rise"] >= cfg.sustain:
                self._phase[s] = GraspPhase.OPENING
            elif ph == GraspPhase.OPENING and not below:
                self._phase[s] = GraspPhase.RELEASED
        return self.current_phases()

    def current_phases(self) -> list:
        return list(self._phase)

    def finalize(self) -> PhaseReport:
        trace = Trace(t=np.asarray(self._t), voltages=np.asarray(self._v))
        return segment(trace, self.cfg)


def synthetic_trapezoid(
    rate_hz: float = 100.0,
    approach_s: float = 1.0,
    fall_s: float = 1.0,
    hold_s: float = 2.0,
    rise_s: float = 1.0,
    tail_s: float = 1.0,
    low_v=(3.0,),
    noise_sigma: float = 0.0,
    seed: int = 0,
    baseline: float = BASELINE_V,
):
    """Trapezoid trace generator with known corner indices.

    Returns (Trace, corners) where corners[sensor] = (closing, hold,
    opening, released) sample indices, each the first index of its phase.
    """
    dt = 1.0 / rate_hz
    n_a = int(round(approach_s * rate_hz))
    n_f = int(round(fall_s * rate_hz))
    n_h = int(round(hold_s * rate_hz))
    n_r = int(round(rise_s * rate_hz))
    n_t = int(round(tail_s * rate_hz))
    n = n_a + n_f + n_h + n_r + n_t
    t = np.arange(n) * dt
    rng = np.random.default_rng(seed)
    cols = []
    corners = []
    for low in low_v:
        v = np.empty(n)
        v[:n_a] = baseline
        v[n_a : n_a + n_f] = np.linspace(baseline, low, n_f, endpoint=False)
        v[n_a + n_f : n_a + n_f + n_h] = low
        v[n_a + n_f + n_h : n_a + n_f + n_h + n_r] = np.linspace(
            low, baseline, n_r, endpoint=False
        )
        v[n_a + n_f + n_h + n_r :] = baseline
        if noise_sigma > 0.0:
            v = v + rng.normal(0.0, noise_sigma, size=n)
            v = np.clip(v, 1e-6, baseline)
        cols.append(v)
        corners.append((n_a, n_a + n_f, n_a + n_f + n_h, n_a + n_f + n_h + n_r))
    return Trace(t=t, voltages=np.column_stack(cols)), corners
