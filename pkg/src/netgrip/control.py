"""Grasp-cycle execution: scripted or threshold-stop control of the slider,
one quasi-static equilibrium per sample tick, sensor readout, telemetry.

The controller mirrors the manual experiment procedure: the object is held
in place (as if by the operator's hand) until the net's own upward support
reaches its weight, then released to settle freely. Closing stops when a
touched sensor crosses the stop threshold, holds, then reopens. External
commands (jog/stop/reopen/set_threshold) override the configured control
for the rest of the run.
"""

import json
from dataclasses import dataclass

import numpy as np

from .contact import FrictionState, hold_check, update_anchors
from .errors import ConvergenceError, RunError
from .linkage import aperture as linkage_aperture
from .linkage import tip_height
from .mesh import rim_targets
from .phases import BASELINE_V, StreamSegmenter, Trace, plateau_stats, segment
from .scenario import PolicyControl, Scenario, ScriptControl
from .sensing import CalibrationCurve, read_sensor
from .solver import initialize_positions, mesh_frame, solve_equilibrium


@dataclass(frozen=True)
class TelemetryFrame:
    t: float  # s
    slider_mm: float
    aperture_mm: float
    volts: tuple  # 4 sensor voltages, V
    forces: tuple  # 4 aggregate patch normal forces, N
    hold_margin: float  # N, nan without an object in play
    phases: tuple  # 4 provisional phase names
    iterations: int
    mode: str
    object_dropped: bool = False

    def to_dict(self):
        return {
            "t": self.t,
            "slider_mm": self.slider_mm,
            "aperture_mm": self.aperture_mm,
            "volts": list(self.volts),
            "forces": list(self.forces),
            "hold_margin": None if np.isnan(self.hold_margin) else self.hold_margin,
            "phases": list(self.phases),
            "iterations": self.iterations,
            "mode": self.mode,
            "object_dropped": self.object_dropped,
        }


@dataclass
class RunResult:
    scenario_name: str
    frames: list
    trace: Trace
    phase_report: object
    plateau: list  # per sensor (mean V, mean N, saturated fraction)
    verdict: str  # held | slips | no-grip
    final_margin: float
    calibration: CalibrationCurve
    object_dropped: bool = False
    final_mesh: dict | None = None

    def summary_dict(self):
        rep = self.phase_report.to_dict() if self.phase_report is not None else None
        return {
            "schema": 1,
            "scenario": self.scenario_name,
            "verdict": self.verdict,
            "final_margin_n": None if np.isnan(self.final_margin) else self.final_margin,
            "object_dropped": self.object_dropped,
            "n_frames": len(self.frames),
            "plateau": [
                {
                    "sensor": i + 1,
                    "mean_voltage_v": p[0],
                    "mean_force_n": p[1],
                    "saturated_fraction": p[2],
                }
                for i, p in enumerate(self.plateau)
            ],
            "phases": rep,
        }


class CommandRejected(Exception):
    """Raised back to the bridge when a live command is invalid."""


class GripController:
    """Tick-at-a-time simulation; feeds the live bridge and run_scenario."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.dt = 1.0 / scenario.sample_rate_hz
        self.tick_index = 0
        self.done = False
        self.mode = "script" if isinstance(scenario.control, ScriptControl) else "closing"
        self.manual_target = None
        self.stop_voltage = (
            scenario.control.stop_voltage_v
            if isinstance(scenario.control, PolicyControl)
            else None
        )
        if isinstance(scenario.control, PolicyControl):
            self.slider = float(scenario.control.start_slider_mm)
        else:
            self.slider = float(scenario.control.script[0][1])
        self.hold_until = None
        self.tail_until = None
        self.triggered = False
        self.rng = np.random.default_rng(scenario.seed)
        self.friction = FrictionState()
        self.obj_center = None if scenario.obj is None else scenario.obj.position.copy()
        self.hand_held = scenario.obj is not None and scenario.obj.mass_kg > 0.0
        self.dropped = False
        self.positions = initialize_positions(
            scenario.mesh, self._rim(self.slider)
        )
        self.stream = StreamSegmenter(len(scenario.sensors), scenario.segmenter)
        self.calibration = CalibrationCurve.from_spec(scenario.sensors[0])
        self.frames = []
        self.rows_t = []
        self.rows_v = []
        self.rows_f = []
        self.margins = []
        self.sliders = []
        self.verdict_margin = None  # margin captured at the verdict tick
        self.any_touched = False
        self.last_result = None

    def _rim(self, slider):
        ap = linkage_aperture(self.sc.linkage, slider)
        z = tip_height(self.sc.linkage, slider)
        return rim_targets(self.sc.mesh, ap, z)

    # -- command handling -------------------------------------------------
    def command(self, cmd: dict):
        """Apply a live command before the next tick."""
        kind = cmd.get("type")
        if kind == "jog":
            target = float(cmd.get("target_mm"))
            if not (0.0 <= target <= self.sc.linkage.travel_max):
                raise CommandRejected(
                    f"jog target {target} outside [0, {self.sc.linkage.travel_max}]"
                )
            self.mode = "manual"
            self.manual_target = target
        elif kind == "stop":
            self.mode = "manual"
            self.manual_target = self.slider
        elif kind == "reopen":
            self.mode = "reopening"
            self.manual_target = None
        elif kind == "set_threshold":
            volts = float(cmd.get("volts"))
            if not (0.0 < volts <= BASELINE_V):
                raise CommandRejected(f"threshold {volts} outside (0, {BASELINE_V}]")
            self.stop_voltage = volts
        else:
            raise CommandRejected(f"unknown command type {kind!r}")

    # -- stepping ----------------------------------------------------------
    def _advance_slider(self, t):
        ctl = self.sc.control
        travel = self.sc.linkage.travel_max
        if self.mode == "script":
            times = [p[0] for p in ctl.script]
            vals = [p[1] for p in ctl.script]
            self.slider = float(np.interp(t, times, vals))
            if t >= times[-1]:
                self.done_after = True
            return
        if self.mode == "manual":
            if self.manual_target is not None:
                speed = (
                    ctl.close_speed_mm_s
                    if isinstance(ctl, PolicyControl)
                    else 2.0
                )
                step = speed * self.dt
                delta = self.manual_target - self.slider
                if abs(delta) <= step:
                    self.slider = self.manual_target
                else:
                    self.slider += step * np.sign(delta)
            return
        if isinstance(ctl, ScriptControl):
            return
        if self.mode == "closing":
            self.slider = max(ctl.min_slider_mm, self.slider - ctl.close_speed_mm_s * self.dt)
            if self.slider <= ctl.min_slider_mm and not self.triggered:
                # fully closed without hitting the threshold: give up and reopen
                self.mode = "reopening"
        elif self.mode == "holding":
            if t >= self.hold_until:
                self._capture_verdict_margin()
                self.mode = "reopening"
        elif self.mode == "reopening":
            self.slider = min(ctl.start_slider_mm, self.slider + ctl.reopen_speed_mm_s * self.dt)
            if self.slider >= ctl.start_slider_mm:
                self.mode = "tail"
                self.tail_until = t + ctl.tail_s
        elif self.mode == "tail":
            if t >= self.tail_until:
                self.done_after = True
        self.slider = float(min(max(self.slider, 0.0), travel))

    def _capture_verdict_margin(self):
        if self.margins:
            self.verdict_margin = self.margins[-1]

    def tick(self, cmd: dict | None = None) -> TelemetryFrame:
        """Advance one sample tick; returns the telemetry frame."""
        if self.done:
            raise RuntimeError("controller already finished")
        if cmd is not None:
            self.command(cmd)
        t = self.tick_index * self.dt
        self.done_after = False
        self._advance_slider(t)

        sc = self.sc
        obj = None if (sc.obj is None or self.dropped) else sc.obj
        rim = self._rim(self.slider)
        try:
            result = solve_equilibrium(
                sc.mesh,
                rim,
                obj=obj,
                params=sc.solver,
                contact_params=sc.contact,
                positions0=self.positions,
                friction=self.friction,
                object_mode="fixed" if self.hand_held else "free",
                obj_center0=self.obj_center,
            )
        except ConvergenceError as exc:
            raise RunError(
                f"equilibrium failed at t={t:.3f}s: {exc}", frames=self.frames_list()
            ) from exc
        self.positions = result.positions
        self.last_result = result
        if result.object_dropped:
            self.dropped = True
            obj = None
            self.friction = FrictionState()
        elif obj is not None:
            self.obj_center = np.asarray(result.object_center, dtype=float).copy()
            # hand-off: release once the net alone supports the weight
            if self.hand_held:
                f_up = float(np.sum(np.maximum(0.0, -result.contact_normal[:, 2])))
                if f_up >= sc.release_support_ratio * sc.obj.weight_n(sc.contact.g):
                    self.hand_held = False
            self.friction = update_anchors(
                result.positions, sc.obj, sc.contact, self.friction, center=self.obj_center
            )

        volts = []
        forces = []
        for spec in sc.sensors:
            v, f = read_sensor(spec, result)
            if sc.noise_sigma_v > 0.0:
                v = float(np.clip(v + self.rng.normal(0.0, sc.noise_sigma_v), 1e-6, BASELINE_V))
            volts.append(v)
            forces.append(f)

        if obj is not None:
            _, margin = hold_check(result, sc.obj, sc.contact)
        else:
            margin = float("nan")

        phases = [p.value for p in self.stream.push(t, volts)]
        eps = sc.segmenter.eps_base
        touched_now = [v < BASELINE_V - eps for v in volts]
        self.any_touched = self.any_touched or any(touched_now)

        if self.mode == "closing" and not self.triggered:
            crossed = False
            ctl = sc.control
            for v, f, touched in zip(volts, forces, touched_now):
                if not touched:
                    continue
                if ctl.stop_voltage_v is not None and v <= (self.stop_voltage or ctl.stop_voltage_v):
                    crossed = True
                if ctl.stop_force_n is not None and f >= ctl.stop_force_n:
                    crossed = True
            if crossed:
                self.triggered = True
                self.mode = "holding"
                self.hold_until = t + ctl.hold_s

        self.rows_t.append(t)
        self.rows_v.append(volts)
        self.rows_f.append(forces)
        self.margins.append(margin)
        self.sliders.append(self.slider)

        frame = TelemetryFrame(
            t=t,
            slider_mm=self.slider,
            aperture_mm=linkage_aperture(sc.linkage, self.slider),
            volts=tuple(volts),
            forces=tuple(forces),
            hold_margin=margin,
            phases=tuple(phases),
            iterations=result.iterations,
            mode=self.mode,
            object_dropped=self.dropped,
        )
        self.frames.append(frame)
        self.tick_index += 1
        if self.done_after:
            self.done = True
        return frame

    def frames_list(self):
        return list(self.frames)

    # -- finishing ---------------------------------------------------------
    def build_trace(self) -> Trace:
        return Trace(
            t=np.asarray(self.rows_t),
            voltages=np.asarray(self.rows_v),
            forces=np.asarray(self.rows_f),
        )

    def finish(self) -> RunResult:
        trace = self.build_trace()
        report = segment(trace, self.sc.segmenter)
        plateau = []
        try:
            plateau = plateau_stats(trace, report, self.calibration)
        except ValueError:
            plateau = [
                (BASELINE_V, 0.0, 0.0) if not s.touched else (float("nan"),) * 3
                for s in report.sensors
            ]
        if self.sc.obj is None or not self.any_touched:
            verdict = "no-grip"
            margin = float("nan")
        else:
            if isinstance(self.sc.control, PolicyControl):
                if not self.triggered:
                    verdict = "no-grip"
                    margin = float("nan")
                else:
                    margin = self.verdict_margin
                    if margin is None or np.isnan(margin):
                        margin = self._margin_at_min_slider()
                    verdict = "held" if margin >= 0.0 else "slips"
            else:
                margin = self._margin_at_min_slider()
                verdict = "held" if (not np.isnan(margin) and margin >= 0.0) else "slips"
        final_mesh = (
            mesh_frame(self.sc.mesh, self.last_result)
            if self.last_result is not None
            else None
        )
        return RunResult(
            scenario_name=self.sc.name,
            frames=self.frames_list(),
            trace=trace,
            phase_report=report,
            plateau=plateau,
            verdict=verdict,
            final_margin=float(margin) if margin is not None else float("nan"),
            calibration=self.calibration,
            object_dropped=self.dropped,
            final_mesh=final_mesh,
        )

    def _margin_at_min_slider(self):
        if not self.sliders:
            return float("nan")
        idx = int(np.argmin(self.sliders))
        return self.margins[idx]


def command_stream(scenario: Scenario) -> GripController:
    """Incremental controller: call tick() per sample, command() to steer."""
    return GripController(scenario)


def run_scenario(scenario: Scenario, max_ticks: int | None = None) -> RunResult:
    """Run the configured control to completion with no external commands."""
    ctl = command_stream(scenario)
    cap = max_ticks if max_ticks is not None else int(600 * scenario.sample_rate_hz)
    while not ctl.done:
        ctl.tick()
        if ctl.tick_index >= cap:
            raise RunError(
                f"scenario did not finish within {cap} ticks", frames=ctl.frames_list()
            )
    return ctl.finish()


def write_outputs(result: RunResult, scenario: Scenario, out_dir):
    """Write telemetry CSV, summary JSON and the final mesh frame."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "telemetry": os.path.join(out_dir, "telemetry.csv"),
        "summary": os.path.join(out_dir, "summary.json"),
        "mesh": os.path.join(out_dir, "mesh_final.json"),
    }
    result.trace.to_csv(paths["telemetry"])
    with open(paths["summary"], "w", encoding="utf-8") as fh:
        json.dump(result.summary_dict(), fh, indent=2)
        fh.write("\n")
    if result.final_mesh is not None:
        with open(paths["mesh"], "w", encoding="utf-8") as fh:
            json.dump(result.final_mesh, fh)
            fh.write("\n")
    return paths
