"""Headless deterministic replay: run a scene against a scripted timeline
of touch and widget events, emitting a trajectory CSV, an effects log and
a run report.

Fixed-step semantics: step ``i`` covers ``[i*dt, (i+1)*dt)`` and events are
applied at the start of the step containing their timestamp. Two runs of
the same (scene, script) produce byte-identical trajectory and effects
files.
"""

from __future__ import annotations

import json
import os
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .errors import ScriptError
from .physics import SimState, TouchEvent, dof_violation, initial_state, step
from .widgets import Effect, PlaybackState, WidgetEvent, dispatch_event

TRAJECTORY_HEADER = "step,time,segment,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz"


@dataclass(frozen=True)
class EventScript:
    """Timestamped event timeline; timestamps must be non-decreasing."""

    entries: tuple
    duration: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ScriptError("script duration must be positive")
        last = -np.inf
        for entry in self.entries:
            if entry.time < last:
                raise ScriptError("script timestamps must be non-decreasing")
            last = entry.time

    @staticmethod
    def from_jsonl(path, duration: float | None = None) -> "EventScript":
        entries = []
        max_time = 0.0
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ScriptError(f"{path}:{lineno}: invalid JSON: {exc}") from None
                entries.append(parse_event(doc, where=f"{path}:{lineno}"))
                max_time = max(max_time, entries[-1].time)
        if duration is None:
            duration = max_time + 1.0
        return EventScript(entries=tuple(entries), duration=duration)

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for entry in self.entries:
                fh.write(json.dumps(event_document(entry), sort_keys=True) + "\n")


def parse_event(doc, where: str = "script"):
    if not isinstance(doc, dict) or "type" not in doc:
        raise ScriptError(f"{where}: event must be an object with a 'type'")
    try:
        if doc["type"] == "touch":
            return TouchEvent(
                time=float(doc["time"]),
                center=np.array([float(x) for x in doc["center"]]),
                velocity=np.array([float(x) for x in doc["velocity"]]),
                radius=float(doc.get("radius", 0.01)),
            )
        if doc["type"] == "widget":
            return WidgetEvent(
                widget_id=str(doc["widget"]),
                kind=str(doc["kind"]),
                time=float(doc["time"]),
                value=float(doc.get("value", 0.0)),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScriptError(f"{where}: malformed event: {exc!r}") from None
    raise ScriptError(f"{where}: unknown event type {doc['type']!r}")


def event_document(entry) -> dict:
    if isinstance(entry, TouchEvent):
        return {
            "type": "touch",
            "time": entry.time,
            "center": [float(x) for x in entry.center],
            "velocity": [float(x) for x in entry.velocity],
            "radius": entry.radius,
        }
    return {
        "type": "widget",
        "time": entry.time,
        "widget": entry.widget_id,
        "kind": entry.kind,
        "value": entry.value,
    }


@dataclass
class RunReport:
    steps: int
    dt: float
    duration: float
    effects: list[Effect]
    event_log: list[dict]
    energy: np.ndarray
    dof_reports: dict
    playback: PlaybackState
    final_state: SimState
    history: list[SimState] | None
    runtime_s: float
    trajectory_lines: list[str] = field(default_factory=list)
    trajectory_path: str | None = None
    effects_path: str | None = None
    report_path: str | None = None

    def effect_briefs(self) -> list[str]:
        return [e.brief() for e in self.effects]


def _trajectory_row(step_index: int, state: SimState, body) -> str:
    p, q = body.position, body.orientation
    v, w = body.velocity, body.angular_velocity
    cells = [str(step_index), repr(state.time), body.segment_id]
    cells += [repr(float(x)) for x in (*p, *q, *v, *w)]
    return ",".join(cells)


def run(scene, script: EventScript, out_dir=None,
        frame_callback=None, frame_stride: int = 4,
        keep_history: bool = True) -> RunReport:
    """Fixed-step replay; every script event lands in the event log exactly
    once, as applied or rejected."""
    from .scene import validate_scene

    violations = validate_scene(scene)
    if violations:
        from .errors import ValidationFailureError

        raise ValidationFailureError(violations)

    dt = scene.sim.dt
    n_steps = int(round(script.duration / dt))
    if n_steps <= 0:
        raise ScriptError("script shorter than one step")

    # bucket events by the step containing their timestamp
    by_step: dict[int, list] = {}
    for entry in script.entries:
        idx = min(int(entry.time / dt + 1e-9), n_steps - 1)
        by_step.setdefault(idx, []).append(entry)

    state = initial_state(scene)
    playback = PlaybackState()
    effects: list[Effect] = []
    event_log: list[dict] = []
    energy = np.empty(n_steps)
    history: list[SimState] = []
    trajectory_lines = [TRAJECTORY_HEADER]

    started = _time.perf_counter()
    for i in range(n_steps):
        touches = []
        for entry in by_step.get(i, ()):
            if isinstance(entry, TouchEvent):
                touches.append(entry)
                event_log.append({"step": i, "event": event_document(entry),
                                  "disposition": "applied"})
            else:
                try:
                    playback, new_effects = dispatch_event(scene, playback, entry)
                except Exception as exc:
                    code = getattr(exc, "code", type(exc).__name__)
                    event_log.append({"step": i, "event": event_document(entry),
                                      "disposition": f"rejected:{code}"})
                else:
                    effects.extend(new_effects)
                    event_log.append({"step": i, "event": event_document(entry),
                                      "disposition": "applied"})
        if touches:
            state.pending_touches = state.pending_touches + tuple(touches)

        state = step(state, scene, dt)
        energy[i] = state.kinetic_energy()
        if keep_history:
            history.append(state)
        for sid in sorted(state.bodies):
            trajectory_lines.append(_trajectory_row(state.step_index, state, state.bodies[sid]))
        if frame_callback is not None and (i + 1) % frame_stride == 0:
            recent = [e for e in effects if e.time >= state.time - frame_stride * dt]
            frame_callback(state, playback, recent)
    runtime = _time.perf_counter() - started

    dof_reports = {}
    if history:
        for joint in scene.joints:
            dof_reports[joint.joint_id] = dof_violation(history, scene, joint.joint_id)

    report = RunReport(
        steps=n_steps,
        dt=dt,
        duration=script.duration,
        effects=effects,
        event_log=event_log,
        energy=energy,
        dof_reports=dof_reports,
        playback=playback,
        final_state=state,
        history=history if keep_history else None,
        runtime_s=runtime,
        trajectory_lines=trajectory_lines,
    )
    if out_dir is not None:
        _write_outputs(report, out_dir)
    return report


def _effect_document(effect: Effect) -> dict:
    return {
        "action": effect.action,
        "content": effect.content,
        "parameter": effect.parameter,
        "widget": effect.widget,
        "time": effect.time,
    }


def _write_text_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_outputs(report: RunReport, out_dir) -> None:
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)

    report.trajectory_path = os.path.join(out_dir, "trajectory.csv")
    _write_text_atomic(report.trajectory_path, "\n".join(report.trajectory_lines) + "\n")

    effect_lines = [
        json.dumps(_effect_document(effect), sort_keys=True) for effect in report.effects
    ]
    effect_lines += [
        json.dumps(entry, sort_keys=True)
        for entry in report.event_log
        if entry["disposition"].startswith("rejected")
    ]
    report.effects_path = os.path.join(out_dir, "effects.jsonl")
    _write_text_atomic(
        report.effects_path, "\n".join(effect_lines) + ("\n" if effect_lines else "")
    )

    doc = {
        "steps": report.steps,
        "dt": report.dt,
        "duration": report.duration,
        "wall_clock_s": report.runtime_s,
        "effects": [_effect_document(e) for e in report.effects],
        "event_log": report.event_log,
        "energy": {
            "initial": float(report.energy[0]) if len(report.energy) else 0.0,
            "final": float(report.energy[-1]) if len(report.energy) else 0.0,
            "max": float(report.energy.max()) if len(report.energy) else 0.0,
        },
        "joints": {
            jid: {
                "max_locked_translation_m": rep.max_locked_translation(),
                "max_locked_rotation_rad": rep.max_locked_rotation(),
                "translation_m": {str(k): v for k, v in rep.translation.items()},
                "rotation_rad": {str(k): v for k, v in rep.rotation.items()},
            }
            for jid, rep in report.dof_reports.items()
        },
        "trajectory": "trajectory.csv",
        "effects_log": "effects.jsonl",
    }
    report.report_path = os.path.join(out_dir, "report.json")
    _write_text_atomic(report.report_path, json.dumps(doc, sort_keys=True, indent=2) + "\n")
