"""Interface widgets: spawn, attach, visibility, and event dispatch.

Four categories (knob, screen, slider, button). Dispatch never looks at
the visibility flag: a hidden widget keeps its hit region and behavior.
Playback side effects are recorded as :class:`Effect` entries rather than
rendered; screens are output-only sinks and accept no input.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, replace

from .errors import (
    EventKindMismatchError,
    InvalidSubtypeError,
    UnknownSegmentError,
    UnknownWidgetError,
)
from .mesh import TriMesh
from . import primitives

CATEGORIES = ("knob", "screen", "slider", "button")
SCREEN_SUBTYPES = ("display", "viewfinder")

# which event kinds each category accepts (total mapping; everything else
# raises EventKindMismatch rather than silently dropping)
LEGAL_EVENTS = {
    "button": ("press", "release"),
    "slider": ("drag",),
    "knob": ("rotate",),
    "screen": (),
}


@dataclass(frozen=True)
class Placement:
    """Pose relative to the host segment's rest frame."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    scale: float = 1.0


@dataclass(frozen=True)
class WidgetSpec:
    widget_id: str
    category: str
    segment: str                       # host segment (exactly one)
    subtype: str | None = None         # screens: display | viewfinder
    placement: Placement = Placement()
    visible: bool = True
    binding: str | None = None         # content id or action keyword
    detents: int | None = None         # knob: detent count (>= 1)

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown widget category {self.category!r}")
        if self.detents is not None and self.detents < 1:
            raise ValueError("knob detent count must be >= 1")


@dataclass(frozen=True)
class WidgetEvent:
    widget_id: str
    kind: str                          # press | release | drag | rotate
    time: float = 0.0
    value: float = 0.0                 # drag: [0,1]; rotate: angle (rad)


@dataclass(frozen=True)
class Effect:
    """One recorded widget side effect (playback transitions, selection,
    parameter changes)."""

    action: str                        # play | pause | select | volume
    content: str | None
    parameter: float | int | None
    widget: str
    time: float

    def brief(self) -> str:
        if self.action == "select":
            return f"select item {self.parameter}"
        return self.action


@dataclass(frozen=True)
class PlaybackState:
    """Logical playback state driven by widget effects."""

    playing: tuple[tuple[str, str], ...] = ()   # content id -> stopped|playing|paused
    volumes: tuple[tuple[str, float], ...] = ()
    selected: str | None = None
    selected_index: int | None = None

    def status(self, content_id: str) -> str:
        return dict(self.playing).get(content_id, "stopped")

    def volume(self, content_id: str) -> float:
        return dict(self.volumes).get(content_id, 1.0)

    def _set_status(self, content_id: str, status: str) -> "PlaybackState":
        entries = dict(self.playing)
        entries[content_id] = status
        return replace(self, playing=tuple(sorted(entries.items())))

    def _set_volume(self, content_id: str, value: float) -> "PlaybackState":
        entries = dict(self.volumes)
        entries[content_id] = value
        return replace(self, volumes=tuple(sorted(entries.items())))


def _segment_ids(scene):
    return {seg.segment_id for seg in scene.segments}


def _get_widget(scene, widget_id: str) -> WidgetSpec:
    for w in scene.widgets:
        if w.widget_id == widget_id:
            return w
    raise UnknownWidgetError(f"unknown widget {widget_id!r}")


def _replace_widget(scene, widget: WidgetSpec):
    widgets = tuple(widget if w.widget_id == widget.widget_id else w for w in scene.widgets)
    return dataclasses.replace(scene, widgets=widgets)


def spawn_widget(scene, category: str, segment_id: str,
                 subtype: str | None = None, placement: Placement | None = None,
                 binding: str | None = None, detents: int | None = None):
    """Add a visible widget on a segment; returns (scene, widget id)."""
    if segment_id not in _segment_ids(scene):
        raise UnknownSegmentError(f"unknown segment {segment_id!r}")
    if category == "screen":
        subtype = subtype or "display"
        if subtype not in SCREEN_SUBTYPES:
            raise InvalidSubtypeError(f"unknown screen subtype {subtype!r}")
    elif subtype is not None:
        raise InvalidSubtypeError(f"{category} widgets take no subtype")
    existing = {w.widget_id for w in scene.widgets}
    n = 0
    while f"w{n}" in existing:
        n += 1
    widget = WidgetSpec(
        widget_id=f"w{n}",
        category=category,
        segment=segment_id,
        subtype=subtype,
        placement=placement or Placement(),
        binding=binding,
        detents=detents,
    )
    return dataclasses.replace(scene, widgets=scene.widgets + (widget,)), widget.widget_id


def attach_widget(scene, widget_id: str, segment_id: str):
    """Re-host a widget; the previous attachment is replaced (a widget has
    exactly one host)."""
    widget = _get_widget(scene, widget_id)
    if segment_id not in _segment_ids(scene):
        raise UnknownSegmentError(f"unknown segment {segment_id!r}")
    return _replace_widget(scene, replace(widget, segment=segment_id))


def set_visibility(scene, widget_id: str, visible: bool):
    """Toggle rendering only; the hit region and dispatch are unaffected."""
    widget = _get_widget(scene, widget_id)
    return _replace_widget(scene, replace(widget, visible=bool(visible)))


def bound_items(scene, widget: WidgetSpec) -> list[str]:
    """Content ids a widget steps through: playback-source bindings on the
    widget itself, else scene-level playback sources. Sorted by content id
    so binding insertion order never matters."""
    own = sorted(
        b.content for b in scene.bindings
        if b.role == "playback-source" and b.target_kind == "widget"
        and b.target_id == widget.widget_id
    )
    if own:
        return own
    return sorted(
        b.content for b in scene.bindings
        if b.role == "playback-source" and b.target_kind == "scene"
    )


def knob_selection(widget: WidgetSpec, items: list[str], angle: float) -> tuple[int, str | None]:
    """Detent index for a rotation angle: floor(N * wrapped / 2pi)."""
    n = widget.detents or max(len(items), 1)
    wrapped = angle % (2.0 * math.pi)
    index = min(int(n * wrapped / (2.0 * math.pi)), n - 1)
    content = items[index] if index < len(items) else None
    return index, content


def _toggle_target(scene, widget: WidgetSpec, playback: PlaybackState) -> str | None:
    if widget.binding and not widget.binding.startswith("action:"):
        return widget.binding
    if playback.selected is not None:
        return playback.selected
    items = bound_items(scene, widget)
    return items[0] if items else None


def dispatch_event(scene, playback: PlaybackState, event: WidgetEvent):
    """Route one widget event; returns (playback state, effects).

    Dispatch is independent of widget visibility by construction. Illegal
    (category, kind) pairs raise EventKindMismatch; legal no-ops (button
    release) return no effects.
    """
    widget = _get_widget(scene, event.widget_id)
    if event.kind not in LEGAL_EVENTS[widget.category]:
        raise EventKindMismatchError(
            f"{widget.category} widgets do not accept {event.kind!r} events"
        )
    effects: list[Effect] = []

    if widget.category == "button" and event.kind == "press":
        target = _toggle_target(scene, widget, playback)
        if target is not None:
            now_playing = playback.status(target) != "playing"
            playback = playback._set_status(target, "playing" if now_playing else "paused")
            effects.append(Effect(
                action="play" if now_playing else "pause",
                content=target, parameter=None,
                widget=widget.widget_id, time=event.time,
            ))
    elif widget.category == "slider":
        value = min(1.0, max(0.0, float(event.value)))
        target = _toggle_target(scene, widget, playback)
        if target is not None:
            playback = playback._set_volume(target, value)
        effects.append(Effect(
            action="volume", content=target, parameter=value,
            widget=widget.widget_id, time=event.time,
        ))
    elif widget.category == "knob":
        items = bound_items(scene, widget)
        index, content = knob_selection(widget, items, float(event.value))
        playback = replace(playback, selected=content, selected_index=index)
        effects.append(Effect(
            action="select", content=content, parameter=index,
            widget=widget.widget_id, time=event.time,
        ))
    # button release: legal, no effect

    return playback, effects


def widget_mesh(category: str, scale: float = 1.0) -> TriMesh:
    """Display geometry for a widget (also its hit region): cylinder knob,
    box button, rail slider, quad screen."""
    if category == "knob":
        return primitives.cylinder(radius=0.015 * scale, height=0.02 * scale, segments=24)
    if category == "button":
        return primitives.box(size=(0.02 * scale, 0.01 * scale, 0.02 * scale))
    if category == "slider":
        return primitives.box(size=(0.1 * scale, 0.01 * scale, 0.02 * scale))
    if category == "screen":
        return primitives.quad(width=0.16 * scale, height=0.12 * scale)
    raise ValueError(f"unknown widget category {category!r}")
