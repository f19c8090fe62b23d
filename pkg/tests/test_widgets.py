import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from idikit.errors import (
    EventKindMismatchError,
    InvalidSubtypeError,
    UnknownSegmentError,
    UnknownWidgetError,
)
from idikit.content import ContentItem, bind_content
from idikit.primitives import unit_cube
from idikit.scene import IdiScene, SceneSegment
from idikit.widgets import (
    LEGAL_EVENTS,
    PlaybackState,
    WidgetEvent,
    attach_widget,
    dispatch_event,
    knob_selection,
    set_visibility,
    spawn_widget,
    widget_mesh,
)


def make_item(content_id, kind="video"):
    return ContentItem(content_id=content_id, kind=kind, filename=f"{content_id}.mp4",
                       byte_size=10, checksum="0" * 64)


@pytest.fixture
def tv_scene():
    scene = IdiScene(
        name="tv",
        segments=(SceneSegment("body", unit_cube()),),
        contents=(make_item("c0"), make_item("c1"), make_item("c2")),
    )
    scene, knob = spawn_widget(scene, "knob", "body")
    scene, screen = spawn_widget(scene, "screen", "body")
    scene, button = spawn_widget(scene, "button", "body", binding="action:toggle-play")
    scene, slider = spawn_widget(scene, "slider", "body")
    for cid in ("c0", "c1", "c2"):
        scene = bind_content(scene, cid, "scene", "", role="playback-source")
    return scene, dict(knob=knob, screen=screen, button=button, slider=slider)


class TestSpawnAttach:
    def test_spawn_on_unknown_segment(self):
        scene = IdiScene(segments=(SceneSegment("a", unit_cube()),))
        with pytest.raises(UnknownSegmentError):
            spawn_widget(scene, "button", "nope")

    def test_viewfinder_only_on_screens(self):
        scene = IdiScene(segments=(SceneSegment("a", unit_cube()),))
        scene, wid = spawn_widget(scene, "screen", "a", subtype="viewfinder")
        assert scene.widget(wid).subtype == "viewfinder"
        with pytest.raises(InvalidSubtypeError):
            spawn_widget(scene, "button", "a", subtype="viewfinder")

    def test_spawned_widget_visible_and_unbound(self):
        scene = IdiScene(segments=(SceneSegment("a", unit_cube()),))
        scene, wid = spawn_widget(scene, "knob", "a")
        widget = scene.widget(wid)
        assert widget.visible and widget.binding is None

    def test_reattach_replaces_host(self):
        scene = IdiScene(segments=(SceneSegment("a", unit_cube()),
                                   SceneSegment("b", unit_cube())))
        scene, wid = spawn_widget(scene, "slider", "a")
        scene = attach_widget(scene, wid, "b")
        assert scene.widget(wid).segment == "b"

    def test_attach_unknown_ids(self):
        scene = IdiScene(segments=(SceneSegment("a", unit_cube()),))
        scene, wid = spawn_widget(scene, "slider", "a")
        with pytest.raises(UnknownSegmentError):
            attach_widget(scene, wid, "missing")
        with pytest.raises(UnknownWidgetError):
            attach_widget(scene, "missing", "a")

    def test_visibility_toggle_involution(self):
        scene = IdiScene(segments=(SceneSegment("a", unit_cube()),))
        scene, wid = spawn_widget(scene, "button", "a", binding="c9")
        hidden = set_visibility(scene, wid, False)
        shown = set_visibility(hidden, wid, True)
        assert not hidden.widget(wid).visible
        assert shown.widget(wid).visible
        assert shown.widget(wid).binding == "c9"


class TestDispatch:
    def test_button_toggles_playback(self, tv_scene):
        scene, ids = tv_scene
        playback = PlaybackState()
        playback, fx = dispatch_event(scene, playback,
                                      WidgetEvent(ids["button"], "press", 0.0))
        assert [e.action for e in fx] == ["play"]
        assert playback.status(fx[0].content) == "playing"
        playback, fx = dispatch_event(scene, playback,
                                      WidgetEvent(ids["button"], "press", 0.1))
        assert [e.action for e in fx] == ["pause"]

    def test_release_is_legal_noop(self, tv_scene):
        scene, ids = tv_scene
        playback, fx = dispatch_event(scene, PlaybackState(),
                                      WidgetEvent(ids["button"], "release", 0.0))
        assert fx == []

    def test_slider_sets_volume_identity(self, tv_scene):
        scene, ids = tv_scene
        playback, fx = dispatch_event(scene, PlaybackState(),
                                      WidgetEvent(ids["slider"], "drag", 0.0, value=0.73))
        assert fx[0].action == "volume"
        assert fx[0].parameter == 0.73

    def test_slider_clamps(self, tv_scene):
        scene, ids = tv_scene
        for raw, expect in [(1.7, 1.0), (-0.2, 0.0)]:
            _, fx = dispatch_event(scene, PlaybackState(),
                                   WidgetEvent(ids["slider"], "drag", 0.0, value=raw))
            assert fx[0].parameter == expect

    def test_knob_selects_detent(self, tv_scene):
        scene, ids = tv_scene
        playback, fx = dispatch_event(
            scene, PlaybackState(),
            WidgetEvent(ids["knob"], "rotate", 0.0, value=2 * math.pi / 3))
        assert fx[0].action == "select"
        assert fx[0].parameter == 1
        assert fx[0].content == "c1"
        assert playback.selected == "c1"

    def test_knob_then_button_plays_selection(self, tv_scene):
        scene, ids = tv_scene
        playback = PlaybackState()
        playback, fx1 = dispatch_event(
            scene, playback, WidgetEvent(ids["knob"], "rotate", 0.0, value=2 * math.pi / 3))
        playback, fx2 = dispatch_event(
            scene, playback, WidgetEvent(ids["button"], "press", 0.1))
        assert [e.brief() for e in fx1 + fx2] == ["select item 1", "play"]
        assert fx2[0].content == "c1"

    def test_screen_rejects_all_input(self, tv_scene):
        scene, ids = tv_scene
        for kind in ("press", "release", "drag", "rotate"):
            with pytest.raises(EventKindMismatchError):
                dispatch_event(scene, PlaybackState(),
                               WidgetEvent(ids["screen"], kind, 0.0))

    def test_event_legality_total(self, tv_scene):
        scene, ids = tv_scene
        kinds = ("press", "release", "drag", "rotate")
        for category, wid in ids.items():
            for kind in kinds:
                event = WidgetEvent(wid, kind, 0.0, value=0.4)
                if kind in LEGAL_EVENTS[category]:
                    dispatch_event(scene, PlaybackState(), event)
                else:
                    with pytest.raises(EventKindMismatchError):
                        dispatch_event(scene, PlaybackState(), event)

    def test_unknown_widget(self, tv_scene):
        scene, _ = tv_scene
        with pytest.raises(UnknownWidgetError):
            dispatch_event(scene, PlaybackState(), WidgetEvent("w99", "press", 0.0))

    def test_hidden_button_still_fires(self, tv_scene):
        scene, ids = tv_scene
        hidden = set_visibility(scene, ids["button"], False)
        _, fx = dispatch_event(hidden, PlaybackState(),
                               WidgetEvent(ids["button"], "press", 0.0))
        assert [e.action for e in fx] == ["play"]


class TestProperties:
    @given(
        kind=st.sampled_from(["press", "release", "drag", "rotate"]),
        category=st.sampled_from(["knob", "screen", "slider", "button"]),
        value=st.floats(-10, 10, allow_nan=False),
        visible=st.booleans(),
    )
    @settings(max_examples=200, deadline=None)
    def test_visibility_never_affects_dispatch(self, kind, category, value, visible):
        scene = IdiScene(
            segments=(SceneSegment("a", unit_cube()),),
            contents=(make_item("c0"), make_item("c1")),
        )
        scene, wid = spawn_widget(scene, category, "a")
        scene = bind_content(scene, "c0", "scene", "", role="playback-source")
        scene = bind_content(scene, "c1", "scene", "", role="playback-source")
        toggled = set_visibility(scene, wid, visible)
        event = WidgetEvent(wid, kind, 0.0, value=value)

        def outcome(s):
            try:
                playback, fx = dispatch_event(s, PlaybackState(), event)
                return playback, [(e.action, e.content, e.parameter) for e in fx]
            except EventKindMismatchError:
                return "rejected"

        assert outcome(scene) == outcome(toggled)

    @given(angle=st.floats(-30, 30, allow_nan=False), detents=st.integers(1, 12))
    @settings(max_examples=300, deadline=None)
    def test_knob_rotation_periodic(self, angle, detents):
        from hypothesis import assume

        from idikit.widgets import WidgetSpec

        # adding 2*pi perturbs the float input; skip angles sitting on a
        # detent boundary where any perturbation legitimately flips the item
        frac = (detents * (angle % (2 * math.pi)) / (2 * math.pi)) % 1.0
        assume(1e-6 < frac < 1.0 - 1e-6)
        widget = WidgetSpec("w0", "knob", "a", detents=detents)
        items = [f"c{i}" for i in range(detents)]
        index1, content1 = knob_selection(widget, items, angle)
        index2, content2 = knob_selection(widget, items, angle + 2 * math.pi)
        assert 0 <= index1 < detents
        assert (index1, content1) == (index2, content2)

    @given(value=st.floats(0, 1, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_slider_identity_on_unit_interval(self, value):
        scene = IdiScene(segments=(SceneSegment("a", unit_cube()),),
                         contents=(make_item("c0"),))
        scene, wid = spawn_widget(scene, "slider", "a", binding="c0")
        _, fx = dispatch_event(scene, PlaybackState(),
                               WidgetEvent(wid, "drag", 0.0, value=value))
        assert fx[0].parameter == value


class TestWidgetMesh:
    @pytest.mark.parametrize("category", ["knob", "screen", "slider", "button"])
    def test_geometry_exists(self, category):
        mesh = widget_mesh(category)
        assert len(mesh.triangles) > 0

    def test_knob_and_button_closed(self):
        assert widget_mesh("knob").watertight
        assert widget_mesh("button").watertight
