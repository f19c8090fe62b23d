import json
import os
import subprocess
import sys

import pytest

from idikit.cli import main
from idikit.demo import demo_cli_steps, write_demo_assets
from idikit.mesh import export_mesh
from idikit.primitives import unit_cube
from idikit.scene import load_scene


@pytest.fixture
def cube_obj(tmp_path):
    path = tmp_path / "cube.obj"
    export_mesh(unit_cube(), path)
    return str(path)


@pytest.fixture
def scene_path(tmp_path, cube_obj):
    path = str(tmp_path / "scene.idi.json")
    assert main(["import", cube_obj, "-o", path, "--name", "cube"]) == 0
    return path


class TestExitCodes:
    def test_import_success(self, scene_path):
        assert os.path.exists(scene_path)

    def test_missing_file_is_2(self, tmp_path):
        code = main(["import", str(tmp_path / "ghost.obj"), "-o", str(tmp_path / "s.json")])
        assert code == 2

    def test_malformed_plane_is_usage_error(self, scene_path, capsys):
        with pytest.raises(SystemExit) as exit_info:
            main(["slice", scene_path, "--segment", "cube", "--plane", "banana"])
        assert exit_info.value.code == 2

    def test_domain_error_is_1(self, scene_path):
        code = main(["slice", scene_path, "--segment", "cube",
                     "--plane", "0,0,9,0,0,1"])  # plane misses
        assert code == 1

    def test_validate_ok(self, scene_path):
        assert main(["validate", scene_path]) == 0

    def test_validate_dangling_is_1(self, scene_path, capsys):
        doc = json.load(open(scene_path))
        doc["bindings"].append({"content": "c9", "target_kind": "scene",
                                "target_id": "", "role": "annotation"})
        json.dump(doc, open(scene_path, "w"))
        # loader rejects the dangling binding outright
        assert main(["validate", scene_path]) == 1
        err = capsys.readouterr().err
        assert "c9" in err


class TestPipeline:
    def test_slice_then_validate(self, scene_path):
        assert main(["slice", scene_path, "--segment", "cube",
                     "--plane", "0.5,0.5,0.5,0,0,1"]) == 0
        scene = load_scene(scene_path)
        assert [s.segment_id for s in scene.segments] == ["cube.pos", "cube.neg"]
        assert main(["validate", scene_path]) == 0

    def test_auto_frame_joint(self, scene_path):
        main(["slice", scene_path, "--segment", "cube", "--plane", "0.5,0.5,0.5,0,0,1"])
        assert main(["joint", "add", scene_path, "--type", "hinge",
                     "--base", "cube.neg", "--movable", "cube.pos",
                     "--auto-frame", "--resistance", "high"]) == 0
        scene = load_scene(scene_path)
        assert scene.joints[0].resistance == "high"

    def test_json_output(self, scene_path, capsys):
        assert main(["--json", "validate", scene_path]) == 0
        out = capsys.readouterr().out
        assert json.loads(out)["valid"] is True

    def test_segment_auto(self, tmp_path):
        from idikit.primitives import dumbbell

        bell_path = tmp_path / "bell.obj"
        export_mesh(dumbbell(rings=28, segments=22), bell_path)
        scene = str(tmp_path / "bell.idi.json")
        assert main(["import", str(bell_path), "-o", scene, "--name", "bell"]) == 0
        assert main(["--json", "segment", scene, "--k", "3"]) == 0
        loaded = load_scene(scene)
        assert len(loaded.segments) == 3

    def test_full_demo_pipeline_effects(self, tmp_path):
        assets = write_demo_assets(tmp_path / "assets")
        scene = str(tmp_path / "tv.idi.json")
        out = str(tmp_path / "out")
        for argv in demo_cli_steps(assets, scene, out):
            assert main(argv) == 0, argv
        effects = [json.loads(line) for line in open(os.path.join(out, "effects.jsonl"))]
        assert [e["action"] for e in effects] == ["select", "play"]
        assert effects[0]["parameter"] == 1
        assert os.path.exists(os.path.join(out, "trajectory.csv"))

    def test_cli_equals_library(self, scene_path, tmp_path):
        """The CLI adds no logic: slicing through it matches a direct call."""
        from idikit.slicer import CutPlane, slice_by_plane

        direct_scene = load_scene(scene_path)
        parts = slice_by_plane(direct_scene.segments[0].mesh,
                               CutPlane.from_point_normal([0.5, 0.5, 0.5], [0, 0, 1]),
                               id_base="cube")
        main(["slice", scene_path, "--segment", "cube", "--plane", "0.5,0.5,0.5,0,0,1"])
        via_cli = load_scene(scene_path)
        for seg, part in zip(via_cli.segments, parts.segments):
            assert seg.segment_id == part.segment_id
            assert seg.mesh == part.mesh

    def test_failed_command_leaves_no_partial_scene(self, tmp_path, cube_obj):
        blocker = tmp_path / "blocker"
        blocker.write_text("in the way")
        target = blocker / "sub" / "scene.idi.json"  # unusable path
        code = main(["import", cube_obj, "-o", str(target)])
        assert code == 2
        assert not target.exists()


class TestSubprocess:
    def test_entry_point_runs(self, tmp_path, cube_obj):
        scene = str(tmp_path / "s.idi.json")
        proc = subprocess.run(
            [sys.executable, "-m", "idikit.cli", "import", cube_obj, "-o", scene],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert os.path.exists(scene)
