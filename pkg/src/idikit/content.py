"""Embedded content: import media files into a content-addressed store and
bind them to scenes, segments, or widgets.

Media decoding is out of scope; only trivially-available container
metadata (WAV duration, PNG/JPEG dimensions) is extracted. Bytes live in
``content/<sha256>.<ext>`` beside the scene with a ``content/index.json``
catalog.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import shutil
import struct
import wave
from dataclasses import dataclass

from .errors import (
    RoleMismatchError,
    UnknownContentError,
    UnknownTargetError,
    UnsupportedFormatError,
)

KIND_BY_EXTENSION = {
    ".mp3": "audio", ".wav": "audio",
    ".mp4": "video",
    ".png": "picture", ".jpg": "picture", ".jpeg": "picture",
    ".txt": "text", ".md": "text",
}
KINDS = ("audio", "video", "picture", "text")
ROLES = ("playback-source", "annotation")
TARGET_KINDS = ("scene", "segment", "widget")


@dataclass(frozen=True)
class ContentItem:
    content_id: str
    kind: str
    filename: str                  # original basename
    byte_size: int
    checksum: str                  # sha256 hex of the file bytes
    metadata: tuple[tuple[str, float], ...] = ()
    annotation: str | None = None

    @property
    def stored_name(self) -> str:
        ext = os.path.splitext(self.filename)[1].lower()
        return f"{self.checksum}{ext}"


@dataclass(frozen=True)
class ContentBinding:
    content: str                   # content id
    target_kind: str               # scene | segment | widget
    target_id: str                 # empty for scene
    role: str                      # playback-source | annotation

    def __post_init__(self):
        if self.target_kind not in TARGET_KINDS:
            raise ValueError(f"unknown binding target kind {self.target_kind!r}")
        if self.role not in ROLES:
            raise ValueError(f"unknown binding role {self.role!r}")


def file_checksum(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _wav_duration(path) -> float | None:
    try:
        with wave.open(os.fspath(path), "rb") as fh:
            rate = fh.getframerate()
            return fh.getnframes() / rate if rate else None
    except (wave.Error, EOFError, OSError):
        return None


def _png_dimensions(path) -> tuple[int, int] | None:
    with open(path, "rb") as fh:
        head = fh.read(26)
    if len(head) >= 24 and head[:8] == b"\x89PNG\r\n\x1a\n" and head[12:16] == b"IHDR":
        w, h = struct.unpack(">II", head[16:24])
        return w, h
    return None


def _jpeg_dimensions(path) -> tuple[int, int] | None:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"\xff\xd8"):
        return None
    i = 2
    while i + 9 < len(data):
        if data[i] != 0xFF:
            i += 1
            continue
        marker = data[i + 1]
        if marker in (0xC0, 0xC1, 0xC2, 0xC3):  # SOF: height/width follow
            h, w = struct.unpack(">HH", data[i + 5:i + 9])
            return w, h
        if marker in (0xD8, 0xD9) or 0xD0 <= marker <= 0xD7:
            i += 2
            continue
        (seg_len,) = struct.unpack(">H", data[i + 2:i + 4])
        i += 2 + seg_len
    return None


def _extract_metadata(path, kind: str) -> tuple[tuple[str, float], ...]:
    meta: dict[str, float] = {}
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if kind == "audio" and ext == ".wav":
        duration = _wav_duration(path)
        if duration is not None:
            meta["duration_s"] = float(duration)
    elif kind == "picture":
        dims = _png_dimensions(path) if ext == ".png" else _jpeg_dimensions(path)
        if dims:
            meta["width_px"], meta["height_px"] = float(dims[0]), float(dims[1])
    return tuple(sorted(meta.items()))


class ContentStore:
    """Directory-backed content catalog (``content/`` beside a scene)."""

    def __init__(self, root):
        self.root = os.fspath(root)

    def import_file(self, path, kind_hint: str | None = None,
                    content_id: str | None = None, existing_ids=(),
                    annotation: str | None = None) -> ContentItem:
        """Catalog a media file: checksum it, copy the bytes into the store
        under their hash, and classify the kind from the extension map
        unless a hint is given. Re-imports share bytes but get fresh ids."""
        path = os.fspath(path)
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        ext = os.path.splitext(path)[1].lower()
        kind = kind_hint or KIND_BY_EXTENSION.get(ext)
        if kind is None:
            raise UnsupportedFormatError(f"no kind mapping for extension {ext!r}")
        if kind not in KINDS:
            raise UnsupportedFormatError(f"unknown content kind {kind!r}")

        checksum = file_checksum(path)
        if content_id is None:
            taken = set(existing_ids)
            n = 0
            while f"c{n}" in taken:
                n += 1
            content_id = f"c{n}"
        item = ContentItem(
            content_id=content_id,
            kind=kind,
            filename=os.path.basename(path),
            byte_size=os.path.getsize(path),
            checksum=checksum,
            metadata=_extract_metadata(path, kind),
            annotation=annotation,
        )
        os.makedirs(self.root, exist_ok=True)
        stored = os.path.join(self.root, item.stored_name)
        if not os.path.exists(stored):
            shutil.copyfile(path, stored)
        return item

    def content_path(self, item: ContentItem) -> str:
        return os.path.join(self.root, item.stored_name)

    def save_index(self, items) -> None:
        os.makedirs(self.root, exist_ok=True)
        doc = [
            {
                "id": it.content_id,
                "kind": it.kind,
                "filename": it.filename,
                "bytes": it.byte_size,
                "checksum": it.checksum,
                "metadata": {k: v for k, v in it.metadata},
                "annotation": it.annotation,
            }
            for it in sorted(items, key=lambda it: it.content_id)
        ]
        tmp = os.path.join(self.root, "index.json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
        os.replace(tmp, os.path.join(self.root, "index.json"))

    def load_index(self) -> list[ContentItem]:
        index = os.path.join(self.root, "index.json")
        if not os.path.exists(index):
            return []
        with open(index, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return [
            ContentItem(
                content_id=entry["id"],
                kind=entry["kind"],
                filename=entry["filename"],
                byte_size=entry["bytes"],
                checksum=entry["checksum"],
                metadata=tuple(sorted((k, float(v)) for k, v in entry.get("metadata", {}).items())),
                annotation=entry.get("annotation"),
            )
            for entry in doc
        ]


def bind_content(scene, content_id: str, target_kind: str, target_id: str = "",
                 role: str = "playback-source"):
    """Scene copy with one more binding; all references validated."""
    if not any(c.content_id == content_id for c in scene.contents):
        raise UnknownContentError(f"unknown content {content_id!r}")
    binding = ContentBinding(content=content_id, target_kind=target_kind,
                             target_id=target_id, role=role)
    if target_kind == "segment":
        if not any(s.segment_id == target_id for s in scene.segments):
            raise UnknownTargetError(f"unknown segment {target_id!r}")
    elif target_kind == "widget":
        widget = next((w for w in scene.widgets if w.widget_id == target_id), None)
        if widget is None:
            raise UnknownTargetError(f"unknown widget {target_id!r}")
        if role == "playback-source" and widget.category == "screen":
            raise RoleMismatchError(
                "screens are output sinks; playback sources bind to buttons, knobs or sliders"
            )
    return dataclasses.replace(scene, bindings=scene.bindings + (binding,))
