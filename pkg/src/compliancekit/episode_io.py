"""Recorded episodes: multirate pose/wrench tracks and their file formats.

Two interchangeable formats, both versioned and bit-exact on round-trip:

* binary ``.ckep``: magic ``CKEP``, u16 version, u32 header length, a JSON
  header, then the two little-endian float64 record streams
  (pose: t + 9-D pose encoding; wrench: t + force + torque, SI units);
* line-delimited text for hand-authoring fixtures: ``pose``/``wrench``
  lines with full-precision ``repr`` floats.

Sign convention: the wrench force is the force the environment applies to
the robot, as a force-torque sensor at the wrist reports it.
"""
from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError

MAGIC = b"CKEP"
VERSION = 1
TEXT_HEADER = "#compliancekit-episode v1"


@dataclass(frozen=True)
class Wrench:
    """One 6-D force/torque sample."""

    t: float
    force: np.ndarray
    torque: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float).reshape(3))
        object.__setattr__(self, "torque", np.asarray(self.torque, dtype=float).reshape(3))
        if not (np.isfinite(self.force).all() and np.isfinite(self.torque).all()
                and np.isfinite(self.t)):
            raise ValueError("wrench sample must be finite")


def _check_track(t: np.ndarray, name: str):
    if t.ndim != 1 or t.size == 0:
        raise ValueError(f"{name} timestamps must be a non-empty 1-D array")
    if t.size > 1 and not (np.diff(t) > 0).all():
        raise ValueError(f"{name} timestamps must be strictly increasing")


@dataclass(frozen=True)
class WrenchTrack:
    """Timestamps (n,) and wrench samples (n, 6): force then torque columns."""

    t: np.ndarray
    wrench: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        w = np.asarray(self.wrench, dtype=float).reshape(-1, 6)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "wrench", w)
        _check_track(t, "wrench")
        if w.shape[0] != t.size:
            raise ValueError("wrench rows must match timestamps")

    @property
    def force(self) -> np.ndarray:
        return self.wrench[:, :3]

    @property
    def torque(self) -> np.ndarray:
        return self.wrench[:, 3:]

    def __len__(self):
        return self.t.size

    def sample(self, i: int) -> Wrench:
        return Wrench(float(self.t[i]), self.wrench[i, :3], self.wrench[i, 3:])


@dataclass(frozen=True)
class PoseTrack:
    """Timestamps (n,) and 9-D pose encodings (n, 9)."""

    t: np.ndarray
    pose9: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        p = np.asarray(self.pose9, dtype=float).reshape(-1, 9)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "pose9", p)
        _check_track(t, "pose")
        if p.shape[0] != t.size:
            raise ValueError("pose rows must match timestamps")

    @property
    def positions(self) -> np.ndarray:
        return self.pose9[:, :3]

    def __len__(self):
        return self.t.size


@dataclass(frozen=True)
class Episode:
    """Time-aligned multirate recording of one demonstration."""

    pose_track: PoseTrack
    wrench_track: WrenchTrack
    meta: dict = field(default_factory=dict)

    def overlap(self) -> tuple[float, float]:
        t0 = max(float(self.pose_track.t[0]), float(self.wrench_track.t[0]))
        t1 = min(float(self.pose_track.t[-1]), float(self.wrench_track.t[-1]))
        return t0, t1


# --- binary format ---------------------------------------------------------

def write_episode(path, episode: Episode) -> None:
    with open(path, "wb") as fh:
        _write_binary(fh, episode)


def _write_binary(fh, episode: Episode) -> None:
    header = json.dumps(episode.meta, sort_keys=True).encode("utf-8")
    fh.write(MAGIC)
    fh.write(struct.pack("<HI", VERSION, len(header)))
    fh.write(header)
    pose = np.hstack([episode.pose_track.t[:, None], episode.pose_track.pose9])
    wrench = np.hstack([episode.wrench_track.t[:, None], episode.wrench_track.wrench])
    for block in (pose, wrench):
        fh.write(struct.pack("<Q", block.shape[0]))
        fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def read_episode(path) -> Episode:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == MAGIC:
        return _read_binary(io.BytesIO(data))
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: neither a CKEP binary nor a text episode") from exc
    return parse_episode_text(text, name=str(path))


def _read_binary(fh) -> Episode:
    magic = fh.read(4)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version, header_len = struct.unpack("<HI", fh.read(6))
    if version != VERSION:
        raise FormatError(f"unsupported episode version {version}")
    try:
        meta = json.loads(fh.read(header_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"corrupt episode header: {exc}") from exc

    def read_block(cols, what):
        raw = fh.read(8)
        if len(raw) != 8:
            raise FormatError(f"truncated file before {what} count")
        (count,) = struct.unpack("<Q", raw)
        payload = fh.read(count * cols * 8)
        if len(payload) != count * cols * 8:
            raise FormatError(
                f"truncated {what} stream: expected {count} records, "
                f"got {len(payload) // (cols * 8)}"
            )
        return np.frombuffer(payload, dtype="<f8").reshape(count, cols).astype(float)

    pose = read_block(10, "pose")
    wrench = read_block(7, "wrench")
    return Episode(PoseTrack(pose[:, 0], pose[:, 1:]),
                   WrenchTrack(wrench[:, 0], wrench[:, 1:]), meta)


# --- text format -----------------------------------------------------------

def format_episode_text(episode: Episode) -> str:
    lines = [TEXT_HEADER, "meta " + json.dumps(episode.meta, sort_keys=True)]
    for t, p in zip(episode.pose_track.t, episode.pose_track.pose9):
        lines.append("pose " + " ".join(repr(float(v)) for v in (t, *p)))
    for t, w in zip(episode.wrench_track.t, episode.wrench_track.wrench):
        lines.append("wrench " + " ".join(repr(float(v)) for v in (t, *w)))
    return "\n".join(lines) + "\n"


def write_episode_text(path, episode: Episode) -> None:
    with open(path, "w") as fh:
        fh.write(format_episode_text(episode))


def parse_episode_text(text: str, name: str = "<episode>") -> Episode:
    lines = text.splitlines()
    if not lines or lines[0].strip() != TEXT_HEADER:
        raise FormatError(f"{name}:1: missing header line {TEXT_HEADER!r}")
    meta: dict = {}
    poses, wrenches = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        kind, _, rest = line.partition(" ")
        try:
            if kind == "meta":
                meta = json.loads(rest)
            elif kind == "pose":
                vals = [float(v) for v in rest.split()]
                if len(vals) != 10:
                    raise ValueError(f"expected 10 values, got {len(vals)}")
                poses.append(vals)
            elif kind == "wrench":
                vals = [float(v) for v in rest.split()]
                if len(vals) != 7:
                    raise ValueError(f"expected 7 values, got {len(vals)}")
                wrenches.append(vals)
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except (ValueError, json.JSONDecodeError) as exc:
            raise FormatError(f"{name}:{lineno}: {exc}") from exc
    if not poses or not wrenches:
        raise FormatError(f"{name}: episode needs at least one pose and one wrench record")
    poses_a = np.array(poses)
    wrench_a = np.array(wrenches)
    return Episode(PoseTrack(poses_a[:, 0], poses_a[:, 1:]),
                   WrenchTrack(wrench_a[:, 0], wrench_a[:, 1:]), meta)
