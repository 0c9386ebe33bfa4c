"""Track files, study configuration and result tables.

Track file grammar (UTF-8, one frame per line)::

    # format_version: 1
    # action: walk
    # subject: 3
    # instance: 1
    # camera: 2
    # joints: head l_shoulder r_shoulder ... r_foot
    # frames: 60
    x1 y1 x2 y2 ... x11 y11
    ...

Coordinates are written with the shortest decimal form that round-trips a
64-bit float.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FormatError
from .geometry import JOINTS, N_JOINTS
from .style import Label

TRACK_FORMAT_VERSION = 1
_HEADER_KEYS = ("format_version", "action", "subject", "instance", "camera", "joints", "frames")
RESULTS_HEADER = ("action", "method", "d_prime", "male_rate", "female_rate")


@dataclass(frozen=True, eq=False)
class TrackFile:
    action: str
    subject: int
    instance: int
    camera: int
    poses: np.ndarray  # (frames, 11, 2)
    joints: tuple = JOINTS

    @property
    def frames(self):
        return len(self.poses)


def track_filename(action, subject, instance, camera):
    return f"{action}_s{subject:02d}_i{instance}_c{camera}.trk"


def save_tracks(track: TrackFile, path):
    poses = np.asarray(track.poses, dtype=float)
    if poses.ndim != 3 or poses.shape[1:] != (N_JOINTS, 2):
        raise FormatError(f"poses must have shape (frames, {N_JOINTS}, 2), got {poses.shape}")
    if not np.all(np.isfinite(poses)):
        raise FormatError("poses contain non-finite values")
    lines = [
        f"# format_version: {TRACK_FORMAT_VERSION}",
        f"# action: {track.action}",
        f"# subject: {track.subject}",
        f"# instance: {track.instance}",
        f"# camera: {track.camera}",
        f"# joints: {' '.join(track.joints)}",
        f"# frames: {len(poses)}",
    ]
    for frame in poses.reshape(len(poses), -1):
        lines.append(" ".join(repr(float(v)) for v in frame))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_int(key, value, path):
    try:
        return int(value)
    except ValueError:
        raise FormatError(f"{path}: header {key!r} is not an integer: {value!r}") from None


def load_tracks(path) -> TrackFile:
    """Parse and validate a track file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not UTF-8 ({exc})") from None
    header = {}
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if rows:
                raise FormatError(f"{path}:{lineno}: header line after frame data")
            key, sep, value = stripped[1:].partition(":")
            if not sep:
                raise FormatError(f"{path}:{lineno}: header line without 'key: value'")
            header[key.strip()] = value.strip()
            continue
        rows.append((lineno, stripped.split()))

    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise FormatError(f"{path}: missing header keys {missing}")
    version = _parse_int("format_version", header["format_version"], path)
    if version != TRACK_FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported track format version {version}")
    joints = tuple(header["joints"].split())
    if joints != JOINTS:
        raise FormatError(
            f"{path}: joint labels {list(joints)} ({len(joints)} joints) do not match the "
            f"canonical {N_JOINTS}: {list(JOINTS)}"
        )
    n_frames = _parse_int("frames", header["frames"], path)
    if n_frames != len(rows):
        raise FormatError(f"{path}: header says {n_frames} frames, body has {len(rows)}")

    data = np.empty((len(rows), 2 * N_JOINTS))
    for f, (lineno, tokens) in enumerate(rows):
        if len(tokens) != 2 * N_JOINTS:
            raise FormatError(f"{path}:{lineno}: frame {f} has {len(tokens)} values, expected {2 * N_JOINTS}")
        try:
            vals = [float(t) for t in tokens]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: frame {f}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise FormatError(f"{path}:{lineno}: frame {f} has a non-finite coordinate")
        data[f] = vals
    return TrackFile(
        action=header["action"],
        subject=_parse_int("subject", header["subject"], path),
        instance=_parse_int("instance", header["instance"], path),
        camera=_parse_int("camera", header["camera"], path),
        poses=data.reshape(len(rows), N_JOINTS, 2),
        joints=joints,
    )


def save_subjects(labels: dict, path):
    """subject_id,label CSV (label is 'female' or 'male')."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject", "label"])
        for sid in sorted(labels):
            w.writerow([sid, Label(labels[sid]).name.lower()])


def load_subjects(path):
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["subject", "label"]:
            raise FormatError(f"{path}: expected header 'subject,label'")
        for row in reader:
            try:
                out[int(row["subject"])] = Label.parse(row["label"])
            except ValueError as exc:
                raise FormatError(f"{path}: {exc}") from None
    return out


@dataclass
class StudyConfig:
    """Everything that defines a study run; JSON-serializable."""

    actions: list = field(default_factory=lambda: ["walk"])
    reference_subject: int | None = None  # None: lowest subject id
    reference_instance: int = 1
    reference_camera: int = 2
    key_poses: int = 16
    pdm_width: int | None = None  # None: number of reference transitions
    deviation_cap: float = 2.0
    mu: float = 1.0
    min_valid_triplets: int = 30
    d_prime_min: int = 1
    d_prime_max: int = 13
    knn_k: int | None = None
    train_subjects_per_class: int = 2
    method: str = "both"
    seed: int = 0
    # synthetic population
    subjects_per_class: int = 6
    instances: int = 3
    cameras: int = 5
    frames: int = 60
    jitter: float = 0.15
    noise_sigma: float = 0.0
    workers: int = 1

    def validate(self):
        from .synth import ACTIONS

        problems = []
        if self.key_poses < 2:
            problems.append("key_poses must be >= 2")
        if self.pdm_width is not None and self.pdm_width < 2:
            problems.append("pdm_width must be >= 2")
        if not self.deviation_cap > 0:
            problems.append("deviation_cap must be positive")
        if not self.mu > 0:
            problems.append("mu must be positive")
        if not 1 <= self.d_prime_min <= self.d_prime_max:
            problems.append("need 1 <= d_prime_min <= d_prime_max")
        if self.knn_k is not None and self.knn_k < 1:
            problems.append("knn_k must be >= 1")
        if self.train_subjects_per_class < 1:
            problems.append("train_subjects_per_class must be >= 1")
        if self.method not in ("pca", "lda", "both"):
            problems.append("method must be pca, lda or both")
        if self.subjects_per_class < 1 or self.instances < 1 or self.cameras < 1:
            problems.append("population sizes must be >= 1")
        if self.frames < self.key_poses:
            problems.append("frames must be >= key_poses")
        if not 0 <= self.jitter < 1:
            problems.append("jitter must be in [0, 1)")
        if self.noise_sigma < 0:
            problems.append("noise_sigma must be >= 0")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        bad = [a for a in self.actions if a not in ACTIONS]
        if bad:
            problems.append(f"unknown actions {bad}")
        if problems:
            raise ConfigurationError("; ".join(problems))
        return self

    @classmethod
    def load(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**raw).validate()

    def save(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class ResultRow:
    action: str
    method: str
    d_prime: int | None
    male_rate: float
    female_rate: float


def save_results(rows, path):
    """CSV with the fixed header; rates to 3 decimals, blank d_prime for LDA."""
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for r in rows:
            w.writerow([r.action, r.method, "" if r.d_prime is None else int(r.d_prime),
                        f"{r.male_rate:.3f}", f"{r.female_rate:.3f}"])


def load_results(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != RESULTS_HEADER:
            raise FormatError(f"{path}: unexpected results header {header}")
        out = []
        for row in reader:
            if len(row) != len(RESULTS_HEADER):
                raise FormatError(f"{path}: malformed row {row}")
            a, m, d, mr, fr = row
            out.append(ResultRow(a, m, int(d) if d else None, float(mr), float(fr)))
    return out
