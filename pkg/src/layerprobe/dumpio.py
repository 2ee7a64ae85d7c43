"""On-disk formats: hidden-state dumps, alignments, prosody tracks, manifest.

Binary layouts (all integers and floats little-endian):
  feature file:  magic "LPD1" | u32 L | u32 T | u32 D | L*T*D float32,
                 row-major [layer][frame][dim]
  track file:    magic "LPT1" | u32 T | T float32 f0_hz | T float32 energy
Alignment files are UTF-8 TSV (tier, label, start_s, end_s), '#' comments.
The manifest is a JSON file named "manifest" at the dataset root.

Frame i of an utterance covers the time span [i*hop, (i+1)*hop).
Unvoiced F0 is encoded as exactly 0.0, never NaN; all payloads are finite.
"""

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

MANIFEST_VERSION = 1
FEATURE_MAGIC = b"LPD1"
TRACK_MAGIC = b"LPT1"

VALID_TIERS = ("phone", "word")


class ValidationError(ValueError):
    """Input violates a format or manifest invariant."""


@dataclass(frozen=True)
class UtteranceMeta:
    utt_id: str
    speaker: str
    accent: str
    num_frames: int
    feature_path: str
    alignment_path: str
    track_path: str | None = None


@dataclass
class Manifest:
    format_version: int
    frame_hop_s: float
    num_layers: int
    dim: int
    accents: list[str]
    utterances: list[UtteranceMeta]

    def utterance(self, utt_id: str) -> UtteranceMeta:
        for u in self.utterances:
            if u.utt_id == utt_id:
                return u
        raise KeyError(utt_id)


@dataclass
class FeatureDump:
    data: np.ndarray  # float32, shape (L, T, D)

    @property
    def num_layers(self) -> int:
        return self.data.shape[0]

    @property
    def num_frames(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ValidationError("feature data must be [layer][frame][dim]")
        if min(self.data.shape) < 1:
            raise ValidationError(
                "feature dump has empty axis, shape %s" % (self.data.shape,))
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("feature dump contains non-finite values")


@dataclass(frozen=True)
class Segment:
    label: str
    start_s: float
    end_s: float


@dataclass
class AlignmentTier:
    tier: str  # "phone" or "word"
    segments: list[Segment] = field(default_factory=list)

    def __post_init__(self):
        if self.tier not in VALID_TIERS:
            raise ValidationError("unknown tier %r" % self.tier)
        prev_end = -1.0
        for seg in self.segments:
            if not (0.0 <= seg.start_s < seg.end_s):
                raise ValidationError(
                    "inverted or negative interval %r [%g, %g] in tier %s"
                    % (seg.label, seg.start_s, seg.end_s, self.tier))
            if seg.start_s < prev_end:
                raise ValidationError(
                    "overlapping intervals at %r [%g, %g] in tier %s"
                    % (seg.label, seg.start_s, seg.end_s, self.tier))
            prev_end = seg.end_s


@dataclass
class ProsodyTrack:
    f0_hz: np.ndarray
    energy: np.ndarray

    @property
    def num_frames(self) -> int:
        return len(self.f0_hz)

    def __post_init__(self):
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float32)
        self.energy = np.asarray(self.energy, dtype=np.float32)
        if self.f0_hz.ndim != 1 or self.energy.shape != self.f0_hz.shape:
            raise ValidationError("track arrays must be 1-D and equal length")
        if not (np.all(np.isfinite(self.f0_hz))
                and np.all(np.isfinite(self.energy))):
            raise ValidationError("track contains non-finite values")
        if np.any(self.f0_hz < 0):
            raise ValidationError("negative f0 in track")
        if np.any(self.energy < 0):
            raise ValidationError("negative energy in track")


# ---------------------------------------------------------------------------
# manifest

def read_manifest(path, check_files=True):
    """Read and validate the dataset manifest (JSON).

    With check_files=True (the default) every referenced feature and
    alignment file must exist, and feature headers must agree with the
    manifest's (num_layers, num_frames, dim).
    """
    root = os.path.dirname(os.path.abspath(path))
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError("manifest parse failure: %s" % e) from e

    if raw.get("format_version") != MANIFEST_VERSION:
        raise ValidationError(
            "manifest version mismatch: got %r, expected %d"
            % (raw.get("format_version"), MANIFEST_VERSION))

    utts = []
    for u in raw.get("utterances", []):
        utts.append(UtteranceMeta(
            utt_id=u["utt_id"], speaker=u["speaker"], accent=u["accent"],
            num_frames=int(u["num_frames"]),
            feature_path=u["feature_path"],
            alignment_path=u["alignment_path"],
            track_path=u.get("track_path")))
    man = Manifest(
        format_version=int(raw["format_version"]),
        frame_hop_s=float(raw["frame_hop_s"]),
        num_layers=int(raw["num_layers"]),
        dim=int(raw["dim"]),
        accents=list(raw["accents"]),
        utterances=utts)
    _validate_manifest(man, root, check_files)
    return man


def _validate_manifest(man, root, check_files):
    if man.frame_hop_s <= 0:
        raise ValidationError("frame_hop_s must be > 0, got %g"
                              % man.frame_hop_s)
    if man.num_layers < 1 or man.dim < 1:
        raise ValidationError("num_layers and dim must be >= 1")
    if not man.accents:
        raise ValidationError("manifest accent list is empty")
    seen = set()
    for u in man.utterances:
        if u.utt_id in seen:
            raise ValidationError("duplicate utt_id %r" % u.utt_id)
        seen.add(u.utt_id)
        if u.num_frames < 1:
            raise ValidationError("utt %r: num_frames < 1" % u.utt_id)
        if u.accent not in man.accents:
            raise ValidationError(
                "utt %r: accent %r not in declared accent list"
                % (u.utt_id, u.accent))
        if check_files:
            fpath = os.path.join(root, u.feature_path)
            if not os.path.exists(fpath):
                raise ValidationError(
                    "utt %r: dangling feature reference %s"
                    % (u.utt_id, u.feature_path))
            L, T, D = _peek_feature_header(fpath)
            if (L, T, D) != (man.num_layers, u.num_frames, man.dim):
                raise ValidationError(
                    "utt %r: feature header (%d,%d,%d) disagrees with "
                    "manifest (%d,%d,%d)"
                    % (u.utt_id, L, T, D,
                       man.num_layers, u.num_frames, man.dim))
            apath = os.path.join(root, u.alignment_path)
            if not os.path.exists(apath):
                raise ValidationError(
                    "utt %r: dangling alignment reference %s"
                    % (u.utt_id, u.alignment_path))
            if u.track_path is not None:
                tpath = os.path.join(root, u.track_path)
                if not os.path.exists(tpath):
                    raise ValidationError(
                        "utt %r: dangling track reference %s"
                        % (u.utt_id, u.track_path))


def write_manifest(man, path):
    obj = {
        "format_version": man.format_version,
        "frame_hop_s": man.frame_hop_s,
        "num_layers": man.num_layers,
        "dim": man.dim,
        "accents": man.accents,
        "utterances": [
            {k: v for k, v in {
                "utt_id": u.utt_id, "speaker": u.speaker,
                "accent": u.accent, "num_frames": u.num_frames,
                "feature_path": u.feature_path,
                "alignment_path": u.alignment_path,
                "track_path": u.track_path}.items() if v is not None}
            for u in man.utterances],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# feature dumps

def _peek_feature_header(path):
    with open(path, "rb") as f:
        head = f.read(16)
    if len(head) < 16 or head[:4] != FEATURE_MAGIC:
        raise ValidationError("bad feature magic in %s" % path)
    return struct.unpack("<III", head[4:16])


def read_features(path, expected=None):
    """Read a feature dump; `expected` is an optional (L, T, D) check."""
    with open(path, "rb") as f:
        head = f.read(16)
        if len(head) < 16 or head[:4] != FEATURE_MAGIC:
            raise ValidationError("bad feature magic in %s" % path)
        L, T, D = struct.unpack("<III", head[4:16])
        if expected is not None and (L, T, D) != tuple(expected):
            raise ValidationError(
                "feature header (%d,%d,%d) does not match expected %s in %s"
                % (L, T, D, tuple(expected), path))
        payload = f.read(4 * L * T * D + 4)
    if len(payload) != 4 * L * T * D:
        raise ValidationError(
            "feature payload size mismatch in %s: expected %d floats"
            % (path, L * T * D))
    data = np.frombuffer(payload, dtype="<f4").reshape(L, T, D)
    return FeatureDump(data=data.copy())


def write_features(dump, path):
    with open(path, "wb") as f:
        f.write(FEATURE_MAGIC)
        f.write(struct.pack("<III", dump.num_layers, dump.num_frames,
                            dump.dim))
        f.write(np.ascontiguousarray(dump.data, dtype="<f4").tobytes())


# ---------------------------------------------------------------------------
# alignments

def read_alignment(path):
    """Read a TSV alignment file -> (phone_tier, word_tier).

    A tier with no lines yields an empty tier.
    """
    rows = {"phone": [], "word": []}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValidationError(
                    "%s:%d: expected 4 tab-separated fields, got %d"
                    % (path, lineno, len(parts)))
            tier, label, start_s, end_s = parts
            if tier not in VALID_TIERS:
                raise ValidationError(
                    "%s:%d: unknown tier %r" % (path, lineno, tier))
            try:
                seg = Segment(label, float(start_s), float(end_s))
            except ValueError as e:
                raise ValidationError(
                    "%s:%d: malformed time stamp" % (path, lineno)) from e
            rows[tier].append(seg)
    phone = AlignmentTier("phone", sorted(rows["phone"],
                                          key=lambda s: s.start_s))
    word = AlignmentTier("word", sorted(rows["word"],
                                        key=lambda s: s.start_s))
    return phone, word


def write_alignment(phone, word, path):
    with open(path, "w", encoding="utf-8") as f:
        for tier in (phone, word):
            for seg in tier.segments:
                f.write("%s\t%s\t%s\t%s\n"
                        % (tier.tier, seg.label,
                           repr(seg.start_s), repr(seg.end_s)))


# ---------------------------------------------------------------------------
# prosody tracks

def read_track(path, expected_frames=None):
    with open(path, "rb") as f:
        head = f.read(8)
        if len(head) < 8 or head[:4] != TRACK_MAGIC:
            raise ValidationError("bad track magic in %s" % path)
        (T,) = struct.unpack("<I", head[4:8])
        if expected_frames is not None and T != expected_frames:
            raise ValidationError(
                "track length %d does not match expected %d in %s"
                % (T, expected_frames, path))
        payload = f.read(8 * T + 4)
    if len(payload) != 8 * T:
        raise ValidationError("track payload size mismatch in %s" % path)
    arr = np.frombuffer(payload, dtype="<f4")
    return ProsodyTrack(f0_hz=arr[:T].copy(), energy=arr[T:].copy())


def write_track(track, path):
    with open(path, "wb") as f:
        f.write(TRACK_MAGIC)
        f.write(struct.pack("<I", track.num_frames))
        f.write(np.ascontiguousarray(track.f0_hz, dtype="<f4").tobytes())
        f.write(np.ascontiguousarray(track.energy, dtype="<f4").tobytes())
