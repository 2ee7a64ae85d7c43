"""Writers for the probing toolkit's on-disk formats.

These are independent serializers for the documented layouts (the
toolkit is consumed strictly through its file formats):

  feature file:  magic "LPD1" | u32 L | u32 T | u32 D | L*T*D float32,
                 little-endian, row-major [layer][frame][dim]
  track file:    magic "LPT1" | u32 T | T float32 f0_hz | T float32 energy
  alignment:     UTF-8 TSV rows  tier \t label \t start_s \t end_s
  manifest:      JSON file named "manifest" at the dataset root
"""

import json
import struct

import numpy as np

FEATURE_MAGIC = b"LPD1"
TRACK_MAGIC = b"LPT1"
MANIFEST_VERSION = 1


def write_features(data, path):
    """data: float32-convertible array of shape (L, T, D)."""
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.ndim != 3:
        raise ValueError("feature data must be [layer][frame][dim]")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite hidden states")
    L, T, D = arr.shape
    with open(path, "wb") as f:
        f.write(FEATURE_MAGIC)
        f.write(struct.pack("<III", L, T, D))
        f.write(arr.tobytes())


def write_track(f0_hz, energy, path):
    f0 = np.ascontiguousarray(f0_hz, dtype="<f4")
    en = np.ascontiguousarray(energy, dtype="<f4")
    if f0.shape != en.shape or f0.ndim != 1:
        raise ValueError("track arrays must be 1-D and equal length")
    if np.any(f0 < 0) or np.any(en < 0):
        raise ValueError("f0 and energy must be non-negative")
    with open(path, "wb") as f:
        f.write(TRACK_MAGIC)
        f.write(struct.pack("<I", len(f0)))
        f.write(f0.tobytes())
        f.write(en.tobytes())


def write_alignment(phones, words, path):
    """phones/words: lists of (label, start_s, end_s)."""
    with open(path, "w", encoding="utf-8") as f:
        for tier, segs in (("phone", phones), ("word", words)):
            for label, start, end in segs:
                if not (0.0 <= start < end):
                    raise ValueError(
                        "bad interval %r [%g, %g]" % (label, start, end))
                f.write("%s\t%s\t%s\t%s\n"
                        % (tier, label, repr(float(start)),
                           repr(float(end))))


def write_manifest(path, frame_hop_s, num_layers, dim, accents,
                   utterances, extra=None):
    """utterances: list of dicts with utt_id, speaker, accent,
    num_frames, feature_path, alignment_path, track_path."""
    obj = {
        "format_version": MANIFEST_VERSION,
        "frame_hop_s": frame_hop_s,
        "num_layers": num_layers,
        "dim": dim,
        "accents": sorted(accents),
        "utterances": utterances,
    }
    if extra:
        obj.update(extra)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")
