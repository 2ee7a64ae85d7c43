"""Frame-level representations + alignments -> pooled segment vectors.

Phoneme segments are mean-pooled over the central third of their frame
span, with a per-(phoneme, speaker) sampling quota and a minimum-length
filter. Word segments are mean-pooled over the whole interval.

Time -> frame mapping is by frame-center inclusion: frame i belongs to a
segment [start, end) iff its center i*hop + hop/2 lies in the interval.

Sampling uses the Philox 4x64 counter-based generator so that a fixed
seed reproduces the same subset on any platform.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class SamplingPolicy:
    per_phoneme_per_speaker: int = 100
    min_frames: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.per_phoneme_per_speaker < 1:
            raise ValueError("per_phoneme_per_speaker must be >= 1")
        if self.min_frames < 1:
            raise ValueError("min_frames must be >= 1")


@dataclass(frozen=True)
class SegmentSpec:
    utt_id: str
    tier: str
    label: str
    start_s: float
    end_s: float
    frame_range: tuple  # (first, last) inclusive
    pooled_frame_range: tuple
    index: int  # position within its tier


@dataclass(frozen=True)
class PooledSegment:
    spec: SegmentSpec
    vector: np.ndarray
    speaker: str
    accent: str


def segment_to_frames(start_s, end_s, hop, num_frames):
    """Inclusive frame range whose centers fall in [start_s, end_s).

    Returns (first, last) or None when no frame center lies in the
    interval after clamping to [0, num_frames-1].
    """
    if not (0 <= start_s < end_s):
        raise ValueError("need 0 <= start_s < end_s")
    if hop <= 0:
        raise ValueError("hop must be positive")
    first = math.ceil(start_s / hop - 0.5)
    last = math.ceil(end_s / hop - 0.5) - 1
    first = max(first, 0)
    last = min(last, num_frames - 1)
    if first > last:
        return None
    return (first, last)


def central_third(frame_range):
    """Central-third subrange [first + floor(n/3), first + ceil(2n/3) - 1].

    Non-empty for any n >= 2.
    """
    first, last = frame_range
    n = last - first + 1
    if n < 2:
        raise ValueError("central_third needs at least 2 frames")
    lo = first + n // 3
    hi = first + math.ceil(2 * n / 3) - 1
    return (lo, hi)


def _pool(dump, layer, lo, hi):
    return dump.data[layer, lo:hi + 1].mean(axis=0).astype(np.float64)


def pool_phoneme_segments(dump, phone_tier, policy, layer, meta, hop):
    """Central-third mean pooling of phone segments on one layer.

    Segments spanning fewer than policy.min_frames frames are discarded.
    """
    if not (0 <= layer < dump.num_layers):
        raise ValueError("layer %d out of range [0, %d)"
                         % (layer, dump.num_layers))
    out = []
    for idx, seg in enumerate(phone_tier.segments):
        fr = segment_to_frames(seg.start_s, seg.end_s, hop, dump.num_frames)
        if fr is None or fr[1] - fr[0] + 1 < policy.min_frames:
            continue
        pooled_fr = central_third(fr) if fr[1] > fr[0] else fr
        spec = SegmentSpec(meta.utt_id, "phone", seg.label,
                           seg.start_s, seg.end_s, fr, pooled_fr, idx)
        out.append(PooledSegment(spec, _pool(dump, layer, *pooled_fr),
                                 meta.speaker, meta.accent))
    return out


def pool_word_segments(dump, word_tier, layer, meta, hop):
    """Whole-interval mean pooling of word segments on one layer."""
    if not (0 <= layer < dump.num_layers):
        raise ValueError("layer %d out of range [0, %d)"
                         % (layer, dump.num_layers))
    out = []
    skipped = 0
    for idx, seg in enumerate(word_tier.segments):
        fr = segment_to_frames(seg.start_s, seg.end_s, hop, dump.num_frames)
        if fr is None:
            skipped += 1
            continue
        spec = SegmentSpec(meta.utt_id, "word", seg.label,
                           seg.start_s, seg.end_s, fr, fr, idx)
        out.append(PooledSegment(spec, _pool(dump, layer, *fr),
                                 meta.speaker, meta.accent))
    if skipped:
        log.warning("utt %s: %d word(s) with no covered frames skipped",
                    meta.utt_id, skipped)
    return out


def sample_segments(segments, policy):
    """Per-(phoneme, speaker) uniform subsample without replacement.

    Groups at or below the quota keep all members. Deterministic for a
    fixed policy.seed; output sorted by (speaker, phoneme, utt_id,
    start_s).
    """
    groups = {}
    for seg in segments:
        groups.setdefault((seg.speaker, seg.spec.label), []).append(seg)
    rng = np.random.Generator(np.random.Philox(key=policy.seed))
    kept = []
    for key in sorted(groups):
        grp = sorted(groups[key],
                     key=lambda s: (s.spec.utt_id, s.spec.start_s))
        quota = policy.per_phoneme_per_speaker
        if len(grp) <= quota:
            kept.extend(grp)
        else:
            idx = rng.choice(len(grp), size=quota, replace=False)
            kept.extend(grp[i] for i in idx)
    kept.sort(key=lambda s: (s.speaker, s.spec.label,
                             s.spec.utt_id, s.spec.start_s))
    return kept


@dataclass
class SegmentTable:
    """Pooled segment vectors plus metadata for one layer.

    X is the n x D design matrix; word tables may carry prominence and
    boundary target columns.
    """
    layer: int
    X: np.ndarray
    labels: list
    speakers: list
    accents: list
    utt_ids: list
    prominence: np.ndarray | None = None
    boundary: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        n = len(self.labels)
        if self.X.shape[0] != n:
            raise ValueError("X rows and metadata length disagree")
        if n and not np.all(np.isfinite(self.X)):
            raise ValueError("segment table contains non-finite vectors")

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self):
        return self.X.shape[1]

    def filter_accent(self, accent):
        keep = [i for i, a in enumerate(self.accents) if a == accent]
        return self.take(keep)

    def take(self, idx):
        return SegmentTable(
            layer=self.layer,
            X=self.X[idx],
            labels=[self.labels[i] for i in idx],
            speakers=[self.speakers[i] for i in idx],
            accents=[self.accents[i] for i in idx],
            utt_ids=[self.utt_ids[i] for i in idx],
            prominence=None if self.prominence is None
            else self.prominence[idx],
            boundary=None if self.boundary is None else self.boundary[idx])

    def to_csv(self, path):
        with_targets = self.prominence is not None
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            head = ["layer", "label", "speaker", "accent", "utt_id"]
            if with_targets:
                head += ["prominence", "boundary"]
            head += ["v%d" % i for i in range(self.dim)]
            w.writerow(head)
            for i in range(len(self)):
                row = [self.layer, self.labels[i], self.speakers[i],
                       self.accents[i], self.utt_ids[i]]
                if with_targets:
                    row += [repr(float(self.prominence[i])),
                            repr(float(self.boundary[i]))]
                row += [repr(float(v)) for v in self.X[i]]
                w.writerow(row)

    @classmethod
    def from_csv(cls, path):
        with open(path, "r", newline="", encoding="utf-8") as f:
            r = csv.reader(f)
            head = next(r)
            with_targets = "prominence" in head
            v0 = head.index("v0")
            rows = list(r)
        layer = int(rows[0][0]) if rows else 0
        X = np.array([[float(x) for x in row[v0:]] for row in rows])
        kw = {}
        if with_targets:
            p = head.index("prominence")
            kw["prominence"] = np.array([float(row[p]) for row in rows])
            kw["boundary"] = np.array([float(row[p + 1]) for row in rows])
        if not rows:
            X = X.reshape(0, len(head) - v0)
        return cls(layer=layer, X=X,
                   labels=[row[1] for row in rows],
                   speakers=[row[2] for row in rows],
                   accents=[row[3] for row in rows],
                   utt_ids=[row[4] for row in rows], **kw)


def build_segment_table(pooled, layer, targets=None):
    """Assemble a SegmentTable from pooled segments.

    `targets`, when given, maps (utt_id, word_index) -> (prominence,
    boundary); a word row with no matching target is an error.
    """
    if not pooled:
        return SegmentTable(layer=layer, X=np.zeros((0, 0)), labels=[],
                            speakers=[], accents=[], utt_ids=[])
    dims = {len(p.vector) for p in pooled}
    if len(dims) != 1:
        raise ValueError("pooled vectors have inconsistent dimensions %s"
                         % sorted(dims))
    X = np.stack([p.vector for p in pooled])
    kw = {}
    if targets is not None:
        prom, bnd = [], []
        for p in pooled:
            key = (p.spec.utt_id, p.spec.index)
            if key not in targets:
                raise ValueError(
                    "no prosody target for word %r (utt %s, index %d)"
                    % (p.spec.label, p.spec.utt_id, p.spec.index))
            t = targets[key]
            prom.append(t[0])
            bnd.append(t[1])
        kw["prominence"] = np.array(prom)
        kw["boundary"] = np.array(bnd)
    return SegmentTable(layer=layer, X=X,
                        labels=[p.spec.label for p in pooled],
                        speakers=[p.speaker for p in pooled],
                        accents=[p.accent for p in pooled],
                        utt_ids=[p.spec.utt_id for p in pooled], **kw)
