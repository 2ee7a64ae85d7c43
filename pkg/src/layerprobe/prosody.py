"""Word prominence/boundary scoring via a continuous wavelet transform.

A composite per-frame signal is built from log-F0 (unvoiced gaps
interpolated), log energy, and a piecewise-constant word-duration
signal, each z-scored over its valid region and combined with
configurable weights. The composite is analyzed with a Mexican-hat CWT
over dyadic scales; a word's prominence is the largest positive
coefficient in the word-scale band inside the word, and its boundary
score is the magnitude of the most negative coefficient in the
phrase-scale band near the word's end.

Scores are on an arbitrary scale: only relative/rank behavior is
meaningful, and externally produced labels can be imported instead.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

log = logging.getLogger(__name__)

# dyadic analysis scales in seconds and the sub-bands used for scoring
DEFAULT_SCALES_S = (0.1, 0.2, 0.4, 0.8, 1.6, 3.2)
PROMINENCE_BAND_S = (0.2, 0.8)
BOUNDARY_BAND_S = (0.8, 3.2)


@dataclass
class CompositeSignal:
    values: np.ndarray
    f0_norm: np.ndarray
    energy_norm: np.ndarray
    duration_norm: np.ndarray
    weights: tuple


@dataclass
class CwtPlane:
    scales: np.ndarray  # in frames
    coefficients: np.ndarray  # scales x frames


@dataclass(frozen=True)
class WordProsody:
    utt_id: str
    word_index: int
    word: str
    prominence: float
    boundary: float


def _interpolate_gaps(values, valid):
    """Linear interpolation across invalid runs, edges held."""
    out = values.astype(np.float64).copy()
    idx = np.flatnonzero(valid)
    if len(idx) == 0:
        raise ValueError("no valid samples to interpolate from")
    out[:idx[0]] = out[idx[0]]
    out[idx[-1] + 1:] = out[idx[-1]]
    gaps = np.flatnonzero(~valid)
    gaps = gaps[(gaps > idx[0]) & (gaps < idx[-1])]
    if len(gaps):
        out[gaps] = np.interp(gaps, idx, values[idx])
    return out


def _zscore(values, valid=None):
    """Z-score using statistics over the valid region; constants -> 0."""
    v = values[valid] if valid is not None else values
    mu = v.mean()
    sd = v.std()
    # near-constant components normalize to zero; the cutoff sits above
    # float32 rounding noise and far below any real prosodic variation
    if sd <= 1e-6 * max(np.abs(v).max(), 1.0):
        return np.zeros_like(values, dtype=np.float64)
    return (values - mu) / sd


def normalize_components(track, word_tier, hop, weights=(1/3, 1/3, 1/3)):
    """Composite prosody signal from an F0/energy track and word tier."""
    T = track.num_frames
    voiced = track.f0_hz > 0
    w_f0, w_en, w_du = weights
    if not np.any(voiced):
        log.warning("fully unvoiced utterance; F0 weight redistributed")
        total = w_en + w_du
        w_f0, w_en, w_du = 0.0, w_en / total, w_du / total
        f0_norm = np.zeros(T)
    else:
        logf0 = np.zeros(T)
        logf0[voiced] = np.log(track.f0_hz[voiced])
        logf0 = _interpolate_gaps(logf0, voiced)
        f0_norm = _zscore(logf0, voiced)
    energy_norm = _zscore(np.log(track.energy + 1e-8))
    dur = np.zeros(T)
    covered = np.zeros(T, dtype=bool)
    for seg in word_tier.segments:
        lo = max(0, int(math.floor(seg.start_s / hop)))
        hi = min(T, int(math.ceil(seg.end_s / hop)))
        dur[lo:hi] = seg.end_s - seg.start_s
        covered[lo:hi] = True
    duration_norm = _zscore(dur, covered) if np.any(covered) \
        else np.zeros(T)
    values = w_f0 * f0_norm + w_en * energy_norm + w_du * duration_norm
    return CompositeSignal(values=values, f0_norm=f0_norm,
                           energy_norm=energy_norm,
                           duration_norm=duration_norm,
                           weights=(w_f0, w_en, w_du))


def _mexican_hat(scale):
    """Sampled Mexican-hat wavelet at `scale` frames, l2-scale normalized."""
    half = max(1, int(math.ceil(5 * scale)))
    t = np.arange(-half, half + 1) / scale
    psi = (1.0 - t * t) * np.exp(-0.5 * t * t)
    psi -= psi.mean()  # exact zero response to constants after truncation
    return psi / math.sqrt(scale)


def cwt(signal, scales):
    """Mexican-hat CWT with reflected-boundary padding.

    `signal` may be a CompositeSignal or a plain array; `scales` are in
    frames.
    """
    x = signal.values if isinstance(signal, CompositeSignal) \
        else np.asarray(signal, dtype=np.float64)
    if len(x) < 8:
        raise ValueError("signal too short for CWT (%d frames)" % len(x))
    scales = np.asarray(scales, dtype=np.float64)
    if np.any(scales <= 0):
        raise ValueError("scales must be positive")
    rows = []
    for s in scales:
        psi = _mexican_hat(s)
        pad = (len(psi) - 1) // 2
        xp = np.pad(x, pad, mode="reflect")
        full = fftconvolve(xp, psi, mode="same")
        rows.append(full[pad:pad + len(x)])
    return CwtPlane(scales=scales, coefficients=np.stack(rows))


def default_scales_frames(hop, scales_s=DEFAULT_SCALES_S):
    return np.array([s / hop for s in scales_s])


def _band_rows(plane, hop, band_s):
    lo, hi = band_s
    sec = plane.scales * hop
    rows = np.flatnonzero((sec >= lo - 1e-9) & (sec <= hi + 1e-9))
    if len(rows) == 0:
        raise ValueError("no CWT scales inside band [%g, %g] s" % (lo, hi))
    return rows


def score_words(plane, word_tier, frame_hop,
                prominence_band_s=PROMINENCE_BAND_S,
                boundary_band_s=BOUNDARY_BAND_S, utt_id=""):
    """Per-word prominence and boundary scores from a CWT plane."""
    if not word_tier.segments:
        raise ValueError("empty word tier")
    T = plane.coefficients.shape[1]
    prom_rows = _band_rows(plane, frame_hop, prominence_band_s)
    bnd_rows = _band_rows(plane, frame_hop, boundary_band_s)
    mean_dur = np.mean([s.end_s - s.start_s for s in word_tier.segments])
    half_win = max(1, int(round(0.5 * mean_dur / frame_hop)))
    out = []
    for idx, seg in enumerate(word_tier.segments):
        lo = max(0, int(math.floor(seg.start_s / frame_hop)))
        hi = min(T, int(math.ceil(seg.end_s / frame_hop)))
        if hi <= lo:
            log.warning("utt %s word %d (%r): no frames, scored 0",
                        utt_id, idx, seg.label)
            out.append(WordProsody(utt_id, idx, seg.label, 0.0, 0.0))
            continue
        span = plane.coefficients[np.ix_(prom_rows, range(lo, hi))]
        prominence = float(max(span.max(), 0.0))
        end_f = int(round(seg.end_s / frame_hop))
        blo = max(0, end_f - half_win)
        bhi = min(T, end_f + half_win + 1)
        bspan = plane.coefficients[np.ix_(bnd_rows, range(blo, bhi))]
        boundary = float(max(-bspan.min(), 0.0))
        out.append(WordProsody(utt_id, idx, seg.label, prominence, boundary))
    return out


def label_utterance(track, word_tier, hop, utt_id="",
                    weights=(1/3, 1/3, 1/3), scales_s=DEFAULT_SCALES_S,
                    prominence_band_s=PROMINENCE_BAND_S,
                    boundary_band_s=BOUNDARY_BAND_S):
    """Full labeling pipeline for one utterance."""
    comp = normalize_components(track, word_tier, hop, weights=weights)
    plane = cwt(comp, default_scales_frames(hop, scales_s))
    return score_words(plane, word_tier, hop,
                       prominence_band_s=prominence_band_s,
                       boundary_band_s=boundary_band_s, utt_id=utt_id)


def write_labels(records, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, delimiter="\t")
        w.writerow(["utt_id", "word_index", "word", "prominence",
                    "boundary"])
        for r in records:
            w.writerow([r.utt_id, r.word_index, r.word,
                        repr(float(r.prominence)), repr(float(r.boundary))])


def import_labels(path, word_tiers=None):
    """Read a label TSV; validate against word tiers when provided.

    `word_tiers` maps utt_id -> AlignmentTier(word). Word strings must
    match the alignment case-insensitively, and every word of a covered
    utterance must be present.
    """
    records = []
    with open(path, "r", encoding="utf-8") as f:
        r = csv.reader(f, delimiter="\t")
        head = next(r)
        if head[:5] != ["utt_id", "word_index", "word", "prominence",
                        "boundary"]:
            raise ValueError("unexpected label file header %s" % head)
        for row in r:
            records.append(WordProsody(row[0], int(row[1]), row[2],
                                       float(row[3]), float(row[4])))
    if word_tiers is not None:
        by_utt = {}
        for rec in records:
            by_utt.setdefault(rec.utt_id, []).append(rec)
        for utt_id, recs in by_utt.items():
            if utt_id not in word_tiers:
                raise ValueError("labels reference unknown utt_id %r"
                                 % utt_id)
            segs = word_tiers[utt_id].segments
            if len(recs) != len(segs):
                raise ValueError(
                    "utt %r: %d label rows for %d aligned words"
                    % (utt_id, len(recs), len(segs)))
            for rec in recs:
                aligned = segs[rec.word_index].label
                if rec.word.lower() != aligned.lower():
                    raise ValueError(
                        "utt %r word %d: label file says %r, alignment "
                        "says %r" % (utt_id, rec.word_index, rec.word,
                                     aligned))
    return records
