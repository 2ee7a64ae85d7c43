"""Waveform-domain speaker-voice perturbation.

Three random transforms applied in sequence when a uniform draw exceeds
the apply threshold: formant-frequency scaling by beta1, F0 scaling by
beta2, and a random smooth frequency-shaping equalizer. Both betas are
drawn U(beta_low, beta_high) and independently flipped to their
reciprocals with the flip probability.

Formant scaling warps the cepstrally smoothed spectral envelope along
the frequency axis while keeping the excitation (hence F0); F0 scaling
resamples the waveform and restores its duration with a phase vocoder,
then undoes the envelope shift. All stages preserve duration and are
pure functions of (input, config, rng state).
"""

import hashlib
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.signal
from scipy.io import wavfile

log = logging.getLogger(__name__)

# analysis defaults at 16 kHz: 25 ms window, 5 ms hop, 1024-point FFT
WIN_S = 0.025
HOP_S = 0.005
N_FFT = 1024
CEPSTRAL_ORDER = 60
MIN_SAMPLES = 1024


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("mono waveforms only")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("non-finite samples")


@dataclass
class PerturbConfig:
    beta_low: float = 1.0
    beta_high: float = 1.4
    flip_prob: float = 0.5
    apply_threshold: float = 0.25
    eq_bands: int = 8
    eq_gain_db: float = 6.0
    seed: int = 0

    def __post_init__(self):
        if not (1.0 <= self.beta_low < self.beta_high):
            raise ValueError("need 1 <= beta_low < beta_high")
        for p in (self.flip_prob, self.apply_threshold):
            if not (0.0 <= p <= 1.0):
                raise ValueError("probabilities must be in [0, 1]")


@dataclass
class PerturbDraw:
    applied: bool
    beta1: float
    beta2: float
    eq_curve: np.ndarray  # dB per rfft bin


def make_rng(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def rng_for_file(seed, name):
    """Independent stream per file so parallel order cannot matter."""
    h = hashlib.sha256(("%d:%s" % (seed, name)).encode()).digest()
    return make_rng(int.from_bytes(h[:8], "little"))


def draw(config, rng, n_bins=N_FFT // 2 + 1, sample_rate=16000):
    alpha = rng.uniform()
    betas = []
    for _ in range(2):
        b = rng.uniform(config.beta_low, config.beta_high)
        if rng.uniform() < config.flip_prob:
            b = 1.0 / b
        betas.append(b)
    freqs = np.arange(n_bins) * sample_rate / (2.0 * (n_bins - 1))
    curve = np.zeros(n_bins)
    lo, hi = math.log(100.0), math.log(0.45 * sample_rate)
    for _ in range(config.eq_bands):
        center = math.exp(rng.uniform(lo, hi))
        gain = rng.uniform(-config.eq_gain_db, config.eq_gain_db)
        # half-octave-ish bump in log frequency
        lf = np.log(np.maximum(freqs, 1.0))
        curve += gain * np.exp(-0.5 * ((lf - math.log(center)) / 0.35) ** 2)
    curve = np.clip(curve, -config.eq_gain_db, config.eq_gain_db)
    return PerturbDraw(applied=bool(alpha > config.apply_threshold),
                       beta1=betas[0], beta2=betas[1], eq_curve=curve)


# ---------------------------------------------------------------------------
# STFT plumbing (weighted overlap-add with exact interior reconstruction)

def _params(sample_rate):
    win = int(round(WIN_S * sample_rate))
    hop = int(round(HOP_S * sample_rate))
    return win, hop


def stft(x, sample_rate):
    win, hop = _params(sample_rate)
    w = np.hanning(win)
    xp = np.pad(x, (win, win))
    n_frames = 1 + (len(xp) - win) // hop
    frames = np.stack([xp[i * hop:i * hop + win] * w
                       for i in range(n_frames)])
    return np.fft.rfft(frames, n=N_FFT, axis=1)


def istft(S, sample_rate, out_len):
    win, hop = _params(sample_rate)
    w = np.hanning(win)
    frames = np.fft.irfft(S, n=N_FFT, axis=1)[:, :win]
    total = (S.shape[0] - 1) * hop + win
    y = np.zeros(total)
    norm = np.zeros(total)
    for i in range(S.shape[0]):
        y[i * hop:i * hop + win] += frames[i] * w
        norm[i * hop:i * hop + win] += w * w
    y = y / np.maximum(norm, 1e-8 * norm.max())
    y = y[win:win + out_len]
    if len(y) < out_len:
        y = np.pad(y, (0, out_len - len(y)))
    return y


def _log_envelope(log_mag):
    """Cepstrally smoothed log-magnitude envelope, frame-wise."""
    ceps = np.fft.irfft(log_mag, n=N_FFT, axis=1)
    lifter = np.zeros(N_FFT)
    lifter[:CEPSTRAL_ORDER] = 1.0
    lifter[-(CEPSTRAL_ORDER - 1):] = 1.0
    return np.fft.rfft(ceps * lifter, n=N_FFT, axis=1).real


def _warp_rows(rows, beta):
    """Frequency-axis warp: out(f) = in(f / beta), edge held."""
    n = rows.shape[1]
    src = np.arange(n) / beta
    src = np.clip(src, 0, n - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n - 1)
    frac = src - lo
    return rows[:, lo] * (1 - frac) + rows[:, hi] * frac


def scale_formants(wave, beta1):
    """Scale spectral-envelope frequencies by beta1, keeping F0."""
    if not (0.5 <= beta1 <= 2.0):
        raise ValueError("beta1 out of supported range [0.5, 2]")
    _check_length(wave)
    S = stft(wave.samples, wave.sample_rate)
    mag = np.abs(S)
    phase = np.angle(S)
    log_mag = np.log(np.maximum(mag, 1e-12))
    env = _log_envelope(log_mag)
    excitation = log_mag - env
    new_mag = np.exp(_warp_rows(env, beta1) + excitation)
    out = istft(new_mag * np.exp(1j * phase), wave.sample_rate,
                len(wave.samples))
    return Waveform(out, wave.sample_rate)


def _phase_vocoder(S, rate, sample_rate):
    """Resample an STFT in time by `rate` analysis frames per step.

    Phases are propagated at magnitude peaks only and neighboring bins
    are locked to their peak (identity phase locking), which keeps the
    bins of one partial coherent and avoids smearing the envelope when
    stretching.
    """
    _, hop = _params(sample_rate)
    n_frames, n_bins = S.shape
    steps = np.arange(0, n_frames, rate)
    expected = 2 * np.pi * hop * np.arange(n_bins) / N_FFT
    phase = np.angle(S[0])
    mag = np.abs(S)
    ang = np.angle(S)
    out = np.empty((len(steps), n_bins), dtype=complex)
    for k, t in enumerate(steps):
        i = min(int(t), n_frames - 2)
        frac = t - i
        m = (1 - frac) * mag[i] + frac * mag[i + 1]
        out[k] = m * np.exp(1j * phase)
        dphi = ang[i + 1] - ang[i] - expected
        dphi -= 2 * np.pi * np.round(dphi / (2 * np.pi))
        # advance phase at local magnitude peaks, then lock every other
        # bin to its nearest peak preserving the analysis phase offsets
        mi = mag[i]
        interior = (mi[1:-1] >= mi[:-2]) & (mi[1:-1] >= mi[2:])
        peaks = np.flatnonzero(np.concatenate(([True], interior, [True])))
        nearest = peaks[np.searchsorted(
            0.5 * (peaks[:-1] + peaks[1:]), np.arange(n_bins))]
        adv = phase[peaks] + expected[peaks] + dphi[peaks]
        phase = adv[np.searchsorted(peaks, nearest)] \
            + ang[i + 1] - ang[i + 1][nearest]
    return out


def scale_f0(wave, beta2):
    """Scale F0 by beta2 while preserving the spectral envelope."""
    if not (0.5 <= beta2 <= 2.0):
        raise ValueError("beta2 out of supported range [0.5, 2]")
    _check_length(wave)
    n = len(wave.samples)
    shifted = scipy.signal.resample(wave.samples,
                                    max(MIN_SAMPLES, int(round(n / beta2))))
    S = _phase_vocoder(stft(shifted, wave.sample_rate),
                       rate=len(shifted) / n, sample_rate=wave.sample_rate)
    stretched = istft(S, wave.sample_rate, n)
    if beta2 == 1.0:
        return Waveform(stretched, wave.sample_rate)
    # resampling also moved the envelope; shift it back
    return scale_formants(Waveform(stretched, wave.sample_rate),
                          1.0 / beta2)


def apply_eq(wave, eq_curve):
    """Multiply the magnitude spectrum by a fixed dB curve, phase kept."""
    _check_length(wave)
    eq_curve = np.asarray(eq_curve, dtype=np.float64)
    if len(eq_curve) != N_FFT // 2 + 1:
        raise ValueError("eq curve must have %d bins" % (N_FFT // 2 + 1))
    S = stft(wave.samples, wave.sample_rate)
    S = S * (10.0 ** (eq_curve / 20.0))
    return Waveform(istft(S, wave.sample_rate, len(wave.samples)),
                    wave.sample_rate)


def _check_length(wave):
    if len(wave.samples) < MIN_SAMPLES:
        raise ValueError("waveform shorter than %d samples" % MIN_SAMPLES)


def perturb_waveform(wave, config, rng):
    """Draw parameters and apply formant -> F0 -> EQ, or pass through."""
    d = draw(config, rng, sample_rate=wave.sample_rate)
    if not d.applied:
        return wave, d
    out = scale_formants(wave, d.beta1)
    out = scale_f0(out, d.beta2)
    out = apply_eq(out, d.eq_curve)
    clipped = np.count_nonzero(np.abs(out.samples) > 1.0)
    if clipped:
        log.warning("%d samples clipped to [-1, 1]", clipped)
    return Waveform(np.clip(out.samples, -1.0, 1.0),
                    wave.sample_rate), d


# ---------------------------------------------------------------------------
# WAV I/O (16-bit PCM mono)

def read_wav(path):
    sr, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError("%s: mono WAV required" % path)
    if data.dtype != np.int16:
        raise ValueError("%s: 16-bit PCM required, got %s"
                         % (path, data.dtype))
    return Waveform(data.astype(np.float64) / 32768.0, sr)


def write_wav(wave, path):
    pcm = np.clip(np.round(wave.samples * 32768.0), -32768, 32767)
    wavfile.write(path, wave.sample_rate, pcm.astype(np.int16))
