"""
Voice perturbation: formant scaling, F0 scaling, random EQ
==========================================================

Synthesizes a vowel-like signal (harmonics of 120 Hz under an envelope
peaked at 700 Hz), applies the three perturbation stages, and measures
what moved: formant scaling shifts the envelope but not the pitch, F0
scaling shifts the pitch but not the envelope.
"""

import numpy as np

from layerprobe import perturb

sr = 16000
t = np.arange(sr) / sr

# harmonics of 120 Hz shaped by a Gaussian envelope peak at 700 Hz
x = np.zeros_like(t)
for k in range(1, 60):
    f = 120.0 * k
    a = np.exp(-0.5 * ((f - 700.0) / 150.0) ** 2)
    x += a * np.sin(2 * np.pi * f * t + 0.7 * k)
vowel = perturb.Waveform(0.2 * x / np.abs(x).max(), sr)


def describe(wave, label):
    # envelope peak from the cepstrally smoothed mean log spectrum
    mag = np.abs(perturb.stft(wave.samples, sr)).mean(axis=0)
    ceps = np.fft.irfft(np.log(np.maximum(mag, 1e-12)), n=perturb.N_FFT)
    lift = np.zeros(perturb.N_FFT)
    lift[:40] = 1.0
    lift[-39:] = 1.0
    env = np.fft.rfft(ceps * lift, n=perturb.N_FFT).real
    peak = np.argmax(env[6:400]) + 6
    # fundamental via the autocorrelation peak (the fundamental partial
    # itself is weak this far below the envelope peak)
    x = wave.samples - wave.samples.mean()
    ac = np.correlate(x, x, mode="full")[len(x) - 1:]
    lags = np.arange(len(ac))
    band = (lags >= sr // 250) & (lags <= sr // 60)
    f0 = sr / lags[band][np.argmax(ac[band])]
    print("%-28s envelope peak %6.0f Hz   F0 %6.1f Hz"
          % (label, peak * sr / perturb.N_FFT, f0))


describe(vowel, "original")
describe(perturb.scale_formants(vowel, 1.2), "formants x1.2 (700 -> 840)")
describe(perturb.scale_f0(vowel, 1.3), "F0 x1.3 (120 -> 156)")

# the full sampler: alpha > 0.25 applies all three stages with random
# betas (U(1, 1.4), reciprocal w.p. 0.5) and a random smooth EQ
print()
cfg = perturb.PerturbConfig(seed=0)
rng = perturb.make_rng(7)
for i in range(5):
    out, d = perturb.perturb_waveform(vowel, cfg, rng)
    if d.applied:
        print("draw %d: applied, beta1=%.3f beta2=%.3f eq mean %+.2f dB"
              % (i, d.beta1, d.beta2, float(np.mean(d.eq_curve))))
    else:
        print("draw %d: passed through unchanged" % i)
