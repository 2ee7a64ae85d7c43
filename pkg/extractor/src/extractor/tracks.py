"""Per-frame F0 and energy extraction.

F0 uses windowed autocorrelation with a normalized-peak voicing
decision; unvoiced frames are written as exactly 0.0. Energy is the
frame RMS. Frame i covers [i*hop, (i+1)*hop) to match the model's
feature frames.
"""

import numpy as np

F0_MIN_HZ = 60.0
F0_MAX_HZ = 400.0
VOICING_THRESHOLD = 0.5


def extract_track(samples, sample_rate, num_frames, hop_s,
                  win_s=0.04):
    """Returns (f0_hz, energy) arrays of length num_frames."""
    x = np.asarray(samples, dtype=np.float64)
    hop = int(round(hop_s * sample_rate))
    win = int(round(win_s * sample_rate))
    lag_lo = int(sample_rate / F0_MAX_HZ)
    lag_hi = int(sample_rate / F0_MIN_HZ)
    f0 = np.zeros(num_frames)
    energy = np.zeros(num_frames)
    for i in range(num_frames):
        frame = x[i * hop:i * hop + win]
        if len(frame) < 2 * lag_lo:
            continue
        frame = frame - frame.mean()
        energy[i] = float(np.sqrt(np.mean(frame * frame)))
        if energy[i] == 0.0:
            continue
        ac = np.correlate(frame, frame, mode="full")[len(frame) - 1:]
        if ac[0] <= 0:
            continue
        hi = min(lag_hi, len(ac) - 1)
        if hi <= lag_lo:
            continue
        lag = lag_lo + int(np.argmax(ac[lag_lo:hi + 1]))
        if ac[lag] / ac[0] >= VOICING_THRESHOLD:
            f0[i] = sample_rate / lag
    return f0, energy
