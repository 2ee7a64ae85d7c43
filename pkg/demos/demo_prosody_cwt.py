"""
Wavelet-based word prominence and boundary scoring
==================================================

Builds one synthetic utterance whose third word carries an F0 + energy
bump and whose fourth word is followed by a silence-like gap, then shows
how the continuous wavelet transform turns the composite prosody signal
into per-word prominence and boundary scores.
"""

import numpy as np

from layerprobe import dumpio, prosody

hop = 0.02           # 20 ms frames
T = 300              # 6 s utterance
n_words = 5

# flat background: 120 Hz voice, constant energy
f0 = np.full(T, 120.0)
energy = np.full(T, 0.1)

# word 2 gets a pitch accent: an F0 and energy bump over its span
wf = 50  # frames per word (1 s words, words 0..4 contiguous)
bump = np.hanning(wf)
f0[2 * wf:3 * wf] += 50.0 * bump
energy[2 * wf:3 * wf] += 0.15 * bump

# after word 3 the voice drops and quietens, like a phrase break
f0[200:260] = 80.0
energy[200:260] = 0.01

words = dumpio.AlignmentTier("word", [
    dumpio.Segment("w%d" % i, i * wf * hop, (i + 1) * wf * hop)
    for i in range(n_words)])
track = dumpio.ProsodyTrack(f0_hz=f0, energy=energy)

# the composite signal: z-scored log-F0 + log-energy + word duration
comp = prosody.normalize_components(track, words, hop)
print("composite signal range: [%.2f, %.2f]"
      % (comp.values.min(), comp.values.max()))

# CWT over dyadic scales from 0.1 s to 3.2 s
plane = prosody.cwt(comp, prosody.default_scales_frames(hop))
print("CWT plane: %d scales x %d frames" % plane.coefficients.shape)

# prominence = strongest positive word-scale response inside the word;
# boundary = deepest phrase-scale trough near the word end
records = prosody.label_utterance(track, words, hop, utt_id="demo")
print()
print("word   prominence  boundary")
for r in records:
    notes = []
    if r.word_index == 2:
        notes.append("pitch accent planted here")
    if r.word_index == 3:
        notes.append("phrase break after this word")
    print("%-5s  %10.3f  %8.3f  %s"
          % (r.word, r.prominence, r.boundary, "; ".join(notes)))
