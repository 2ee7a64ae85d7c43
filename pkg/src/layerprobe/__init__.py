"""Layer-wise probing toolkit for speech representations.

Subpackages cover the full analysis pipeline: binary dump I/O (dumpio),
segment pooling (pooling), projection-weighted CCA scoring (cca), linear
prosody probes (probes), wavelet prominence/boundary labeling (prosody),
waveform voice perturbation (perturb), and 2-D embedding export (embed).
"""

__version__ = "0.1.0"
