"""Hidden-state extraction from a wav2vec 2.0-style checkpoint."""

import hashlib
import logging
import os

import numpy as np
import torch
from transformers import Wav2Vec2Config, Wav2Vec2Model

log = logging.getLogger("extractor")


class Extractor:
    def __init__(self, checkpoint_path, layers=None):
        self.model = Wav2Vec2Model.from_pretrained(checkpoint_path)
        self.model.eval()
        config = self.model.config
        n = config.num_hidden_layers
        # default: all transformer layers (hidden_states[0] is the
        # convolutional front-end output, [1..n] the transformer layers)
        self.layers = list(layers) if layers else list(range(1, n + 1))
        for layer in self.layers:
            if not (0 <= layer <= n):
                raise ValueError(
                    "layer %d invalid for a %d-layer model" % (layer, n))
        self.dim = config.hidden_size
        # native frame rate of the convolutional front-end
        self.frame_hop_s = float(np.prod(config.conv_stride)) \
            / config.sampling_rate if hasattr(config, "sampling_rate") \
            else float(np.prod(config.conv_stride)) / 16000.0
        self.checkpoint_sha256 = _weights_hash(checkpoint_path)

    def num_output_frames(self, num_samples):
        return int(self.model._get_feat_extract_output_lengths(
            torch.tensor(num_samples)))

    def extract(self, samples):
        """samples: 1-D float waveform -> (L, T, D) float32 array."""
        x = np.asarray(samples, dtype=np.float32)
        x = (x - x.mean()) / (x.std() + 1e-7)
        expected_t = self.num_output_frames(len(x))
        with torch.no_grad():
            out = self.model(torch.from_numpy(x)[None, :],
                             output_hidden_states=True)
        states = [out.hidden_states[i][0].numpy() for i in self.layers]
        dump = np.stack(states).astype(np.float32)
        if dump.shape[1] != expected_t:
            raise RuntimeError(
                "frame-count mismatch: model produced %d frames, "
                "expected %d" % (dump.shape[1], expected_t))
        return dump


def _weights_hash(checkpoint_path):
    for name in ("model.safetensors", "pytorch_model.bin"):
        path = os.path.join(checkpoint_path, name)
        if os.path.exists(path):
            h = hashlib.sha256()
            with open(path, "rb") as f:
                for chunk in iter(lambda: f.read(1 << 20), b""):
                    h.update(chunk)
            return h.hexdigest()
    log.warning("no weight file found under %s; hash omitted",
                checkpoint_path)
    return None


def save_random_base_checkpoint(path, seed=0):
    """Materialize an untrained base-architecture checkpoint (12 layers,
    768 dims); useful for smoke tests without a model download."""
    torch.manual_seed(seed)
    model = Wav2Vec2Model(Wav2Vec2Config())
    model.save_pretrained(path)
    return path
