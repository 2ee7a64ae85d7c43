"""
Layer-wise CCA against phoneme labels
=====================================

Builds a small synthetic feature dump in which exactly one transformer
layer linearly encodes phoneme identity, then walks the whole pipeline
(pool -> CCA protocol) and prints the per-layer score curve. The planted
layer should clearly win.
"""

import os
import tempfile

import numpy as np

from layerprobe import cca, cli, dumpio, pooling

root = tempfile.mkdtemp(prefix="layerprobe_demo_")
rng = np.random.default_rng(0)

# a tiny corpus: 2 accents x 3 speakers x 3 utterances, 6 layers,
# 20 phones of 5 frames each at a 20 ms hop
phonemes = ["AA", "IY", "P", "S", "T", "K"]
num_layers, dim, hop, phone_frames = 6, 12, 0.02, 5
planted_layer = 4
emb = {p: rng.choice([-1.0, 1.0], size=dim) for p in phonemes}

os.makedirs(os.path.join(root, "feats"))
os.makedirs(os.path.join(root, "align"))
utts = []
for accent in ("US", "CN"):
    for s in range(3):
        speaker = "%s_s%d" % (accent, s)
        for u in range(3):
            utt_id = "%s_u%d" % (speaker, u)
            seq = [phonemes[i % len(phonemes)] for i in range(20)]
            rng.shuffle(seq)
            T = 20 * phone_frames
            X = 0.5 * rng.standard_normal((num_layers, T, dim))
            segs = []
            for k, p in enumerate(seq):
                segs.append(dumpio.Segment(p, k * phone_frames * hop,
                                           (k + 1) * phone_frames * hop))
                # only the planted layer carries the phoneme code
                X[planted_layer, k * phone_frames:(k + 1) * phone_frames] \
                    += emb[p]
            dumpio.write_features(
                dumpio.FeatureDump(X),
                os.path.join(root, "feats", utt_id + ".lpd"))
            dumpio.write_alignment(
                dumpio.AlignmentTier("phone", segs),
                dumpio.AlignmentTier("word", []),
                os.path.join(root, "align", utt_id + ".tsv"))
            utts.append(dumpio.UtteranceMeta(
                utt_id=utt_id, speaker=speaker, accent=accent,
                num_frames=T, feature_path="feats/" + utt_id + ".lpd",
                alignment_path="align/" + utt_id + ".tsv"))

dumpio.write_manifest(
    dumpio.Manifest(format_version=1, frame_hop_s=hop,
                    num_layers=num_layers, dim=dim,
                    accents=["CN", "US"], utterances=utts),
    os.path.join(root, "manifest"))

# pool every layer into per-segment tables (this also samples per
# phoneme x speaker and drops sub-2-frame segments)
cli.cmd_pool({"dataset_root": root, "seed": 0, "model_tag": "demo"})

# run the 10-fold CCA protocol per layer and print the curve
print("layer  PWCCA score")
for layer in range(num_layers):
    table = pooling.SegmentTable.from_csv(
        os.path.join(root, "tables", "phone_L%d.csv" % layer))
    res = cca.cca_protocol(table, seed=0)
    marker = "  <- planted" if layer == planted_layer else ""
    print("%5d  %.4f%s" % (layer, res.score, marker))
