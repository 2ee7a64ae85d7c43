"""Synthetic dataset builder shared by CLI, integration and acceptance
tests.

Builds a full dataset root (manifest + feats/ + align/ + tracks/) with
known structure: every phone spans `phone_frames` frames, words group
`phones_per_word` consecutive phones, and one extra 1-frame phone is
appended per utterance so the min-frames discard count is predictable.

Optionally one layer linearly encodes phoneme identity and another
linearly encodes the word prosody targets; all other layers are noise.
"""

import os

import numpy as np

from layerprobe import dumpio

PHONEMES = ("AA", "IY", "P", "S", "T", "K", "M", "N")


def make_dataset(root, num_layers=12, dim=16, hop=0.02,
                 accents=("AB", "CN", "IN", "US"), speakers_per_accent=4,
                 utts_per_speaker=4, phones_per_utt=20, phone_frames=5,
                 phones_per_word=4, phonemes=PHONEMES, phone_layer=None,
                 target_layer=None, noise=0.5, seed=0,
                 write_planted_labels=False):
    rng = np.random.default_rng(seed)
    for sub in ("feats", "align", "tracks", "reports"):
        os.makedirs(os.path.join(root, sub), exist_ok=True)
    emb = {p: rng.choice([-1.0, 1.0], size=dim) for p in phonemes}
    u_dir = rng.standard_normal(dim)
    u_dir /= np.linalg.norm(u_dir)
    v_dir = rng.standard_normal(dim)
    v_dir /= np.linalg.norm(v_dir)

    utts = []
    planted_labels = []
    n_short = 0
    for ai, accent in enumerate(accents):
        for si in range(speakers_per_accent):
            speaker = "%s_spk%d" % (accent, si)
            for ui in range(utts_per_speaker):
                utt_id = "%s_u%d" % (speaker, ui)
                seq = [phonemes[i % len(phonemes)]
                       for i in range(phones_per_utt)]
                rng.shuffle(seq)
                T = phones_per_utt * phone_frames + 1  # +1 short phone
                X = noise * rng.standard_normal((num_layers, T, dim))
                phone_segs = []
                for k, p in enumerate(seq):
                    t0 = k * phone_frames * hop
                    t1 = (k + 1) * phone_frames * hop
                    phone_segs.append(dumpio.Segment(p, t0, t1))
                    if phone_layer is not None:
                        lo = k * phone_frames
                        X[phone_layer, lo:lo + phone_frames] += emb[p]
                # trailing 1-frame phone, discarded by min_frames=2
                t_end = phones_per_utt * phone_frames * hop
                phone_segs.append(dumpio.Segment("SH", t_end, t_end + hop))
                n_short += 1
                word_segs = []
                n_words = phones_per_utt // phones_per_word
                for w in range(n_words):
                    t0 = w * phones_per_word * phone_frames * hop
                    t1 = (w + 1) * phones_per_word * phone_frames * hop
                    word_segs.append(dumpio.Segment("word%d" % w, t0, t1))
                    prom = rng.uniform(0.0, 2.0)
                    bnd = rng.uniform(0.0, 2.0)
                    planted_labels.append(
                        (utt_id, w, "word%d" % w, prom, bnd))
                    if target_layer is not None:
                        lo = w * phones_per_word * phone_frames
                        hi = (w + 1) * phones_per_word * phone_frames
                        X[target_layer, lo:hi] += (prom * u_dir
                                                   + bnd * v_dir)
                dumpio.write_features(
                    dumpio.FeatureDump(X),
                    os.path.join(root, "feats", utt_id + ".lpd"))
                dumpio.write_alignment(
                    dumpio.AlignmentTier("phone", phone_segs),
                    dumpio.AlignmentTier("word", word_segs),
                    os.path.join(root, "align", utt_id + ".tsv"))
                f0 = np.clip(120 + 10 * rng.standard_normal(T), 50, None)
                f0[rng.uniform(size=T) < 0.1] = 0.0  # some unvoiced frames
                en = np.clip(0.1 + 0.02 * rng.standard_normal(T), 1e-4,
                             None)
                dumpio.write_track(
                    dumpio.ProsodyTrack(f0_hz=f0, energy=en),
                    os.path.join(root, "tracks", utt_id + ".lpt"))
                utts.append(dumpio.UtteranceMeta(
                    utt_id=utt_id, speaker=speaker, accent=accent,
                    num_frames=T,
                    feature_path="feats/" + utt_id + ".lpd",
                    alignment_path="align/" + utt_id + ".tsv",
                    track_path="tracks/" + utt_id + ".lpt"))
    man = dumpio.Manifest(format_version=1, frame_hop_s=hop,
                          num_layers=num_layers, dim=dim,
                          accents=list(accents), utterances=utts)
    dumpio.write_manifest(man, os.path.join(root, "manifest"))
    if write_planted_labels:
        path = os.path.join(root, "reports", "labels.tsv")
        with open(path, "w", encoding="utf-8") as f:
            f.write("utt_id\tword_index\tword\tprominence\tboundary\n")
            for utt_id, w, word, prom, bnd in planted_labels:
                f.write("%s\t%d\t%s\t%s\t%s\n"
                        % (utt_id, w, word, repr(prom), repr(bnd)))
    return man, n_short
