"""extract: corpus + checkpoint -> layerprobe dataset root.

Corpus layout: a directory with `metadata.tsv` (header
utt_id\tspeaker\taccent\twav\talignment) whose wav/alignment paths are
relative to the corpus directory. Alignments may be forced-aligner
TextGrids or already-converted tier TSVs. Utterances with a missing
alignment are logged and skipped; a frame-count mismatch between the
model output and the expected length is a hard error.
"""

import argparse
import csv
import logging
import os
import sys

from scipy.io import wavfile

from . import formats, textgrid, tracks
from .model import Extractor

log = logging.getLogger("extractor")


def read_corpus(corpus_dir):
    meta_path = os.path.join(corpus_dir, "metadata.tsv")
    rows = []
    with open(meta_path, "r", encoding="utf-8") as f:
        r = csv.reader(f, delimiter="\t")
        head = next(r)
        if head != ["utt_id", "speaker", "accent", "wav", "alignment"]:
            raise ValueError("unexpected metadata header %s" % head)
        for row in r:
            rows.append(dict(zip(head, row)))
    return rows


def load_alignment(path):
    if path.lower().endswith(".textgrid"):
        return textgrid.to_tiers(textgrid.read_textgrid(path))
    phones, words = [], []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            tier, label, start, end = line.split("\t")
            dest = phones if tier == "phone" else words
            dest.append((label, float(start), float(end)))
    return phones, words


def parse_layers(spec):
    if not spec:
        return None
    out = []
    for part in spec.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def run_extract(corpus_dir, checkpoint, out_root, layers=None,
                model_tag="model"):
    ex = Extractor(checkpoint, layers=layers)
    for sub in ("feats", "align", "tracks"):
        os.makedirs(os.path.join(out_root, sub), exist_ok=True)
    utterances = []
    accents = set()
    for row in read_corpus(corpus_dir):
        utt_id = row["utt_id"]
        align_path = os.path.join(corpus_dir, row["alignment"])
        if not os.path.exists(align_path):
            log.warning("utt %s: alignment %s missing; skipped",
                        utt_id, row["alignment"])
            continue
        sr, audio = wavfile.read(os.path.join(corpus_dir, row["wav"]))
        if audio.dtype.kind == "i":
            audio = audio / float(2 ** (8 * audio.dtype.itemsize - 1))
        dump = ex.extract(audio)
        T = dump.shape[1]
        formats.write_features(
            dump, os.path.join(out_root, "feats", utt_id + ".lpd"))
        phones, words = load_alignment(align_path)
        formats.write_alignment(
            phones, words,
            os.path.join(out_root, "align", utt_id + ".tsv"))
        f0, energy = tracks.extract_track(audio, sr, T, ex.frame_hop_s)
        formats.write_track(
            f0, energy, os.path.join(out_root, "tracks", utt_id + ".lpt"))
        accents.add(row["accent"])
        utterances.append({
            "utt_id": utt_id, "speaker": row["speaker"],
            "accent": row["accent"], "num_frames": T,
            "feature_path": "feats/" + utt_id + ".lpd",
            "alignment_path": "align/" + utt_id + ".tsv",
            "track_path": "tracks/" + utt_id + ".lpt"})
        log.info("utt %s: %d frames x %d layers x %d dims",
                 utt_id, T, dump.shape[0], dump.shape[2])
    if not utterances:
        raise ValueError("no utterances extracted")
    formats.write_manifest(
        os.path.join(out_root, "manifest"),
        frame_hop_s=ex.frame_hop_s, num_layers=len(ex.layers),
        dim=ex.dim, accents=accents, utterances=utterances,
        extra={"model_tag": model_tag,
               "checkpoint_sha256": ex.checkpoint_sha256,
               "source_layers": ex.layers})
    return out_root


def main(argv=None):
    p = argparse.ArgumentParser(
        prog="extract",
        description="dump per-layer hidden states, alignments and "
                    "prosody tracks for a speech corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--layers", default=None,
                   help="e.g. 1-12 or 1,6,12 (default: all transformer "
                        "layers)")
    p.add_argument("--out", required=True)
    p.add_argument("--model-tag", default="model")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run_extract(args.corpus, args.checkpoint, args.out,
                    layers=parse_layers(args.layers),
                    model_tag=args.model_tag)
    except (ValueError, RuntimeError) as e:
        log.error("%s", e)
        return 2
    except OSError as e:
        log.error("I/O failure: %s", e)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
