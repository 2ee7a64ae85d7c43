"""Command-line pipeline over a dataset root.

Dataset layout: <root>/manifest plus feats/, align/, tracks/ holding the
per-utterance files; outputs go to <root>/tables/ and <root>/reports/.

Subcommands: pool, cca, probe, prosody-label, perturb, embed, report.
One global seed fixes every downstream artifact; sub-seeds per stage are
derived by hashing (seed, stage name). Exit codes: 0 success,
2 validation error, 3 I/O error, 4 numerical failure.
"""

import argparse
import glob
import hashlib
import json
import logging
import os
import sys

import numpy as np

from . import cca as cca_mod
from . import dumpio, embed, perturb, pooling, probes, prosody

log = logging.getLogger("layerprobe")


def sub_seed(seed, name):
    h = hashlib.sha256(("%d:%s" % (seed, name)).encode()).digest()
    return int.from_bytes(h[:8], "little")


def load_config(args):
    cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            cfg = json.load(f)
    if getattr(args, "dataset_root", None):
        cfg["dataset_root"] = args.dataset_root
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", 0)
    cfg.setdefault("model_tag", "model")
    return cfg


def _root(cfg):
    root = cfg.get("dataset_root")
    if not root:
        raise dumpio.ValidationError("no dataset root configured")
    return root


def _prepare_out(path, no_overwrite):
    if no_overwrite and os.path.exists(path):
        raise dumpio.ValidationError(
            "%s exists and --no-overwrite was given" % path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    return path


def _echo_config(cfg, root, command, extra=None):
    out = dict(cfg)
    out["command"] = command
    if extra:
        out.update(extra)
    path = os.path.join(root, "reports", "run_%s.json" % command)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(out, f, indent=2, sort_keys=True)
        f.write("\n")


def _load_targets(root, cfg):
    path = cfg.get("labels_path",
                   os.path.join(root, "reports", "labels.tsv"))
    if not os.path.exists(path):
        return None
    records = prosody.import_labels(path)
    return {(r.utt_id, r.word_index): (r.prominence, r.boundary)
            for r in records}


# ---------------------------------------------------------------------------

def cmd_pool(cfg, no_overwrite=False):
    root = _root(cfg)
    man = dumpio.read_manifest(os.path.join(root, "manifest"))
    sampling = cfg.get("sampling", {})
    policy = pooling.SamplingPolicy(
        per_phoneme_per_speaker=sampling.get("per_phoneme_per_speaker", 100),
        min_frames=sampling.get("min_frames", 2),
        seed=sub_seed(cfg["seed"], "sampling"))
    targets = _load_targets(root, cfg)
    phone_by_layer = [[] for _ in range(man.num_layers)]
    word_by_layer = [[] for _ in range(man.num_layers)]
    n_discarded = 0
    for meta in man.utterances:
        dump = dumpio.read_features(
            os.path.join(root, meta.feature_path),
            expected=(man.num_layers, meta.num_frames, man.dim))
        phone, word = dumpio.read_alignment(
            os.path.join(root, meta.alignment_path))
        for layer in range(man.num_layers):
            ph = pooling.pool_phoneme_segments(
                dump, phone, policy, layer, meta, man.frame_hop_s)
            if layer == 0:
                n_discarded += len(phone.segments) - len(ph)
            phone_by_layer[layer].extend(ph)
            word_by_layer[layer].extend(pooling.pool_word_segments(
                dump, word, layer, meta, man.frame_hop_s))
    tables_dir = os.path.join(root, "tables")
    os.makedirs(tables_dir, exist_ok=True)
    kept = 0
    for layer in range(man.num_layers):
        sampled = pooling.sample_segments(phone_by_layer[layer], policy)
        if layer == 0:
            kept = len(sampled)
        table = pooling.build_segment_table(sampled, layer)
        table.to_csv(_prepare_out(
            os.path.join(tables_dir, "phone_L%d.csv" % layer),
            no_overwrite))
        wtable = pooling.build_segment_table(
            word_by_layer[layer], layer, targets=targets)
        wtable.to_csv(_prepare_out(
            os.path.join(tables_dir, "word_L%d.csv" % layer),
            no_overwrite))
    log.info("pool: %d phone segments kept per layer, %d discarded "
             "(below %d frames)", kept, n_discarded, policy.min_frames)
    _echo_config(cfg, root, "pool",
                 {"segments_kept": kept, "segments_discarded": n_discarded})
    return kept, n_discarded


def cmd_cca(cfg, no_overwrite=False):
    root = _root(cfg)
    man = dumpio.read_manifest(os.path.join(root, "manifest"),
                               check_files=False)
    opts = cfg.get("cca", {})
    folds = opts.get("folds", 10)
    eval_folds = opts.get("eval_folds", 3)
    seed = sub_seed(cfg["seed"], "cca")
    results = []
    accents = ["all"] + list(cfg.get("accents", man.accents))
    for layer in range(man.num_layers):
        path = os.path.join(root, "tables", "phone_L%d.csv" % layer)
        if not os.path.exists(path):
            raise dumpio.ValidationError(
                "missing pooled table %s; run `layerprobe pool` first"
                % path)
        table = pooling.SegmentTable.from_csv(path)
        for accent in accents:
            results.append(cca_mod.cca_protocol(
                table, folds=folds, eval_folds=eval_folds, seed=seed,
                ridge_eps=opts.get("ridge_eps", cca_mod.DEFAULT_RIDGE_EPS),
                rank_tol=opts.get("rank_tol", cca_mod.DEFAULT_RANK_TOL),
                accent_filter=accent))
    reports = os.path.join(root, "reports")
    cca_mod.write_results_csv(results, _prepare_out(
        os.path.join(reports, "cca.csv"), no_overwrite))
    with open(_prepare_out(os.path.join(reports, "cca_plot.csv"),
                           no_overwrite), "w", encoding="utf-8") as f:
        f.write("model_tag,accent,layer,score\n")
        for r in results:
            f.write("%s,%s,%d,%s\n" % (cfg["model_tag"], r.accent_filter,
                                       r.layer, repr(float(r.score))))
    _echo_config(cfg, root, "cca", {"num_results": len(results)})
    return results


def cmd_probe(cfg, no_overwrite=False):
    root = _root(cfg)
    man = dumpio.read_manifest(os.path.join(root, "manifest"),
                               check_files=False)
    folds = cfg.get("probe", {}).get("folds", 4)
    lam = cfg.get("probe", {}).get("lambda")
    if "speaker_folds" in cfg:
        assignment = probes.FoldAssignment(
            folds=folds, speaker_to_fold=cfg["speaker_folds"])
    else:
        by_accent = {}
        for u in man.utterances:
            by_accent.setdefault(u.accent, set()).add(u.speaker)
        assignment = probes.FoldAssignment.by_accent(
            {a: sorted(s) for a, s in by_accent.items()}, folds=folds)
    results = []
    for layer in range(man.num_layers):
        path = os.path.join(root, "tables", "word_L%d.csv" % layer)
        if not os.path.exists(path):
            raise dumpio.ValidationError(
                "missing pooled table %s; run `layerprobe pool` first"
                % path)
        table = pooling.SegmentTable.from_csv(path)
        for target in ("prominence", "boundary"):
            results.append(probes.grouped_cv(table, target, assignment,
                                             lam=lam))
    reports = os.path.join(root, "reports")
    probes.write_results_csv(results, _prepare_out(
        os.path.join(reports, "probe.csv"), no_overwrite))
    with open(_prepare_out(os.path.join(reports, "probe_plot.csv"),
                           no_overwrite), "w", encoding="utf-8") as f:
        f.write("model_tag,target,accent,layer,mse\n")
        for r in results:
            f.write("%s,%s,all,%d,%s\n"
                    % (cfg["model_tag"], r.target, r.layer,
                       repr(float(r.overall_mse))))
            for accent, m in sorted(r.per_accent_mse.items()):
                f.write("%s,%s,%s,%d,%s\n"
                        % (cfg["model_tag"], r.target, accent, r.layer,
                           repr(float(m))))
    _echo_config(cfg, root, "probe", {"num_results": len(results)})
    return results


def cmd_prosody_label(cfg, no_overwrite=False):
    root = _root(cfg)
    man = dumpio.read_manifest(os.path.join(root, "manifest"))
    opts = cfg.get("prosody", {})
    weights = tuple(opts.get("weights", (1/3, 1/3, 1/3)))
    scales_s = tuple(opts.get("scales_s", prosody.DEFAULT_SCALES_S))
    records = []
    for meta in man.utterances:
        if meta.track_path is None:
            log.warning("utt %s has no prosody track; skipped", meta.utt_id)
            continue
        track = dumpio.read_track(os.path.join(root, meta.track_path),
                                  expected_frames=meta.num_frames)
        _, word = dumpio.read_alignment(
            os.path.join(root, meta.alignment_path))
        records.extend(prosody.label_utterance(
            track, word, man.frame_hop_s, utt_id=meta.utt_id,
            weights=weights, scales_s=scales_s,
            prominence_band_s=tuple(opts.get("prominence_band_s",
                                             prosody.PROMINENCE_BAND_S)),
            boundary_band_s=tuple(opts.get("boundary_band_s",
                                           prosody.BOUNDARY_BAND_S))))
    out = _prepare_out(os.path.join(root, "reports", "labels.tsv"),
                       no_overwrite)
    prosody.write_labels(records, out)
    _echo_config(cfg, root, "prosody-label", {"num_words": len(records)})
    return records


def cmd_perturb(cfg, in_dir, out_dir, no_overwrite=False):
    opts = cfg.get("perturb", {})
    config = perturb.PerturbConfig(
        beta_low=opts.get("beta_low", 1.0),
        beta_high=opts.get("beta_high", 1.4),
        flip_prob=opts.get("flip_prob", 0.5),
        apply_threshold=opts.get("apply_threshold", 0.25),
        eq_bands=opts.get("eq_bands", 8),
        eq_gain_db=opts.get("eq_gain_db", 6.0),
        seed=sub_seed(cfg["seed"], "perturb"))
    os.makedirs(out_dir, exist_ok=True)
    sidecar = _prepare_out(os.path.join(out_dir, "draws.tsv"),
                           no_overwrite)
    rows = []
    for path in sorted(glob.glob(os.path.join(in_dir, "*.wav"))):
        name = os.path.basename(path)
        wave = perturb.read_wav(path)
        rng = perturb.rng_for_file(config.seed, name)
        out_wave, d = perturb.perturb_waveform(wave, config, rng)
        perturb.write_wav(out_wave,
                          _prepare_out(os.path.join(out_dir, name),
                                       no_overwrite))
        rows.append((name, d))
    with open(sidecar, "w", encoding="utf-8") as f:
        f.write("file\tapplied\tbeta1\tbeta2\teq_mean_db\n")
        for name, d in rows:
            f.write("%s\t%d\t%s\t%s\t%s\n"
                    % (name, int(d.applied), repr(d.beta1), repr(d.beta2),
                       repr(float(np.mean(d.eq_curve)))))
    return rows


def cmd_embed(cfg, phoneme, layer, no_overwrite=False):
    root = _root(cfg)
    opts = cfg.get("embed", {})
    path = os.path.join(root, "tables", "phone_L%d.csv" % layer)
    if not os.path.exists(path):
        raise dumpio.ValidationError("missing pooled table %s" % path)
    table = pooling.SegmentTable.from_csv(path)
    keep = [i for i, lab in enumerate(table.labels) if lab == phoneme]
    sub = table.take(keep)
    config = embed.EmbedConfig(
        perplexity=opts.get("perplexity", 30.0),
        iterations=opts.get("iterations", 1000),
        early_exaggeration=opts.get("early_exaggeration", 12.0),
        learning_rate=opts.get("learning_rate", 200.0),
        seed=sub_seed(cfg["seed"], "embed"))
    out = _prepare_out(
        os.path.join(root, "reports",
                     "tsne_%s_L%d.csv" % (phoneme, layer)), no_overwrite)
    if not keep:
        log.warning("no segments for phoneme %r on layer %d", phoneme,
                    layer)
        result = embed.EmbedResult(points=np.zeros((0, 2)), final_kl=0.0,
                                   kl_trace=np.zeros(0))
        embed.export_points(result, out)
        return result
    meta = [(sub.accents[i], sub.speakers[i], sub.labels[i],
             str(sub.layer)) for i in range(len(sub))]
    result = embed.tsne(sub.X, config, metadata=meta)
    embed.export_points(result, out)
    _echo_config(cfg, root, "embed",
                 {"phoneme": phoneme, "layer": layer, "n": len(sub)})
    return result


def cmd_report(roots, out_path):
    """Concatenate plot-data files from several dataset roots."""
    with open(out_path, "w", encoding="utf-8") as f:
        wrote_head = False
        for root in roots:
            for name in ("cca_plot.csv", "probe_plot.csv"):
                path = os.path.join(root, "reports", name)
                if not os.path.exists(path):
                    continue
                with open(path, "r", encoding="utf-8") as g:
                    head = g.readline()
                    if not wrote_head:
                        f.write("kind," + head)
                        wrote_head = True
                    kind = name.split("_")[0]
                    for line in g:
                        f.write(kind + "," + line)


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="layerprobe",
        description="layer-wise speech representation probing pipeline")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker cap (results are identical for any value)")
    p.add_argument("--no-overwrite", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    for name in ("pool", "cca", "probe", "prosody-label"):
        sp = sub.add_parser(name)
        sp.add_argument("--dataset-root")
    sp = sub.add_parser("perturb")
    sp.add_argument("--in-dir", required=True)
    sp.add_argument("--out-dir", required=True)
    for flag in ("--beta-low", "--beta-high", "--flip-prob",
                 "--apply-threshold", "--eq-gain-db"):
        sp.add_argument(flag, type=float, default=None)
    sp.add_argument("--eq-bands", type=int, default=None)
    sp = sub.add_parser("embed")
    sp.add_argument("--dataset-root")
    sp.add_argument("--phoneme", required=True)
    sp.add_argument("--layer", type=int, required=True)
    sp.add_argument("--model-tag", default=None)
    sp = sub.add_parser("report")
    sp.add_argument("--roots", nargs="+", required=True)
    sp.add_argument("--out", required=True)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        if args.command == "pool":
            cmd_pool(cfg, no_overwrite=args.no_overwrite)
        elif args.command == "cca":
            cmd_cca(cfg, no_overwrite=args.no_overwrite)
        elif args.command == "probe":
            cmd_probe(cfg, no_overwrite=args.no_overwrite)
        elif args.command == "prosody-label":
            cmd_prosody_label(cfg, no_overwrite=args.no_overwrite)
        elif args.command == "perturb":
            over = {k: getattr(args, k) for k in
                    ("beta_low", "beta_high", "flip_prob",
                     "apply_threshold", "eq_bands", "eq_gain_db")
                    if getattr(args, k) is not None}
            cfg.setdefault("perturb", {}).update(over)
            cmd_perturb(cfg, args.in_dir, args.out_dir,
                        no_overwrite=args.no_overwrite)
        elif args.command == "embed":
            if args.model_tag:
                cfg["model_tag"] = args.model_tag
            cmd_embed(cfg, args.phoneme, args.layer,
                      no_overwrite=args.no_overwrite)
        elif args.command == "report":
            cmd_report(args.roots, args.out)
    except (dumpio.ValidationError, ValueError) as e:
        log.error("%s", e)
        return 2
    except OSError as e:
        log.error("I/O failure: %s", e)
        return 3
    except (FloatingPointError, np.linalg.LinAlgError) as e:
        log.error("numerical failure: %s", e)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
