import struct

import numpy as np
import pytest

from layerprobe import dumpio


def tiny_manifest(tmp_path, **over):
    X = np.ones((12, 7, 768), dtype=np.float32)
    dumpio.write_features(dumpio.FeatureDump(X), tmp_path / "u0.lpd")
    with open(tmp_path / "u0.tsv", "w") as f:
        f.write("phone\tAA\t0.0\t0.1\n")
    fields = dict(format_version=1, frame_hop_s=0.02, num_layers=12,
                  dim=768, accents=["US"],
                  utterances=[dumpio.UtteranceMeta(
                      "u0", "spk", "US", 7, "u0.lpd", "u0.tsv")])
    fields.update(over)
    return dumpio.Manifest(**fields)


class TestManifest:
    def test_round_trip(self, tmp_path):
        man = tiny_manifest(tmp_path)
        dumpio.write_manifest(man, tmp_path / "manifest")
        back = dumpio.read_manifest(tmp_path / "manifest")
        assert back == man

    def test_duplicate_utt_id(self, tmp_path):
        man = tiny_manifest(tmp_path)
        man.utterances.append(man.utterances[0])
        dumpio.write_manifest(man, tmp_path / "manifest")
        with pytest.raises(dumpio.ValidationError, match="duplicate"):
            dumpio.read_manifest(tmp_path / "manifest")

    def test_zero_hop(self, tmp_path):
        man = tiny_manifest(tmp_path, frame_hop_s=0.0)
        dumpio.write_manifest(man, tmp_path / "manifest")
        with pytest.raises(dumpio.ValidationError, match="frame_hop_s"):
            dumpio.read_manifest(tmp_path / "manifest")

    def test_dangling_feature(self, tmp_path):
        man = tiny_manifest(tmp_path)
        (tmp_path / "u0.lpd").unlink()
        dumpio.write_manifest(man, tmp_path / "manifest")
        with pytest.raises(dumpio.ValidationError, match="dangling"):
            dumpio.read_manifest(tmp_path / "manifest")

    def test_header_disagreement(self, tmp_path):
        man = tiny_manifest(tmp_path, dim=99)
        dumpio.write_manifest(man, tmp_path / "manifest")
        with pytest.raises(dumpio.ValidationError, match="disagrees"):
            dumpio.read_manifest(tmp_path / "manifest")

    def test_unknown_accent(self, tmp_path):
        man = tiny_manifest(tmp_path)
        man.utterances[0] = dumpio.UtteranceMeta(
            "u0", "spk", "FR", 7, "u0.lpd", "u0.tsv")
        dumpio.write_manifest(man, tmp_path / "manifest")
        with pytest.raises(dumpio.ValidationError, match="accent"):
            dumpio.read_manifest(tmp_path / "manifest")


class TestFeatures:
    def test_constant_payload(self, tmp_path):
        path = tmp_path / "x.lpd"
        with open(path, "wb") as f:
            f.write(b"LPD1" + struct.pack("<III", 2, 3, 4))
            f.write(struct.pack("<24f", *([1.0] * 24)))
        dump = dumpio.read_features(path, expected=(2, 3, 4))
        assert dump.data.shape == (2, 3, 4)
        assert np.all(dump.data == 1.0)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "x.lpd"
        with open(path, "wb") as f:
            f.write(b"LPD1" + struct.pack("<III", 2, 3, 4))
            f.write(struct.pack("<23f", *([1.0] * 23)))
        with pytest.raises(dumpio.ValidationError, match="size mismatch"):
            dumpio.read_features(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.lpd"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(dumpio.ValidationError, match="magic"):
            dumpio.read_features(path)

    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((3, 5, 7)).astype(np.float32)
        dumpio.write_features(dumpio.FeatureDump(X), tmp_path / "x.lpd")
        back = dumpio.read_features(tmp_path / "x.lpd", expected=(3, 5, 7))
        assert back.data.tobytes() == X.tobytes()

    def test_known_byte_layout(self, tmp_path):
        # single value 0.5 -> IEEE-754 little-endian 00 00 00 3F
        dumpio.write_features(
            dumpio.FeatureDump(np.full((1, 1, 1), 0.5, dtype=np.float32)),
            tmp_path / "x.lpd")
        raw = (tmp_path / "x.lpd").read_bytes()
        assert raw == b"LPD1" + struct.pack("<III", 1, 1, 1) + \
            b"\x00\x00\x00\x3f"

    def test_empty_dim_rejected(self):
        with pytest.raises(dumpio.ValidationError, match="empty axis"):
            dumpio.FeatureDump(np.zeros((2, 3, 0), dtype=np.float32))

    def test_non_finite_rejected(self):
        X = np.zeros((1, 2, 2), dtype=np.float32)
        X[0, 0, 0] = np.nan
        with pytest.raises(dumpio.ValidationError, match="non-finite"):
            dumpio.FeatureDump(X)


class TestAlignment:
    def test_basic(self, tmp_path):
        path = tmp_path / "a.tsv"
        path.write_text("# comment\n"
                        "phone\tAA\t0.30\t0.60\n"
                        "word\tball\t0.25\t0.70\n")
        phone, word = dumpio.read_alignment(path)
        assert [s.label for s in phone.segments] == ["AA"]
        assert [s.label for s in word.segments] == ["ball"]
        assert word.segments[0].start_s == 0.25

    def test_missing_tier_empty(self, tmp_path):
        path = tmp_path / "a.tsv"
        path.write_text("phone\tAA\t0.0\t0.5\n")
        _, word = dumpio.read_alignment(path)
        assert word.segments == []

    def test_inverted_interval(self, tmp_path):
        path = tmp_path / "a.tsv"
        path.write_text("phone\tAA\t0.60\t0.30\n")
        with pytest.raises(dumpio.ValidationError, match="inverted"):
            dumpio.read_alignment(path)

    def test_overlap(self, tmp_path):
        path = tmp_path / "a.tsv"
        path.write_text("phone\tAA\t0.0\t0.5\nphone\tIY\t0.4\t0.8\n")
        with pytest.raises(dumpio.ValidationError, match="overlap"):
            dumpio.read_alignment(path)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "a.tsv"
        path.write_text("phone\tAA\t0.0\n")
        with pytest.raises(dumpio.ValidationError, match="4 tab-separated"):
            dumpio.read_alignment(path)

    def test_round_trip(self, tmp_path):
        phone = dumpio.AlignmentTier("phone", [
            dumpio.Segment("AA", 0.1, 0.32), dumpio.Segment("P", 0.32, 0.5)])
        word = dumpio.AlignmentTier("word", [dumpio.Segment("ball", 0.1, 0.5)])
        dumpio.write_alignment(phone, word, tmp_path / "a.tsv")
        p2, w2 = dumpio.read_alignment(tmp_path / "a.tsv")
        assert p2 == phone and w2 == word


class TestTrack:
    def test_basic(self, tmp_path):
        t = dumpio.ProsodyTrack(f0_hz=np.array([100.0, 0.0, 120.0]),
                                energy=np.array([1.0, 1.0, 1.0]))
        dumpio.write_track(t, tmp_path / "t.lpt")
        back = dumpio.read_track(tmp_path / "t.lpt", expected_frames=3)
        assert np.array_equal(back.f0_hz, t.f0_hz)
        assert np.array_equal(back.energy, t.energy)

    def test_length_mismatch(self, tmp_path):
        t = dumpio.ProsodyTrack(f0_hz=np.zeros(3), energy=np.zeros(3))
        dumpio.write_track(t, tmp_path / "t.lpt")
        with pytest.raises(dumpio.ValidationError, match="length"):
            dumpio.read_track(tmp_path / "t.lpt", expected_frames=4)

    def test_negative_f0(self):
        with pytest.raises(dumpio.ValidationError, match="negative f0"):
            dumpio.ProsodyTrack(f0_hz=np.array([-5.0]),
                                energy=np.array([1.0]))
