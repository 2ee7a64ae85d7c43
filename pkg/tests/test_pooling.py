import numpy as np
import pytest

from layerprobe import dumpio, pooling
from layerprobe.pooling import (SamplingPolicy, central_third,
                                sample_segments, segment_to_frames)

META = dumpio.UtteranceMeta("u0", "spk0", "US", 100, "f", "a")


def dump_of(data):
    return dumpio.FeatureDump(np.asarray(data, dtype=np.float32))


class TestSegmentToFrames:
    def test_enumerated_centers(self):
        # centers 0.31 .. 0.59 at hop 0.02 -> frames 15..29
        assert segment_to_frames(0.30, 0.60, 0.02, 100) == (15, 29)

    def test_single_frame(self):
        assert segment_to_frames(0.00, 0.02, 0.02, 100) == (0, 0)

    def test_empty_range(self):
        # center of frame 49 is 0.99 < 0.995
        assert segment_to_frames(0.995, 1.000, 0.02, 50) is None

    def test_clamped_to_num_frames(self):
        assert segment_to_frames(0.0, 10.0, 0.02, 5) == (0, 4)


class TestCentralThird:
    def test_fifteen_frames(self):
        assert central_third((15, 29)) == (20, 24)

    def test_two_frames_keeps_all(self):
        assert central_third((0, 1)) == (0, 1)

    def test_three_frames_middle(self):
        assert central_third((0, 2)) == (1, 1)

    def test_too_short(self):
        with pytest.raises(ValueError):
            central_third((5, 5))

    def test_length_band_and_containment(self):
        for n in range(2, 200):
            lo, hi = central_third((0, n - 1))
            assert 0 <= lo <= hi <= n - 1
            length = hi - lo + 1
            third = -(-n // 3)  # ceil
            assert third - 1 <= length <= third + 1


class TestPhonemePooling:
    def test_constant_dump(self):
        dump = dump_of(np.ones((2, 100, 4)))
        tier = dumpio.AlignmentTier("phone", [dumpio.Segment("AA", 0.3, 0.6)])
        out = pooling.pool_phoneme_segments(dump, tier, SamplingPolicy(),
                                            1, META, 0.02)
        assert len(out) == 1
        assert np.allclose(out[0].vector, 1.0)
        assert out[0].spec.pooled_frame_range == (20, 24)

    def test_short_segment_discarded(self):
        dump = dump_of(np.ones((1, 100, 4)))
        tier = dumpio.AlignmentTier("phone", [dumpio.Segment("AA", 0.0, 0.02)])
        out = pooling.pool_phoneme_segments(dump, tier, SamplingPolicy(),
                                            0, META, 0.02)
        assert out == []

    def test_central_third_mean(self):
        # 5-frame segment, frame f holds value f: offsets 1..3 -> mean 2
        data = np.zeros((1, 100, 1))
        data[0, :, 0] = np.arange(100)
        dump = dump_of(data)
        tier = dumpio.AlignmentTier("phone", [dumpio.Segment("AA", 0.0, 0.1)])
        out = pooling.pool_phoneme_segments(dump, tier, SamplingPolicy(),
                                            0, META, 0.02)
        assert out[0].spec.frame_range == (0, 4)
        assert out[0].spec.pooled_frame_range == (1, 3)
        assert out[0].vector[0] == pytest.approx(2.0, abs=1e-12)

    def test_layer_out_of_range(self):
        dump = dump_of(np.ones((2, 100, 4)))
        tier = dumpio.AlignmentTier("phone", [dumpio.Segment("AA", 0.3, 0.6)])
        with pytest.raises(ValueError, match="layer"):
            pooling.pool_phoneme_segments(dump, tier, SamplingPolicy(), 2,
                                          META, 0.02)

    def test_linearity_in_dump(self):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((1, 100, 4))
        tier = dumpio.AlignmentTier("phone", [dumpio.Segment("AA", 0.1, 0.5)])
        v1 = pooling.pool_phoneme_segments(dump_of(data), tier,
                                           SamplingPolicy(), 0, META,
                                           0.02)[0].vector
        v3 = pooling.pool_phoneme_segments(dump_of(3 * data), tier,
                                           SamplingPolicy(), 0, META,
                                           0.02)[0].vector
        assert np.allclose(v3, 3 * v1, atol=1e-6)


class TestWordPooling:
    def test_constant_dump(self):
        dump = dump_of(np.ones((1, 100, 4)))
        tier = dumpio.AlignmentTier("word", [dumpio.Segment("ball", 0.2, 0.4)])
        out = pooling.pool_word_segments(dump, tier, 0, META, 0.02)
        assert np.allclose(out[0].vector, 1.0)

    def test_full_interval_mean(self):
        # word spans frames 10..19, frame f holds value f -> mean 14.5
        data = np.zeros((1, 100, 2))
        data[0, :, :] = np.arange(100)[:, None]
        dump = dump_of(data)
        tier = dumpio.AlignmentTier("word", [dumpio.Segment("ball", 0.2, 0.4)])
        out = pooling.pool_word_segments(dump, tier, 0, META, 0.02)
        assert out[0].spec.frame_range == (10, 19)
        assert np.allclose(out[0].vector, 14.5, atol=1e-12)


def make_group(label, speaker, count, dim=3):
    segs = []
    for i in range(count):
        spec = pooling.SegmentSpec("u%03d" % i, "phone", label,
                                   0.1 * i, 0.1 * i + 0.08, (0, 3), (1, 2),
                                   i)
        segs.append(pooling.PooledSegment(spec, np.zeros(dim), speaker,
                                          "US"))
    return segs


class TestSampling:
    def test_undersized_group_kept(self):
        segs = make_group("AA", "s1", 40)
        out = sample_segments(segs, SamplingPolicy(seed=1))
        assert len(out) == 40

    def test_quota_and_determinism(self):
        segs = make_group("AA", "s1", 250)
        a = sample_segments(segs, SamplingPolicy(seed=7))
        b = sample_segments(segs, SamplingPolicy(seed=7))
        assert len(a) == 100
        assert a == b
        c = sample_segments(segs, SamplingPolicy(seed=8))
        assert a != c

    def test_output_order_sorted(self):
        segs = make_group("IY", "s2", 30) + make_group("AA", "s1", 30)
        out = sample_segments(segs, SamplingPolicy(seed=0))
        keys = [(s.speaker, s.spec.label, s.spec.utt_id, s.spec.start_s)
                for s in out]
        assert keys == sorted(keys)

    def test_input_order_irrelevant(self):
        segs = make_group("AA", "s1", 250)
        rev = list(reversed(segs))
        a = sample_segments(segs, SamplingPolicy(seed=3))
        b = sample_segments(rev, SamplingPolicy(seed=3))
        assert a == b


class TestSegmentTable:
    def test_build_and_round_trip(self, tmp_path):
        segs = make_group("AA", "s1", 5)
        table = pooling.build_segment_table(segs, layer=2)
        assert len(table) == 5 and table.dim == 3
        table.to_csv(tmp_path / "t.csv")
        back = pooling.SegmentTable.from_csv(tmp_path / "t.csv")
        assert back.layer == 2
        assert back.labels == table.labels
        assert np.array_equal(back.X, table.X)

    def test_targets_joined(self, tmp_path):
        segs = make_group("ball", "s1", 3)
        targets = {("u%03d" % i, i): (0.5 * i, 1.0 + i) for i in range(3)}
        table = pooling.build_segment_table(segs, layer=0, targets=targets)
        assert np.allclose(table.prominence, [0.0, 0.5, 1.0])
        table.to_csv(tmp_path / "t.csv")
        back = pooling.SegmentTable.from_csv(tmp_path / "t.csv")
        assert np.array_equal(back.boundary, table.boundary)

    def test_missing_target(self):
        segs = make_group("ball", "s1", 2)
        with pytest.raises(ValueError, match="u001"):
            pooling.build_segment_table(segs, layer=0,
                                        targets={("u000", 0): (0.0, 0.0)})

    def test_empty_table(self):
        table = pooling.build_segment_table([], layer=0)
        assert len(table) == 0
