import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from bezseg.codec import (
    GridSpec,
    decode_junctions,
    decode_lines,
    encode_junctions,
    encode_lines,
    nms,
)
from bezseg.validation import InputValidationError

from oracles import nms_reference

SPEC = GridSpec(512, 512, 128, 128)


def distinct_bin_points(rng, spec, count):
    """Random positions in pairwise NMS-separated bins.

    Equal-confidence peaks in adjacent bins tie under non-maximum
    suppression and one would be dropped, so the bins are kept at Chebyshev
    distance >= 2 of each other.
    """
    taken = set()
    out = []
    while len(out) < count:
        p = rng.uniform(0, [spec.image_w - 1e-6, spec.image_h - 1e-6])
        b = (int(p[0] // spec.sx), int(p[1] // spec.sy))
        if any(max(abs(b[0] - t[0]), abs(b[1] - t[1])) < 2 for t in taken):
            continue
        taken.add(b)
        out.append(p)
    return np.array(out)


class TestGridSpec:
    def test_divisibility_enforced(self):
        with pytest.raises(InputValidationError):
            GridSpec(500, 512, 128, 128)

    def test_scale_factors(self):
        assert SPEC.sx == 4.0 and SPEC.sy == 4.0

    def test_panorama_shape_accepted(self):
        spec = GridSpec(1024, 512, 256, 128)
        assert spec.sx == 4.0 and spec.sy == 4.0


class TestEncodeJunctions:
    def test_bin_center_gives_zero_offset(self):
        spec = GridSpec(16, 16, 4, 4)
        maps = encode_junctions([(6.0, 10.0)], spec)
        assert maps.confidence[2, 1] == 1.0
        assert np.allclose(maps.offsets[2, 1], (0.0, 0.0))
        assert maps.confidence.sum() == 1.0

    def test_hand_offset_case(self):
        spec = GridSpec(16, 16, 4, 4)
        maps = encode_junctions([(5.0, 9.0)], spec)
        # bin (1, 2) centered at (6, 10): offset = (center - p) / 4
        assert np.allclose(maps.offsets[2, 1], (0.25, 0.25))

    def test_empty_input(self):
        maps = encode_junctions([], SPEC)
        assert maps.confidence.sum() == 0
        assert np.all(maps.offsets == 0)

    def test_collision_keeps_first(self):
        spec = GridSpec(16, 16, 4, 4)
        maps = encode_junctions([(5.0, 9.0), (6.5, 10.5)], spec)
        assert maps.collisions == 1
        assert np.allclose(maps.offsets[2, 1], (0.25, 0.25))

    def test_rejects_out_of_bounds(self):
        with pytest.raises(InputValidationError):
            encode_junctions([(600.0, 10.0)], SPEC)

    def test_offsets_bounded_by_half_bin(self, rng):
        pts = rng.uniform(0, 511.9, size=(200, 2))
        maps = encode_junctions(pts, SPEC)
        assert np.abs(maps.offsets).max() <= 0.5 + 1e-12

    def test_offset_zero_where_confidence_zero(self, rng):
        pts = rng.uniform(0, 511.9, size=(30, 2))
        maps = encode_junctions(pts, SPEC)
        assert np.all(maps.offsets[maps.confidence == 0.0] == 0.0)


class TestEncodeLines:
    def test_horizontal_segment_midpoint_center(self):
        maps = encode_lines([np.array([(100.0, 200.0), (300.0, 200.0)])], SPEC, 1)
        by, bx = np.argwhere(maps.center_confidence == 1.0)[0]
        assert (bx, by) == (50, 50)  # midpoint (200, 200) in 4 px bins
        rel = maps.eq_offsets[by, bx].reshape(-1, 2)
        assert np.allclose(rel, [(-100.0, 0.0), (100.0, 0.0)])

    def test_even_order_stores_2n_scalars(self):
        lines = [np.array([(10.0, 10.0), (100.0, 50.0), (200.0, 10.0)])]
        maps = encode_lines(lines, SPEC, 2)
        assert maps.eq_offsets.shape == (128, 128, 4)
        assert maps.stored_offsets == 2

    def test_odd_order_stores_all(self):
        lines = [np.array([(10.0, 10.0), (80.0, 60.0), (160.0, 70.0), (240.0, 10.0)])]
        maps = encode_lines(lines, SPEC, 3)
        assert maps.eq_offsets.shape == (128, 128, 8)

    def test_round_trip_single_line(self):
        line = np.array([(12.5, 30.0), (101.0, 80.0), (205.5, 40.0)])
        maps = encode_lines([line], SPEC, 2)
        out = decode_lines(maps, SPEC, top_k=10, min_conf=0.5)
        assert len(out) == 1
        assert np.abs(out[0].points - line).max() < 1e-6

    def test_order_mismatch_rejected(self):
        with pytest.raises(InputValidationError):
            encode_lines([np.zeros((2, 2)) + 10], SPEC, 2)

    def test_center_collision_counted(self):
        a = np.array([(100.0, 100.0), (200.0, 200.0)])
        b = a + 0.5  # same center bin
        maps = encode_lines([a, b], SPEC, 1)
        assert maps.collisions == 1


class TestNms:
    def test_isolated_peak_unchanged(self):
        conf = np.zeros((9, 9))
        conf[4, 4] = 0.7
        assert np.array_equal(nms(conf), conf)

    def test_uniform_map_keeps_origin_only(self):
        conf = np.full((6, 6), 0.3)
        out = nms(conf)
        expected = np.zeros((6, 6))
        expected[0, 0] = 0.3
        assert np.array_equal(out, expected)

    def test_matches_brute_force(self, rng):
        for _ in range(100):
            conf = rng.random((12, 14)).round(1)  # rounding forces ties
            window = rng.choice([3, 5])
            assert np.array_equal(nms(conf, window), nms_reference(conf, window))

    @given(
        hnp.arrays(
            np.float64,
            hnp.array_shapes(min_dims=2, max_dims=2, min_side=3, max_side=10),
            elements=st.floats(0, 1, allow_nan=False).map(lambda v: round(v, 1)),
        )
    )
    @settings(max_examples=40, deadline=None)
    def test_idempotent(self, conf):
        once = nms(conf)
        assert np.array_equal(nms(once), once)

    def test_rejects_even_window(self):
        with pytest.raises(InputValidationError):
            nms(np.zeros((4, 4)), window=4)


class TestDecodeJunctions:
    def test_encode_decode_exact(self, rng):
        pts = distinct_bin_points(rng, SPEC, 40)
        maps = encode_junctions(pts, SPEC)
        out = decode_junctions(maps, SPEC, top_k=100, min_conf=0.5)
        assert len(out) == 40
        got = np.array(sorted((j.position[0], j.position[1]) for j in out))
        want = np.array(sorted(map(tuple, pts)))
        assert np.abs(got - want).max() < 1e-6

    def test_min_conf_above_one_gives_empty(self, rng):
        maps = encode_junctions(distinct_bin_points(rng, SPEC, 5), SPEC)
        assert decode_junctions(maps, SPEC, top_k=10, min_conf=1.1) == []

    def test_top_one_takes_higher_peak(self):
        maps = encode_junctions([(10.0, 10.0), (100.0, 100.0)], SPEC)
        maps.confidence[maps.confidence == 1.0] = 0.0
        maps.confidence[2, 2] = 0.4
        maps.confidence[25, 25] = 0.9
        out = decode_junctions(maps, SPEC, top_k=1, min_conf=0.1)
        assert len(out) == 1
        assert out[0].confidence == pytest.approx(0.9)

    def test_positions_within_bounds(self, rng):
        pts = distinct_bin_points(rng, SPEC, 60)
        maps = encode_junctions(pts, SPEC)
        for j in decode_junctions(maps, SPEC, top_k=100, min_conf=0.5):
            assert 0 <= j.position[0] <= SPEC.image_w
            assert 0 <= j.position[1] <= SPEC.image_h


class TestDecodeLines:
    def test_round_trip_many(self, rng):
        centers = distinct_bin_points(rng, SPEC, 15)
        lines = []
        for c in centers:
            offs = rng.uniform(-40, 40, size=(3, 2))
            offs[1] = 0.0
            lines.append(np.clip(c + offs, 0, 511.9))
        # rebuild so the exact middle point is the parameter-space center
        lines = [np.stack([l[0], l[1], l[2]]) for l in lines]
        maps = encode_lines(lines, SPEC, 2)
        out = decode_lines(maps, SPEC, top_k=50, min_conf=0.5)
        assert len(out) == len(lines)
        got = sorted(out, key=lambda p: (p.points[0][0], p.points[0][1]))
        want = sorted(lines, key=lambda l: (l[0][0], l[0][1]))
        for g, w in zip(got, want):
            assert np.abs(g.points - w).max() < 1e-6

    def test_zero_maps_empty(self):
        maps = encode_lines([], SPEC, 2)
        assert decode_lines(maps, SPEC) == []

    def test_shared_center_bin_single_recovery(self):
        a = np.array([(100.0, 100.0), (200.0, 200.0)])
        b = a + 0.25
        maps = encode_lines([a, b], SPEC, 1)
        out = decode_lines(maps, SPEC, top_k=10, min_conf=0.5)
        assert maps.collisions == 1
        assert len(out) == 1
        assert np.abs(out[0].points - a).max() < 1e-6
