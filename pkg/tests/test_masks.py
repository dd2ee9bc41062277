from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from segrank.errors import MaskDecodeError, MaskFormatError, SegrankError
from segrank.masks import (
    CaseRecord,
    LabelMask,
    binarize,
    boundary,
    dump_mask,
    instances,
    load_mask,
    read_mask,
    split_components,
)

from _oracles import boundary_oracle, pixel_set, random_label_mask

label_grids = arrays(
    np.uint16,
    st.tuples(st.integers(1, 12), st.integers(1, 12)),
    elements=st.sampled_from([0, 0, 0, 1, 2, 5, 300, 65535]),
)


def _png(arr) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


class TestLabelMask:
    def test_rejects_empty_dimensions(self):
        with pytest.raises(SegrankError):
            LabelMask(np.zeros((0, 3)))

    def test_rejects_ids_above_16_bits(self):
        with pytest.raises(MaskFormatError):
            LabelMask(np.array([[70000]]))

    def test_rejects_negative(self):
        with pytest.raises(SegrankError):
            LabelMask(np.array([[-1, 0]]))

    def test_immutable(self):
        m = LabelMask(np.eye(3, dtype=int))
        with pytest.raises(ValueError):
            m.labels[0, 0] = 5

    def test_shape_accessors(self):
        m = LabelMask(np.zeros((4, 7), dtype=int))
        assert (m.height, m.width, m.shape) == (4, 7, (4, 7))


class TestLoad:
    def test_all_zero_grid(self):
        m = load_mask(b"4 4\n" + b"0 0 0 0\n" * 4)
        assert m.shape == (4, 4)
        assert not m.foreground().any()

    def test_grid_with_two_instances(self):
        m = load_mask(b"2 3\n0 1 1\n2 2 0\n", format="plain-grid-text")
        assert [v.label for v in instances(m)] == [1, 2]

    def test_challenge_resolution_image(self):
        arr = np.zeros((540, 960), dtype=np.uint8)
        arr[100:200, 300:500] = 1
        m = load_mask(_png(arr))
        assert (m.width, m.height) == (960, 540)
        assert m.label_ids() == [1]

    def test_sixteen_bit_ids_survive(self):
        arr = np.array([[0, 65535], [300, 1]], dtype=np.uint16)
        m = load_mask(dump_mask(arr))
        assert np.array_equal(m.labels, arr)

    def test_pixel_values_are_not_remapped(self):
        arr = np.array([[0, 7], [200, 7]], dtype=np.uint8)
        assert np.array_equal(load_mask(_png(arr)).labels, arr)

    def test_rgb_is_format_error(self):
        arr = np.zeros((4, 4, 3), dtype=np.uint8)
        with pytest.raises(MaskFormatError):
            load_mask(_png(arr))

    @pytest.mark.parametrize("data", [b"\x89PNG\r\n\x1a\ngarbage", b"2 2\n0 1\n", b"2 2\n0 x\n1 1\n", b""])
    def test_malformed_is_decode_error(self, data):
        with pytest.raises(MaskDecodeError):
            load_mask(data)

    def test_file_object_source(self):
        m = load_mask(io.BytesIO(b"1 2\n3 0\n"))
        assert m.label_ids() == [3]

    def test_read_mask_by_suffix(self, tmp_path):
        p = tmp_path / "m.txt"
        p.write_text("1 3\n0 4 4\n")
        assert read_mask(p).label_ids() == [4]

    @settings(max_examples=60, deadline=None)
    @given(label_grids, st.sampled_from(["grayscale-image", "plain-grid-text"]))
    def test_roundtrip_is_lossless(self, grid, fmt):
        m = LabelMask(grid)
        again = load_mask(dump_mask(m, fmt))
        assert again == m


class TestInstances:
    def test_background_only(self):
        assert instances(np.zeros((3, 3))) == []

    def test_ascending_labels(self):
        arr = np.zeros((4, 4), dtype=np.uint16)
        arr[0, 0], arr[3, 3] = 7, 3
        assert [v.label for v in instances(arr)] == [3, 7]

    def test_split_label_is_one_instance(self):
        arr = np.zeros((5, 5), dtype=np.uint16)
        arr[0, 0] = arr[4, 4] = 2
        (view,) = instances(arr)
        assert view.pixels == {(0, 0), (4, 4)}

    def test_split_components_is_explicit(self):
        arr = np.zeros((5, 5), dtype=np.uint16)
        arr[0, 0] = arr[4, 4] = 2
        assert len(instances(split_components(arr))) == 2

    @settings(max_examples=80, deadline=None)
    @given(label_grids)
    def test_views_partition_foreground(self, grid):
        views = instances(grid)
        union = set()
        for v in views:
            assert v.pixels
            assert not (union & v.pixels)
            union |= v.pixels
        assert union == pixel_set(grid != 0)

    @settings(max_examples=80, deadline=None)
    @given(label_grids)
    def test_binarize_leaves_at_most_one_instance(self, grid):
        b = binarize(grid)
        assert len(instances(b)) <= 1
        assert np.array_equal(b.labels, (grid != 0).astype(np.uint16))


class TestBinarize:
    def test_high_label(self):
        assert binarize(np.array([[0, 65535]])).labels.tolist() == [[0, 1]]

    def test_all_zero(self):
        assert not binarize(np.zeros((2, 2))).labels.any()


class TestBoundary:
    def test_single_pixel(self, backend):
        arr = np.zeros((5, 5))
        arr[2, 2] = 1
        assert boundary(arr) == {(2, 2)}

    def test_square_perimeter(self, backend):
        arr = np.zeros((10, 10))
        arr[3:7, 3:7] = 1
        b = boundary(arr)
        assert len(b) == 12
        assert b == boundary_oracle(arr)

    def test_full_frame_uses_border(self, backend):
        arr = np.ones((6, 8))
        assert boundary(arr) == boundary_oracle(arr)
        assert len(boundary(arr)) == 2 * 6 + 2 * 8 - 4

    def test_empty(self, backend):
        assert boundary(np.zeros((3, 3))) == frozenset()

    def test_instance_view(self, backend):
        arr = np.zeros((6, 6), dtype=np.uint16)
        arr[1:5, 1:5] = 4
        (view,) = instances(arr)
        assert boundary(view) == boundary_oracle(arr == 4)

    def test_random_against_scan(self, backend):
        rng = np.random.default_rng(3)
        for _ in range(40):
            m = random_label_mask(rng, (20, 24)) != 0
            assert boundary(m) == boundary_oracle(m)

    @settings(max_examples=60, deadline=None)
    @given(label_grids)
    def test_subset_of_pixels(self, grid):
        for v in instances(grid):
            assert boundary(v) <= v.pixels


class TestCaseRecord:
    def test_stage_range(self):
        with pytest.raises(SegrankError):
            CaseRecord("c1", stage=4)

    def test_negative_count(self):
        with pytest.raises(SegrankError):
            CaseRecord("c1", stage=1, instrument_count=-1)
