import itertools
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from annofuse.masking import (ExportConfig, MaskingError, apply_patches, export_labels,
                              format_label, make_patches, parse_label, square_box)
from annofuse.raster import RasterError, read_raster, write_raster

W, H = 1280, 720


def pt(u, v, image="im"):
    return SimpleNamespace(u=u, v=v, image_id=image)


def test_patch_centre_and_corner():
    p, = make_patches([pt(640, 360)], W, H, 250)
    assert (p.left, p.top, p.right, p.bottom) == (515, 235, 765, 485)
    p, = make_patches([pt(10, 10)], W, H, 250)
    assert (p.left, p.top, p.right, p.bottom) == (0, 0, 135, 135)


def test_patch_count_and_rejection():
    assert len(make_patches([pt(100, 100), pt(500, 300), pt(1200, 700)], W, H)) == 3
    with pytest.raises(MaskingError):
        make_patches([pt(W, 10)], W, H)


@given(st.floats(0, W, exclude_max=True), st.floats(0, H, exclude_max=True),
       st.floats(2, 400))
def test_point_inside_its_patch(u, v, side):
    p, = make_patches([pt(u, v)], W, H, side)
    assert p.left <= u <= p.right and p.top <= v <= p.bottom
    assert 0 <= p.left < p.right <= W and 0 <= p.top < p.bottom <= H


def rand_raster(seed, w=64, h=48, channels=3):
    rng = np.random.default_rng(seed)
    shape = (h, w, channels) if channels else (h, w)
    return rng.integers(1, 256, size=shape, dtype=np.uint8)


def test_apply_identity_and_saturation():
    img = rand_raster(0)
    assert np.array_equal(apply_patches(img, []), img)
    full = make_patches([pt(32, 24)], 64, 48, 500)
    assert not apply_patches(img, full).any()


def pixel_oracle(img, patches):
    out = img.copy()
    for y in range(img.shape[0]):
        for x in range(img.shape[1]):
            if any(p.left <= x < p.right and p.top <= y < p.bottom for p in patches):
                out[y, x] = 0
    return out


@given(st.lists(st.tuples(st.floats(0, 63.9), st.floats(0, 47.9), st.floats(1, 40)), max_size=4),
       st.integers(0, 3))
def test_apply_matches_pixel_oracle(specs, seed):
    img = rand_raster(seed)
    patches = [make_patches([pt(u, v)], 64, 48, s)[0] for u, v, s in specs]
    out = apply_patches(img, patches)
    assert np.array_equal(out, pixel_oracle(img, patches))
    assert np.array_equal(apply_patches(out, patches), out)
    for perm in itertools.islice(itertools.permutations(patches), 6):
        assert np.array_equal(apply_patches(img, list(perm)), out)


def test_apply_dimension_mismatch():
    img = rand_raster(1)
    with pytest.raises(MaskingError):
        apply_patches(img, [], width=65, height=48)


@pytest.mark.parametrize("channels", [0, 3])
def test_ppm_round_trip(tmp_path, channels):
    img = rand_raster(2, channels=channels)
    path = tmp_path / ("a.ppm" if channels else "a.pgm")
    write_raster(path, img)
    assert np.array_equal(read_raster(path), img)


def test_png_round_trip(tmp_path):
    img = rand_raster(3)
    write_raster(tmp_path / "a.png", img)
    assert np.array_equal(read_raster(tmp_path / "a.png"), img)


def test_netpbm_comment_and_bad_header(tmp_path):
    body = bytes(range(6))
    (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n3 2\n255\n" + body)
    assert read_raster(tmp_path / "c.pgm").tolist() == [[0, 1, 2], [3, 4, 5]]
    (tmp_path / "bad.pgm").write_bytes(b"P5\n3 2\n65535\n" + body)
    with pytest.raises(RasterError):
        read_raster(tmp_path / "bad.pgm")


def test_export_examples():
    text = export_labels([pt(640, 360)], W, H, ExportConfig(decimals=6))
    assert text == "0 0.500000 0.500000 0.195312 0.347222\n"
    text = export_labels([pt(0, 360)], W, H, ExportConfig(decimals=6))
    assert text == "0 0.048828 0.500000 0.097656 0.347222\n"
    assert export_labels([], W, H) == ""


def test_export_class_id_and_side():
    line = export_labels([pt(640, 360)], W, H, ExportConfig(box_side=100, class_id=3))
    box = parse_label(line, W, H)
    assert box.class_id == 3
    assert box.w == pytest.approx(100, abs=1e-4)


@given(st.floats(0, W, exclude_max=True), st.floats(0, H, exclude_max=True),
       st.floats(1, 600))
def test_export_round_trip_default_precision(u, v, side):
    box = square_box(u, v, side, W, H)
    back = parse_label(format_label(box, W, H), W, H)
    for a, b in [(box.left, back.left), (box.right, back.right),
                 (box.top, back.top), (box.bottom, back.bottom)]:
        assert abs(a - b) <= 1e-4


def test_square_box_clipping():
    box = square_box(10, 360, 250, W, H)
    assert (box.left, box.right, box.top, box.bottom) == (0, 135, 235, 485)
