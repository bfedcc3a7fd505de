"""Backend agreement: the compiled kernels must match the pure-Python ones
exactly for integer kernels and to float rounding for the rest."""

import numpy as np
import pytest

from strokeseg._kernels import _fallback, available_backends

BACKENDS = available_backends()
needs_native = pytest.mark.skipif("native" not in BACKENDS,
                                  reason="native kernels not built")


def random_polyline(rng, m):
    return rng.uniform(0, 450, size=(m, 2))


@needs_native
def test_resample_matches_fallback():
    native = BACKENDS["native"]
    rng = np.random.default_rng(1)
    for _ in range(50):
        pts = random_polyline(rng, int(rng.integers(2, 60)))
        a = _fallback.resample_polyline(pts, 128)
        b = native.resample_polyline(pts, 128)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)


@needs_native
def test_straw_matches_fallback():
    native = BACKENDS["native"]
    rng = np.random.default_rng(2)
    for _ in range(50):
        pts = _fallback.resample_polyline(random_polyline(rng, 30), 128)
        for w in (2, 4, 8, 16):
            a = _fallback.straw_values(pts, w)
            b = native.straw_values(pts, w)
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


@needs_native
def test_corner_walk_matches_fallback():
    native = BACKENDS["native"]
    rng = np.random.default_rng(3)
    for _ in range(200):
        values = np.clip(rng.normal(0.99, 0.05, size=128), 0.3, 1.0)
        a = _fallback.corner_walk(values, 0.995, 0.4, 0.6)
        b = native.corner_walk(values, 0.995, 0.4, 0.6)
        np.testing.assert_array_equal(a, b)


@needs_native
def test_rasterize_matches_fallback_exactly():
    native = BACKENDS["native"]
    rng = np.random.default_rng(4)
    for _ in range(30):
        ipts = rng.integers(-40, 90, size=(20, 2)).astype(np.int64)
        a = _fallback.rasterize_polyline(ipts, 64)
        b = native.rasterize_polyline(ipts, 64)
        np.testing.assert_array_equal(a, b)


@needs_native
def test_upscale_matches_fallback_exactly():
    native = BACKENDS["native"]
    rng = np.random.default_rng(5)
    for s in (32, 64, 128, 256):
        img = (rng.random((s, s)) < 0.1).astype(np.uint8) * 255
        np.testing.assert_array_equal(_fallback.upscale_nearest(img, 224),
                                      native.upscale_nearest(img, 224))


def test_rasterize_direction_independent():
    rng = np.random.default_rng(6)
    for impl in BACKENDS.values():
        for _ in range(20):
            ipts = rng.integers(0, 64, size=(8, 2)).astype(np.int64)
            fwd = impl.rasterize_polyline(ipts, 64)
            rev = impl.rasterize_polyline(ipts[::-1].copy(), 64)
            np.testing.assert_array_equal(fwd, rev)


def test_upscale_factor_seven_blocks():
    img = np.zeros((32, 32), dtype=np.uint8)
    img[16, 3] = 255
    out = _fallback.upscale_nearest(img, 224)
    # 224 = 7 * 32: every source pixel becomes an exact 7x7 block
    assert out.sum() == 255 * 49
    assert out[112:119, 21:28].min() == 255
