import numpy as np
import pytest

from sht import kernels
from sht.features import (FEATURE_SIDE, N_FEATURES, SKIN_MEAN, SKIN_STD, affine_crop,
                          build_feature_stack, color_channels, hsv_to_rgb, resize_bilinear,
                          rgb_to_hsv, skin_map, steerable_subbands)
from sht.particle import AffineState, InvalidStateError


def test_color_channels_pure_red():
    fr, fg, fb, fy, fi = (float(c[0, 0]) for c in color_channels(np.array([[[1.0, 0.0, 0.0]]])))
    assert (fr, fg, fb, fy) == (1.0, -0.5, -0.5, 0.0)
    assert fi == pytest.approx(1 / 3)


def test_color_channels_gray():
    out = [float(c[0, 0]) for c in color_channels(np.full((1, 1, 3), 0.5))]
    assert out == [0.0, 0.0, 0.0, 0.0, 0.5]


def test_color_channels_match_scalar_loop(rng):
    frame = rng.random((7, 9, 3))
    maps = color_channels(frame)
    for i in range(7):
        for j in range(9):
            r, g, b = frame[i, j]
            ref = (r - (g + b) / 2, g - (r + b) / 2, b - (r + g) / 2,
                   (r + g) / 2 - abs(r - g) / 2 - b, (r + g + b) / 3)
            for m, v in zip(maps, ref):
                assert m[i, j] == pytest.approx(v, abs=1e-15)


def test_subbands_of_constant_are_zero():
    out = steerable_subbands(np.full((64, 64), 0.7))
    assert out.shape == (13, 64, 64)
    assert np.abs(out).max() < 1e-6


def _grating(n=128, period=8, vertical=True):
    x = np.arange(n)
    g = 0.5 + 0.5 * np.sin(2 * np.pi * x / period)
    return np.tile(g, (n, 1)) if vertical else np.tile(g[:, None], (1, n))


def test_vertical_grating_selects_horizontal_frequency_band():
    # vertical stripes vary along x: orientation 0 at the scale whose peak is
    # radius 2**-(s+1); period 8 -> radius 0.25 -> scale 1
    means = steerable_subbands(_grating())[:12].mean(axis=(1, 2))
    assert int(np.argmax(means)) == 1 * 4 + 0


def test_rotated_grating_swaps_orientations():
    a = steerable_subbands(_grating(vertical=True))[:12].mean(axis=(1, 2)).reshape(3, 4)
    b = steerable_subbands(_grating(vertical=False))[:12].mean(axis=(1, 2)).reshape(3, 4)
    for s in range(3):
        assert a[s, 0] == pytest.approx(b[s, 2], rel=0.05)
        assert a[s, 2] == pytest.approx(b[s, 0], rel=0.05)


def test_skin_map_mode_and_blue():
    r, g = SKIN_MEAN
    px = np.array([[[r, g, 1 - r - g]]])
    assert skin_map(px)[0, 0] == pytest.approx(1.0)
    assert skin_map(np.array([[[0.0, 0.0, 1.0]]]))[0, 0] < 0.05


def test_skin_map_gray_matches_formula():
    v = skin_map(np.full((1, 1, 3), 0.4))[0, 0]
    z = ((1 / 3 - SKIN_MEAN[0]) / SKIN_STD[0]) ** 2 + ((1 / 3 - SKIN_MEAN[1]) / SKIN_STD[1]) ** 2
    assert v == pytest.approx(np.exp(-0.5 * z), rel=1e-12)


def test_feature_stack_contract(rng):
    stack = build_feature_stack(rng.random((90, 120, 3)))
    assert stack.shape == (N_FEATURES, FEATURE_SIDE, FEATURE_SIDE)
    for m in stack:
        assert m.min() == 0.0 and m.max() == pytest.approx(1.0)


def test_feature_stack_white_frame():
    stack = build_feature_stack(np.ones((50, 60, 3)))
    assert np.all(stack[:13] == 0)
    assert np.all(stack[17] == 0)


def test_feature_stack_rejects_bad_frames():
    with pytest.raises(ValueError):
        build_feature_stack(np.ones((10, 10)))
    with pytest.raises(ValueError):
        build_feature_stack(np.full((10, 10, 3), 2.0))


def _resize_oracle(img, oh, ow):
    h, w = img.shape
    out = np.empty((oh, ow))
    for i in range(oh):
        for j in range(ow):
            y = min(max((i + 0.5) * h / oh - 0.5, 0), h - 1)
            x = min(max((j + 0.5) * w / ow - 0.5, 0), w - 1)
            y0, x0 = int(np.floor(y)), int(np.floor(x))
            y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
            fy, fx = y - y0, x - x0
            out[i, j] = ((1 - fy) * ((1 - fx) * img[y0, x0] + fx * img[y0, x1])
                         + fy * ((1 - fx) * img[y1, x0] + fx * img[y1, x1]))
    return out


def test_resize_400_to_200_matches_reference(rng):
    img = rng.random((400, 400))
    got = resize_bilinear(img, 200, 200)
    assert np.abs(got - _resize_oracle(img, 200, 200)).max() <= 1 / 255
    # at an exact factor of two each output pixel is the mean of a 2x2 block
    block = img.reshape(200, 2, 200, 2).mean(axis=(1, 3))
    assert np.abs(got - block).max() <= 1e-12


def test_resize_non_integer_factor(rng):
    img = rng.random((37, 53))
    assert np.allclose(resize_bilinear(img, 20, 31), _resize_oracle(img, 20, 31), atol=1e-12)


def test_crop_uniform_region():
    img = np.full((80, 80), 0.42)
    patch = affine_crop(img, AffineState(40, 40, 0.3, 0.5, 1.2, 0.05), 32)
    assert np.allclose(patch, 0.42, atol=1e-12)


def test_crop_integer_translation_is_exact(rng):
    img = rng.random((60, 70))
    # 32 wide box with top-left (11, 7) -> centre (27, 23)
    patch = affine_crop(img, AffineState(27.0, 23.0, 0.0, 1.0, 1.0, 0.0), 32)
    assert np.array_equal(patch, img[7:39, 11:43])


def test_crop_rotation_90_matches_rotated_image(rng):
    img = rng.random((64, 80))
    w = img.shape[1]
    rot = np.rot90(img)  # new (x', y') <-> old (W - y', x')
    cxp, cyp = 30.0, 34.0
    ref = affine_crop(rot, AffineState(cxp, cyp, 0.0, 0.5, 1.0, 0.0), 16)
    got = affine_crop(img, AffineState(w - cyp, cxp, np.pi / 2, 0.5, 1.0, 0.0), 16)
    assert np.abs(got - ref).max() <= 1 / 255


def test_crop_outside_reads_zero():
    img = np.ones((20, 20))
    patch = affine_crop(img, AffineState(-100, -100), 8)
    assert np.all(patch == 0)


def test_crop_rejects_degenerate_state():
    with pytest.raises(InvalidStateError):
        affine_crop(np.ones((10, 10)), np.array([5.0, 5.0, 0.0, 0.0, 1.0, 0.0]), 8)


def test_hsv_examples():
    assert np.allclose(rgb_to_hsv([1.0, 0.0, 0.0]), [0, 1, 1])
    assert np.allclose(rgb_to_hsv([0.5, 0.5, 0.5]), [0, 0, 0.5])
    assert np.allclose(rgb_to_hsv([0.0, 1.0, 0.0]), [1 / 3, 1, 1])


def test_hsv_matches_colorsys(rng):
    import colorsys

    px = rng.random((200, 3))
    got = rgb_to_hsv(px)
    ref = np.array([colorsys.rgb_to_hsv(*p) for p in px])
    assert np.allclose(got, ref, atol=1e-12)
    assert np.allclose(hsv_to_rgb(got), px, atol=1e-12)


@pytest.mark.parametrize("shape", [(13, 17), (13, 17, 3)])
def test_bilinear_backends_agree(rng, shape):
    img = rng.random(shape)
    xs = rng.uniform(-3, shape[1] + 2, (40, 5))
    ys = rng.uniform(-3, shape[0] + 2, (40, 5))
    a = kernels.sample_bilinear_numba(img, xs, ys)
    b = kernels.sample_bilinear_numpy(img, xs, ys)
    assert a.shape == b.shape
    assert np.allclose(a, b, atol=1e-14)
