"""Low-level feature maps for the saliency search, plus image utilities.

Frames are ``(H, W, 3)`` float arrays with RGB in ``[0, 1]``. The feature
stack is a ``(19, 200, 200)`` array laid out as::

    [SP1..SP12 oriented band-pass, SP13 high-pass residual, R, G, B, Y, I, SK]

where the oriented maps run scale-major (finest scale first), orientations
0, 45, 90, 135 degrees within each scale.
"""

import math
from functools import lru_cache

import numpy as np

from . import kernels
from .particle import AffineState, InvalidStateError, affine_matrices

FEATURE_SIDE = 200
N_FEATURES = 19
N_ORIENTATIONS = 4
N_SCALES = 3
FEATURE_NAMES = tuple(
    [f"sp_s{s}_o{o * 45}" for s in range(N_SCALES) for o in range(N_ORIENTATIONS)]
    + ["sp_highpass", "red", "green", "blue", "yellow", "intensity", "skin"]
)

SKIN_MEAN = (0.43, 0.31)
SKIN_STD = (0.08, 0.05)


def check_frame(frame):
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.shape[0] < 1 or frame.shape[1] < 1:
        raise ValueError(f"expected an (H, W, 3) RGB frame, got shape {frame.shape}")
    if frame.size and (frame.min() < 0.0 or frame.max() > 1.0):
        raise ValueError("RGB values must lie in [0, 1]")
    return frame


def to_gray(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    return img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114


def color_channels(frame):
    """Broadly tuned colour channels and intensity: ``(R, G, B, Y, I)``."""
    r, g, b = frame[..., 0], frame[..., 1], frame[..., 2]
    fr = r - (g + b) / 2.0
    fg = g - (r + b) / 2.0
    fb = b - (r + g) / 2.0
    fy = (r + g) / 2.0 - np.abs(r - g) / 2.0 - b
    fi = (r + g + b) / 3.0
    return fr, fg, fb, fy, fi


def skin_map(frame, mean=SKIN_MEAN, std=SKIN_STD):
    """Gaussian skin likelihood on normalised r-g chromaticity, in [0, 1].

    Black pixels have undefined chromaticity and are treated as gray (1/3, 1/3).
    """
    total = frame.sum(axis=-1)
    safe = np.where(total > 0, total, 1.0)
    rn = np.where(total > 0, frame[..., 0] / safe, 1.0 / 3.0)
    gn = np.where(total > 0, frame[..., 1] / safe, 1.0 / 3.0)
    z = ((rn - mean[0]) / std[0]) ** 2 + ((gn - mean[1]) / std[1]) ** 2
    return np.clip(np.exp(-0.5 * z), 0.0, 1.0)


# ---------------------------------------------------------------------------
# steerable pyramid (undecimated, built in the Fourier domain)

def _radial_pair(log_rad, pos):
    # raised-cosine transition one octave wide, ending at log2 radius ``pos``
    v = np.clip(log_rad - pos, -1.0, 0.0)
    hi = np.cos(0.5 * np.pi * v)
    lo = np.abs(np.sin(0.5 * np.pi * v))
    return hi, lo


@lru_cache(maxsize=8)
def steerable_filters(h, w):
    """Frequency-domain filters: 12 complex oriented bands and 1 high-pass.

    Radius is normalised so the Nyquist frequency is 1. The high-pass rolls
    on between radius 1/2 and 1; band ``s`` peaks at radius ``2**-(s+1)``.
    Angular part is the order-3 single-lobe steerable kernel, so each band
    response is analytic and its modulus is a local energy.
    """
    fy = np.fft.fftfreq(h)[:, None] * 2.0
    fx = np.fft.fftfreq(w)[None, :] * 2.0
    rad = np.sqrt(fx ** 2 + fy ** 2)
    rad[0, 0] = 1e-12
    log_rad = np.log2(rad)
    angle = np.arctan2(fy, fx)

    hi0, lo_acc = _radial_pair(log_rad, 0.0)
    hi0 = hi0.copy()
    hi0[0, 0] = 0.0
    order = N_ORIENTATIONS - 1
    const = (2.0 ** (2 * order)) * (math.factorial(order) ** 2) / (
        N_ORIENTATIONS * math.factorial(2 * order))
    bands = []
    for s in range(N_SCALES):
        hi, lo = _radial_pair(log_rad, -1.0 - s)
        radial = hi * lo_acc
        lo_acc = lo_acc * lo
        for o in range(N_ORIENTATIONS):
            d = np.mod(np.pi + angle - np.pi * o / N_ORIENTATIONS, 2 * np.pi) - np.pi
            ang = 2.0 * np.sqrt(const) * np.cos(d) ** order * (np.abs(d) < np.pi / 2)
            band = radial * ang
            band[0, 0] = 0.0
            bands.append(band)
    return np.stack(bands), hi0


def steerable_subbands(intensity):
    """13 subband magnitude maps of a 2-D intensity image (same size as input)."""
    intensity = np.asarray(intensity, dtype=np.float64)
    h, w = intensity.shape
    bands, hi0 = steerable_filters(h, w)
    freq = np.fft.fft2(intensity)
    oriented = np.abs(np.fft.ifft2(freq[None] * bands, axes=(-2, -1)))
    high = np.abs(np.fft.ifft2(freq * hi0).real)
    return np.concatenate([oriented, high[None]], axis=0)


# ---------------------------------------------------------------------------
# resampling

def resize_bilinear(img, out_h, out_w):
    """Bilinear resize with half-pixel centres and edge clamping."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    gx, gy = np.meshgrid(xs, ys)
    return kernels.sample_bilinear(img, gx, gy)


def minmax_normalize(m, eps=1e-10):
    """Rescale to [0, 1]; a map whose range is below ``eps`` (FFT round-off on
    a constant input, say) becomes all zeros."""
    lo, hi = m.min(), m.max()
    if hi - lo <= eps:
        return np.zeros_like(m)
    return (m - lo) / (hi - lo)


def build_feature_stack(frame, skin_mean=SKIN_MEAN, skin_std=SKIN_STD):
    """Resize to 200x200 and compute the 19 min-max normalised feature maps."""
    frame = check_frame(frame)
    small = np.clip(resize_bilinear(frame, FEATURE_SIDE, FEATURE_SIDE), 0.0, 1.0)
    fr, fg, fb, fy, fi = color_channels(small)
    maps = np.empty((N_FEATURES, FEATURE_SIDE, FEATURE_SIDE))
    maps[:13] = steerable_subbands(fi)
    maps[13:18] = np.stack([fr, fg, fb, fy, fi])
    maps[18] = skin_map(small, skin_mean, skin_std)
    for i in range(N_FEATURES):
        maps[i] = minmax_normalize(maps[i])
    return maps


def _crop_grid(out_side):
    t = (np.arange(out_side) + 0.5) / out_side - 0.5
    a, b = np.meshgrid(t, t)
    return a.ravel(), b.ravel()


def _snap(v, eps=1e-9):
    r = np.round(v)
    return np.where(np.abs(v - r) < eps, r, v)


def affine_crop_many(img, params, out_side):
    """Warp ``n`` states (``(n, 6)`` array) into ``out_side`` square patches.

    Returns ``(n, out_side, out_side)`` for gray input or
    ``(n, out_side, out_side, C)`` for multi-channel input.
    """
    if out_side < 1:
        raise ValueError("out_side must be >= 1")
    params = np.atleast_2d(np.asarray(params, dtype=np.float64))
    mats = affine_matrices(params)
    det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
    if not np.all(np.isfinite(params)) or np.any(np.abs(det) < 1e-12):
        raise InvalidStateError("degenerate affine state")
    a, b = _crop_grid(out_side)
    xs = params[:, 0:1] + mats[:, 0, 0:1] * a + mats[:, 0, 1:2] * b - 0.5
    ys = params[:, 1:2] + mats[:, 1, 0:1] * a + mats[:, 1, 1:2] * b - 0.5
    # round-off from the grid would otherwise blend in a neighbour at integer offsets
    xs = _snap(xs)
    ys = _snap(ys)
    out = kernels.sample_bilinear(img, xs, ys)
    n = params.shape[0]
    return out.reshape((n, out_side, out_side) + out.shape[2:])


def affine_crop(img, state, out_side):
    """Single-state version of :func:`affine_crop_many`."""
    if isinstance(state, AffineState):
        state = state.as_array()
    return affine_crop_many(img, state[None], out_side)[0]


# ---------------------------------------------------------------------------
# colour spaces

def rgb_to_hsv(rgb):
    """Hexcone HSV with all channels in [0, 1]; hue of gray pixels is 0."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    safe = np.where(c > 0, c, 1.0)
    h = np.zeros_like(v)
    rmax = (c > 0) & (v == r)
    gmax = (c > 0) & (v == g) & ~rmax
    bmax = (c > 0) & ~rmax & ~gmax
    h = np.where(rmax, np.mod((g - b) / safe, 6.0), h)
    h = np.where(gmax, (b - r) / safe + 2.0, h)
    h = np.where(bmax, (r - g) / safe + 4.0, h)
    return np.stack([h / 6.0, s, v], axis=-1)


def hsv_to_rgb(hsv):
    hsv = np.asarray(hsv, dtype=np.float64)
    h, s, v = hsv[..., 0] * 6.0, hsv[..., 1], hsv[..., 2]
    i = np.floor(h).astype(int) % 6
    f = h - np.floor(h)
    p = v * (1 - s)
    q = v * (1 - s * f)
    t = v * (1 - s * (1 - f))
    choices = [
        np.stack([v, t, p], -1), np.stack([q, v, p], -1), np.stack([p, v, t], -1),
        np.stack([p, q, v], -1), np.stack([t, p, v], -1), np.stack([v, p, q], -1),
    ]
    out = np.zeros(hsv.shape)
    for k, ch in enumerate(choices):
        out = np.where((i == k)[..., None], ch, out)
    return out
