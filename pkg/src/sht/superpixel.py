"""SLIC superpixels and the superpixel HSV histogram matcher."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .features import rgb_to_hsv

BIN_CENTERS = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
N_BINS = 15


def rgb_to_lab(rgb):
    """sRGB in [0, 1] -> CIELAB (D65)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    lin = np.where(rgb > 0.04045, ((rgb + 0.055) / 1.055) ** 2.4, rgb / 12.92)
    m = np.array([[0.412453, 0.357580, 0.180423],
                  [0.212671, 0.715160, 0.072169],
                  [0.019334, 0.119193, 0.950227]])
    xyz = lin @ m.T / np.array([0.950456, 1.0, 1.088754])
    f = np.where(xyz > 0.008856, np.cbrt(xyz), 7.787 * xyz + 16.0 / 116.0)
    l = np.where(xyz[..., 1] > 0.008856, 116.0 * np.cbrt(xyz[..., 1]) - 16.0, 903.3 * xyz[..., 1])
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([l, a, b], axis=-1)


@dataclass
class Segmentation:
    labels: np.ndarray     # (H, W) ints in [0, count)
    count: int
    hsv_means: np.ndarray  # (count, 3) per-superpixel mean H, S, V


def _grid(h, w, k):
    nx = min(w, max(1, int(np.ceil(np.sqrt(k * w / h)))))
    ny = min(h, max(1, int(round(k / nx))))
    return ny, nx


def slic(patch, n_segments=50, compactness=10.0, n_iter=10):
    """SLIC k-means in (Lab, position) space followed by connectivity enforcement.

    The returned ``count`` may differ from ``n_segments``: the seed grid is
    rounded and undersized fragments are merged into a neighbour.
    """
    patch = np.asarray(patch, dtype=np.float64)
    h, w = patch.shape[:2]
    if not 1 <= n_segments <= h * w:
        raise ValueError(f"n_segments must be in [1, {h * w}]")
    if compactness <= 0:
        raise ValueError("compactness must be positive")
    lab = rgb_to_lab(patch)
    step = np.sqrt(h * w / n_segments)
    ny, nx = _grid(h, w, n_segments)
    cy = (np.arange(ny) + 0.5) * h / ny - 0.5
    cx = (np.arange(nx) + 0.5) * w / nx - 0.5
    gy, gx = np.meshgrid(cy, cx, indexing="ij")
    gy, gx = gy.ravel(), gx.ravel()
    iy = np.clip(np.rint(gy).astype(int), 0, h - 1)
    ix = np.clip(np.rint(gx).astype(int), 0, w - 1)
    centers = np.column_stack([lab[iy, ix], gy, gx])

    # start from the nearest seed so pixels outside every window stay labelled
    yy, xx = np.mgrid[0:h, 0:w]
    near = np.argmin((yy.ravel()[:, None] - gy) ** 2 + (xx.ravel()[:, None] - gx) ** 2, axis=1)
    labels = near.reshape(h, w).astype(np.int64)

    radius = max(step, h / ny, w / nx)
    labels, _ = kernels.slic_assign(lab, centers, labels, step, compactness, radius, n_iter)
    min_size = max(1, (h * w) // (n_segments * 4))
    labels, count = kernels.enforce_connectivity(labels, min_size)
    return Segmentation(labels, count, superpixel_means(rgb_to_hsv(patch), labels, count))


def superpixel_means(img, labels, count):
    flat = labels.ravel()
    n = np.bincount(flat, minlength=count).astype(np.float64)
    chans = img.reshape(-1, img.shape[-1])
    return np.column_stack([np.bincount(flat, weights=chans[:, c], minlength=count) / n
                            for c in range(chans.shape[1])])


def histogram(seg, k_o=10.0, centers=BIN_CENTERS):
    """Soft 5-bin histogram per HSV channel, concatenated as [H, S, V].

    ``seg`` is a :class:`Segmentation` or an ``(n, 3)`` array of superpixel means.
    """
    means = seg.hsv_means if isinstance(seg, Segmentation) else np.asarray(seg, dtype=np.float64)
    diff = means[:, :, None] - np.asarray(centers)[None, None, :]
    return np.exp(-k_o * diff ** 2).sum(axis=0).ravel()


def similarity(h, t):
    """Cosine similarity of two histograms."""
    h = np.asarray(h, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    nh, nt = np.linalg.norm(h), np.linalg.norm(t)
    if nh == 0 or nt == 0:
        raise ValueError("cosine similarity of a zero histogram")
    return float(h @ t / (nh * nt))


def hist_error(l_h, k_h=0.5):
    if k_h <= 0:
        raise ValueError("k_h must be positive")
    return 1.0 / (k_h + np.asarray(l_h, dtype=np.float64))


@dataclass
class HistTemplate:
    bins: np.ndarray
    gamma: float = 0.95

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.float64)
        if self.bins.shape != (N_BINS,) or not np.all(np.isfinite(self.bins)) or np.any(self.bins < 0):
            raise ValueError("template needs 15 finite nonnegative bins")
        if not np.any(self.bins > 0):
            raise ValueError("template histogram is all zero")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")


def update_template(template, best, gamma=None):
    g = template.gamma if gamma is None else gamma
    if not 0.0 <= g <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    bins = g * template.bins + (1.0 - g) * np.asarray(best, dtype=np.float64)
    return HistTemplate(bins, template.gamma)


def patch_histogram(patch, n_segments=50, compactness=10.0, k_o=10.0):
    return histogram(slic(patch, n_segments, compactness), k_o)
