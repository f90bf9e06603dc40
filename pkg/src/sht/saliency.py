"""Top-down saliency: weighted feature combination, centre penalty,
binarisation, connected regions, candidate generation and the ridge
update of the feature weights."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .features import FEATURE_SIDE


@dataclass(frozen=True)
class ConnectedRegion:
    label: int
    area: int
    center: tuple  # (x, y) pixel indices in the 200x200 map
    bbox: tuple    # (x0, y0, x1, y1) inclusive


def combine(stack, weights):
    """Per-pixel weighted sum of the feature maps."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (stack.shape[0],):
        raise ValueError(f"need {stack.shape[0]} weights, got shape {weights.shape}")
    return np.tensordot(weights, stack, axes=1)


def penalty_factor(shape, p_c, delta_s=2.0, form="exp"):
    """Distance-to-last-centre factor.

    ``form="exp"`` gives ``exp(-delta_s * d / max d)`` (1 at ``p_c``, decaying);
    ``form="linear"`` is the literal ``delta_s * d / max d`` variant, kept only
    for comparison runs.
    """
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    dist = np.hypot(xx - p_c[0], yy - p_c[1])
    dmax = dist.max()
    rel = dist / dmax if dmax > 0 else np.zeros_like(dist)
    if form == "exp":
        return np.exp(-delta_s * rel)
    if form == "linear":
        return delta_s * rel
    raise ValueError(f"unknown penalty form {form!r}")


def center_penalty(raw, p_c, delta_s=2.0, form="exp"):
    return penalty_factor(raw.shape, p_c, delta_s, form) * raw


def binarize(penalized, delta_b=0.7):
    lo, hi = penalized.min(), penalized.max()
    if hi - lo <= 0:
        return np.zeros(penalized.shape, dtype=bool)
    return (penalized - lo) / (hi - lo) >= delta_b


def connected_regions(binary, min_area=40, labels=None):
    """8-connected regions with at least ``min_area`` pixels, in raster order."""
    if min_area < 1:
        raise ValueError("min_area must be >= 1")
    if labels is None:
        labels, n = kernels.label_components(binary)
    else:
        n = int(labels.max())
    if n == 0:
        return []
    flat = labels.ravel()
    h, w = labels.shape
    idx = np.arange(flat.size)
    areas = np.bincount(flat, minlength=n + 1)
    sx = np.bincount(flat, weights=idx % w, minlength=n + 1)
    sy = np.bincount(flat, weights=idx // w, minlength=n + 1)
    fg = flat > 0
    xs, ys, lab = idx[fg] % w, idx[fg] // w, flat[fg]
    x0 = np.full(n + 1, w)
    y0 = np.full(n + 1, h)
    x1 = np.full(n + 1, -1)
    y1 = np.full(n + 1, -1)
    np.minimum.at(x0, lab, xs)
    np.minimum.at(y0, lab, ys)
    np.maximum.at(x1, lab, xs)
    np.maximum.at(y1, lab, ys)
    out = []
    for k in range(1, n + 1):
        if areas[k] < min_area:
            continue
        cx = int(np.floor(sx[k] / areas[k] + 0.5))
        cy = int(np.floor(sy[k] / areas[k] + 0.5))
        out.append(ConnectedRegion(k, int(areas[k]), (cx, cy),
                                   (int(x0[k]), int(y0[k]), int(x1[k]), int(y1[k]))))
    return out


def frame_to_map(x, y, frame_shape):
    h, w = frame_shape[:2]
    return x * FEATURE_SIDE / w, y * FEATURE_SIDE / h


def map_to_frame(x, y, frame_shape):
    h, w = frame_shape[:2]
    return x * w / FEATURE_SIDE, y * h / FEATURE_SIDE


def generate_candidates(centers, last_state, frame_shape):
    """One candidate per map centre, keeping the last box's shape and orientation."""
    out = []
    for cx, cy in centers:
        fx, fy = map_to_frame(cx, cy, frame_shape)
        out.append(last_state.with_center(fx, fy))
    return out


def groundtruth_map(box, frame_shape):
    """Boolean 200x200 mask of map pixels whose centres fall inside ``box``."""
    x, y, bw, bh = box
    h, w = frame_shape[:2]
    cx = (np.arange(FEATURE_SIDE) + 0.5) * w / FEATURE_SIDE
    cy = (np.arange(FEATURE_SIDE) + 0.5) * h / FEATURE_SIDE
    inx = (cx >= x) & (cx < x + bw)
    iny = (cy >= y) & (cy < y + bh)
    return iny[:, None] & inx[None, :]


def update_weights(stack, mask, lam=0.05):
    """Ridge regression of the mask onto the vectorised feature maps."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    f = stack.reshape(stack.shape[0], -1)
    target = np.asarray(mask, dtype=np.float64).ravel()
    gram = f @ f.T
    gram[np.diag_indices_from(gram)] += lam
    return np.linalg.solve(gram, f @ target)


def relevance(w):
    """Relevance degree of a feature weight; peaks at 1 for ``w == 1``."""
    w = np.asarray(w, dtype=np.float64)
    return np.where(w <= 1.0, -w * (w - 2.0), np.exp(-(w - 1.0)))


@dataclass
class SaliencyResult:
    raw: np.ndarray
    penalized: np.ndarray
    binary: np.ndarray
    regions: list


def saliency_search(stack, weights, p_c, delta_s=2.0, delta_b=0.7, min_area=40,
                    form="exp"):
    """Weighted map -> penalised map -> binary map -> regions.

    Negative combined saliency (suppressed by negative weights) is clipped to
    zero before the penalty so the multiplicative factor cannot lift it.
    """
    raw = combine(stack, weights)
    pen = center_penalty(np.maximum(raw, 0.0), p_c, delta_s, form)
    binary = binarize(pen, delta_b)
    return SaliencyResult(raw, pen, binary, connected_regions(binary, min_area))

