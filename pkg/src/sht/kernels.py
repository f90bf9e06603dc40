"""Hot inner loops, each in a numba flavour and a pure-numpy flavour.

The public names at the bottom (``sample_bilinear``, ``label_components``,
``slic_assign``, ``enforce_connectivity``) are bound to one flavour at import
time, see :mod:`sht._accel`. The ``*_numba`` / ``*_numpy`` names are always
available so both paths can be checked against each other.

Coordinate convention for sampling: integer (x, y) is the centre of pixel
``img[y, x]``; neighbours outside the image read as 0.
"""

import numpy as np

from ._accel import USE_NUMBA, njit


# ---------------------------------------------------------------------------
# bilinear sampling

@njit
def _sample_bilinear_nb(img, xs, ys, out):
    h, w, c = img.shape
    for n in range(xs.shape[0]):
        x = xs[n]
        y = ys[n]
        x0f = np.floor(x)
        y0f = np.floor(y)
        fx = x - x0f
        fy = y - y0f
        x0 = int(x0f)
        y0 = int(y0f)
        for ch in range(c):
            v00 = 0.0
            v01 = 0.0
            v10 = 0.0
            v11 = 0.0
            if 0 <= y0 < h:
                if 0 <= x0 < w:
                    v00 = img[y0, x0, ch]
                if 0 <= x0 + 1 < w:
                    v01 = img[y0, x0 + 1, ch]
            if 0 <= y0 + 1 < h:
                if 0 <= x0 < w:
                    v10 = img[y0 + 1, x0, ch]
                if 0 <= x0 + 1 < w:
                    v11 = img[y0 + 1, x0 + 1, ch]
            top = (1.0 - fx) * v00 + fx * v01
            bot = (1.0 - fx) * v10 + fx * v11
            out[n, ch] = (1.0 - fy) * top + fy * bot
    return out


def _as_hwc(img):
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    return np.ascontiguousarray(img), squeeze


def sample_bilinear_numba(img, xs, ys):
    """Sample ``img`` (H,W) or (H,W,C) at arrays ``xs``, ``ys`` of equal shape."""
    arr, squeeze = _as_hwc(img)
    xs = np.asarray(xs, dtype=np.float64)
    shape = xs.shape
    xf = np.ascontiguousarray(xs.ravel())
    yf = np.ascontiguousarray(np.asarray(ys, dtype=np.float64).ravel())
    out = np.empty((xf.size, arr.shape[2]))
    _sample_bilinear_nb(arr, xf, yf, out)
    out = out.reshape(shape + (arr.shape[2],))
    return out[..., 0] if squeeze else out


def sample_bilinear_numpy(img, xs, ys):
    arr, squeeze = _as_hwc(img)
    h, w, _ = arr.shape
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    x0f = np.floor(xs)
    y0f = np.floor(ys)
    fx = (xs - x0f)[..., None]
    fy = (ys - y0f)[..., None]
    x0 = x0f.astype(np.int64)
    y0 = y0f.astype(np.int64)

    def tap(yy, xx):
        ok = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        v = arr[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        return np.where(ok[..., None], v, 0.0)

    top = (1.0 - fx) * tap(y0, x0) + fx * tap(y0, x0 + 1)
    bot = (1.0 - fx) * tap(y0 + 1, x0) + fx * tap(y0 + 1, x0 + 1)
    out = (1.0 - fy) * top + fy * bot
    return out[..., 0] if squeeze else out


# ---------------------------------------------------------------------------
# 8-connected component labelling (two-pass union-find)

@njit
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit
def _label_nb(mask):
    h, w = mask.shape
    prov = np.zeros((h, w), dtype=np.int64)
    parent = np.zeros(h * w + 1, dtype=np.int64)
    nxt = 1
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            best = 0
            # already-visited neighbours: W, NW, N, NE
            for dy, dx in ((0, -1), (-1, -1), (-1, 0), (-1, 1)):
                yy = y + dy
                xx = x + dx
                if yy < 0 or xx < 0 or xx >= w:
                    continue
                lab = prov[yy, xx]
                if lab == 0:
                    continue
                if best == 0:
                    best = lab
                else:
                    ra = _find(parent, best)
                    rb = _find(parent, lab)
                    if ra != rb:
                        if ra < rb:
                            parent[rb] = ra
                        else:
                            parent[ra] = rb
            if best == 0:
                parent[nxt] = nxt
                prov[y, x] = nxt
                nxt += 1
            else:
                prov[y, x] = best
    remap = np.zeros(nxt, dtype=np.int64)
    out = np.zeros((h, w), dtype=np.int32)
    count = 0
    for y in range(h):
        for x in range(w):
            lab = prov[y, x]
            if lab == 0:
                continue
            root = _find(parent, lab)
            if remap[root] == 0:
                count += 1
                remap[root] = count
            out[y, x] = remap[root]
    return out, count


def label_components_numba(mask):
    """Label 8-connected foreground components of a boolean mask.

    Returns ``(labels, n)``; labels are 1..n numbered by each component's
    raster-first pixel, 0 is background.
    """
    labels, n = _label_nb(np.ascontiguousarray(mask, dtype=np.bool_))
    return labels, int(n)


def label_components_numpy(mask):
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    big = h * w + 1
    flat = np.arange(1, h * w + 1, dtype=np.int64).reshape(h, w)
    lab = np.where(mask, flat, big)
    padded = np.full((h + 2, w + 2), big, dtype=np.int64)
    while True:
        padded[1:-1, 1:-1] = lab
        m = lab.copy()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy or dx:
                    np.minimum(m, padded[1 + dy:h + 1 + dy, 1 + dx:w + 1 + dx], out=m)
        m = np.where(mask, m, big)
        # pointer jumping: a label is the flat index (+1) of a pixel in the same component
        fg = m < big
        m[fg] = np.minimum(m[fg], m.ravel()[m[fg] - 1])
        if np.array_equal(m, lab):
            break
        lab = m
    out = np.zeros((h, w), dtype=np.int32)
    roots = np.unique(lab[mask])
    if roots.size:
        out[mask] = (np.searchsorted(roots, lab[mask]) + 1).astype(np.int32)
    return out, int(roots.size)


# ---------------------------------------------------------------------------
# SLIC assignment / update iterations
#
# centers rows are (l, a, b, y, x); a pixel is considered by a centre only if
# both |dy| and |dx| are within ``radius``.

@njit
def _slic_nb(lab, centers, labels, step, compactness, radius, n_iter):
    h, w, _ = lab.shape
    k = centers.shape[0]
    dist = np.empty((h, w))
    sums = np.zeros((k, 5))
    counts = np.zeros(k)
    spatial = (compactness / step) ** 2
    for _ in range(n_iter):
        dist[:, :] = np.inf
        for c in range(k):
            cl = centers[c, 0]
            ca = centers[c, 1]
            cb = centers[c, 2]
            cy = centers[c, 3]
            cx = centers[c, 4]
            y_lo = max(0, int(np.floor(cy - radius)) - 1)
            y_hi = min(h - 1, int(np.ceil(cy + radius)) + 1)
            x_lo = max(0, int(np.floor(cx - radius)) - 1)
            x_hi = min(w - 1, int(np.ceil(cx + radius)) + 1)
            for y in range(y_lo, y_hi + 1):
                dy = y - cy
                if abs(dy) > radius:
                    continue
                for x in range(x_lo, x_hi + 1):
                    dx = x - cx
                    if abs(dx) > radius:
                        continue
                    d0 = lab[y, x, 0] - cl
                    d1 = lab[y, x, 1] - ca
                    d2 = lab[y, x, 2] - cb
                    d = d0 * d0 + d1 * d1 + d2 * d2 + (dy * dy + dx * dx) * spatial
                    if d < dist[y, x]:
                        dist[y, x] = d
                        labels[y, x] = c
        sums[:, :] = 0.0
        counts[:] = 0.0
        for y in range(h):
            for x in range(w):
                c = labels[y, x]
                sums[c, 0] += lab[y, x, 0]
                sums[c, 1] += lab[y, x, 1]
                sums[c, 2] += lab[y, x, 2]
                sums[c, 3] += y
                sums[c, 4] += x
                counts[c] += 1.0
        for c in range(k):
            if counts[c] > 0:
                for j in range(5):
                    centers[c, j] = sums[c, j] / counts[c]
    return labels, centers


def slic_assign_numba(lab, centers, labels, step, compactness, radius, n_iter):
    lab = np.ascontiguousarray(lab, dtype=np.float64)
    centers = np.array(centers, dtype=np.float64)
    labels = np.array(labels, dtype=np.int64)
    return _slic_nb(lab, centers, labels, float(step), float(compactness), float(radius), int(n_iter))


def slic_assign_numpy(lab, centers, labels, step, compactness, radius, n_iter):
    lab = np.asarray(lab, dtype=np.float64)
    centers = np.array(centers, dtype=np.float64)
    labels = np.array(labels, dtype=np.int64)
    h, w, _ = lab.shape
    k = centers.shape[0]
    yy, xx = np.mgrid[0:h, 0:w]
    yy = yy.ravel().astype(np.float64)
    xx = xx.ravel().astype(np.float64)
    pix = lab.reshape(-1, 3)
    spatial = (compactness / step) ** 2
    for _ in range(n_iter):
        dy = yy[None, :] - centers[:, 3:4]
        dx = xx[None, :] - centers[:, 4:5]
        d0 = pix[None, :, 0] - centers[:, 0:1]
        d1 = pix[None, :, 1] - centers[:, 1:2]
        d2 = pix[None, :, 2] - centers[:, 2:3]
        d = d0 * d0 + d1 * d1 + d2 * d2 + (dy * dy + dx * dx) * spatial
        d[(np.abs(dy) > radius) | (np.abs(dx) > radius)] = np.inf
        best = np.argmin(d, axis=0)
        hit = np.isfinite(d[best, np.arange(d.shape[1])])
        flat = labels.ravel()
        flat[hit] = best[hit]
        labels = flat.reshape(h, w)
        counts = np.bincount(flat, minlength=k).astype(np.float64)
        feats = (pix[:, 0], pix[:, 1], pix[:, 2], yy, xx)
        for j, f in enumerate(feats):
            s = np.bincount(flat, weights=f, minlength=k)
            nz = counts > 0
            centers[nz, j] = s[nz] / counts[nz]
    return labels, centers


# ---------------------------------------------------------------------------
# SLIC connectivity enforcement: raster scan, 4-connected flood per segment;
# segments smaller than ``min_size`` are absorbed by the segment adjacent to
# their first pixel.

def _enforce_py(labels, min_size):
    h, w = labels.shape
    out = np.full((h, w), -1, dtype=np.int64)
    qy = np.empty(h * w, dtype=np.int64)
    qx = np.empty(h * w, dtype=np.int64)
    dys = (0, -1, 0, 1)
    dxs = (-1, 0, 1, 0)
    new = 0
    for y0 in range(h):
        for x0 in range(w):
            if out[y0, x0] >= 0:
                continue
            adj = -1
            for t in range(4):
                yy = y0 + dys[t]
                xx = x0 + dxs[t]
                if 0 <= yy < h and 0 <= xx < w and out[yy, xx] >= 0:
                    adj = out[yy, xx]
                    break
            orig = labels[y0, x0]
            out[y0, x0] = new
            qy[0] = y0
            qx[0] = x0
            head = 0
            tail = 1
            while head < tail:
                cy = qy[head]
                cx = qx[head]
                head += 1
                for t in range(4):
                    yy = cy + dys[t]
                    xx = cx + dxs[t]
                    if 0 <= yy < h and 0 <= xx < w and out[yy, xx] < 0 and labels[yy, xx] == orig:
                        out[yy, xx] = new
                        qy[tail] = yy
                        qx[tail] = xx
                        tail += 1
            if tail < min_size and adj >= 0:
                for i in range(tail):
                    out[qy[i], qx[i]] = adj
            else:
                new += 1
    return out, new


_enforce_nb = njit(_enforce_py)


def enforce_connectivity_numba(labels, min_size):
    out, n = _enforce_nb(np.ascontiguousarray(labels, dtype=np.int64), int(min_size))
    return out, int(n)


def enforce_connectivity_numpy(labels, min_size):
    out, n = _enforce_py(np.asarray(labels, dtype=np.int64), int(min_size))
    return out, int(n)


if USE_NUMBA:
    sample_bilinear = sample_bilinear_numba
    label_components = label_components_numba
    slic_assign = slic_assign_numba
    enforce_connectivity = enforce_connectivity_numba
else:
    sample_bilinear = sample_bilinear_numpy
    label_components = label_components_numpy
    slic_assign = slic_assign_numpy
    enforce_connectivity = enforce_connectivity_numpy
