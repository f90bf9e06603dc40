"""Image-sequence I/O in the OTB layout and a synthetic sequence generator.

Layout::

    <seq>/img/0001.png ...
    <seq>/groundtruth_rect.txt     one "x,y,w,h" line per frame, 1-based
"""

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp"}
GT_NAME = "groundtruth_rect.txt"
SCENARIOS = ("smooth-motion", "abrupt-jump", "occlusion", "color-constant-deformation")


class SequenceError(Exception):
    pass


@dataclass
class SequenceSpec:
    name: str
    frames: list           # image paths, sorted
    groundtruth: np.ndarray  # (n, 4) 0-based x, y, w, h

    def __len__(self):
        return len(self.frames)


def parse_groundtruth(path):
    path = Path(path)
    if not path.is_file():
        raise SequenceError(f"missing groundtruth file {path}")
    boxes = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = [p for p in re.split(r"[,\s]+", line.strip()) if p]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise SequenceError(f"{path}:{lineno}: cannot parse {line!r}") from None
        if len(vals) != 4 or not all(math.isfinite(v) for v in vals):
            raise SequenceError(f"{path}:{lineno}: expected 4 finite numbers, got {line!r}")
        if vals[2] < 1 or vals[3] < 1:
            raise SequenceError(f"{path}:{lineno}: box width/height must be >= 1")
        boxes.append([vals[0] - 1.0, vals[1] - 1.0, vals[2], vals[3]])
    if not boxes:
        raise SequenceError(f"empty groundtruth file {path}")
    return np.array(boxes, dtype=np.float64)


def _one_based(x):
    # shortest text whose parse, minus 1, gives back x exactly
    v = x + 1.0
    for cand in (v, math.nextafter(v, math.inf), math.nextafter(v, -math.inf)):
        if float(repr(cand)) - 1.0 == x:
            v = cand
            break
    if v == int(v) and abs(v) < 2 ** 53:
        return str(int(v))
    return repr(v)


def format_box(box):
    x, y, w, h = (float(v) for v in box)
    fmt = lambda v: str(int(v)) if v == int(v) else repr(v)
    return ",".join([_one_based(x), _one_based(y), fmt(w), fmt(h)])


def write_groundtruth(path, boxes):
    Path(path).write_text("".join(format_box(b) + "\n" for b in boxes))


def load_sequence(path):
    root = Path(path)
    img_dir = root / "img"
    if not img_dir.is_dir():
        raise SequenceError(f"missing image folder {img_dir}")
    frames = sorted(p for p in img_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not frames:
        raise SequenceError(f"no images in {img_dir}")
    gt = parse_groundtruth(root / GT_NAME)
    if len(gt) > len(frames):
        raise SequenceError(f"{root / GT_NAME} has {len(gt)} boxes for {len(frames)} frames")
    return SequenceSpec(root.name, frames, gt)


def read_frame(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def write_frame(path, frame):
    arr = np.clip(np.rint(np.asarray(frame) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)


# ---------------------------------------------------------------------------
# synthetic sequences

SKIN = np.array([0.86, 0.62, 0.52])
BACKGROUND_PALETTE = np.array([
    [0.15, 0.30, 0.55], [0.20, 0.45, 0.25], [0.45, 0.45, 0.50], [0.30, 0.20, 0.45],
    [0.10, 0.15, 0.20], [0.55, 0.60, 0.65], [0.05, 0.35, 0.40], [0.25, 0.25, 0.30],
])


def _background(rng, h, w):
    yy, xx = np.mgrid[0:h, 0:w]
    bg = np.empty((h, w, 3))
    bg[:] = [0.22, 0.28, 0.36]
    bg += (0.10 * xx / w)[..., None] * np.array([0.2, 0.5, 1.0])
    for _ in range(60):
        col = BACKGROUND_PALETTE[rng.integers(len(BACKGROUND_PALETTE))]
        col = np.clip(col + rng.normal(0, 0.04, 3), 0, 1)
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        rx, ry = rng.uniform(8, 60), rng.uniform(8, 60)
        if rng.random() < 0.5:
            m = (np.abs(xx - cx) < rx) & (np.abs(yy - cy) < ry)
        else:
            m = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 < 1
        bg[m] = col
    # fine stripes for texture
    bg += 0.03 * np.sin(xx * 0.7)[..., None] * np.sin(yy * 0.45)[..., None]
    return np.clip(bg, 0, 1)


def _draw_face(img, box):
    x, y, w, h = box
    hh, ww = img.shape[:2]
    yy, xx = np.mgrid[0:hh, 0:ww]
    px, py = xx + 0.5, yy + 0.5
    cx, cy = x + w / 2, y + h / 2
    nx, ny = (px - cx) / (w / 2), (py - cy) / (h / 2)
    inside = nx ** 2 + ny ** 2 <= 1
    img[inside] = SKIN
    hair = inside & (ny < -0.45)
    img[hair] = [0.25, 0.15, 0.08]
    for ex in (-0.38, 0.38):
        eye = ((nx - ex) / 0.16) ** 2 + ((ny + 0.12) / 0.10) ** 2 <= 1
        img[eye] = [0.08, 0.08, 0.10]
    mouth = (np.abs(nx) < 0.35) & (np.abs(ny - 0.5) < 0.07)
    img[mouth] = [0.70, 0.15, 0.15]


def _draw_square(img, box):
    x, y, w, h = box
    hh, ww = img.shape[:2]
    yy, xx = np.mgrid[0:hh, 0:ww]
    px, py = xx + 0.5, yy + 0.5
    inside = (px >= x) & (px < x + w) & (py >= y) & (py < y + h)
    top = inside & (py < y + h / 2)
    img[top] = [0.95, 0.55, 0.10]
    img[inside & ~top] = [0.10, 0.75, 0.75]
    checker = inside & ((((px - x) // 8) + ((py - y) // 8)) % 2 == 0)
    img[checker] *= 0.8


def _path(scenario, rng, n, w, h, tw, th, speed):
    """Top-left corners per frame (0.01 px grid), target kept inside the frame."""
    lo = np.array([4.0, 4.0])
    hi = np.array([w - tw - 4.0, h - th - 4.0])
    pos = np.empty((n, 2))
    start = rng.uniform(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo))
    amp = 0.25 * (hi - lo)
    # |d/dt| <= speed in each axis
    om = speed / np.maximum(amp, 1.0) * 0.6
    phase = rng.uniform(0, 2 * np.pi, 2)
    for t in range(n):
        pos[t] = start + amp * np.sin(om * t + phase) - amp * np.sin(phase)
    if scenario == "abrupt-jump":
        offset = np.zeros(2)
        for t in range(n):
            if t > 0 and t % 50 == 0:
                for _ in range(1000):
                    target = rng.uniform(lo, hi)
                    if np.hypot(*(target - (pos[t] + offset))) > 150:
                        break
                offset = target - pos[t]
            cur = np.clip(pos[t] + offset, lo, hi)
            pos[t] = cur
    return np.round(np.clip(pos, lo, hi), 2)


def synth_sequence(scenario, out_dir, seed=0, n_frames=200, size=(640, 360), speed=3.0):
    """Render a scenario to ``out_dir`` in the OTB layout and load it back."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    w, h = size
    rng = np.random.default_rng(seed)
    bg = _background(rng, h, w)
    face = scenario in ("abrupt-jump", "occlusion")
    tw, th = (48, 60) if face else (56, 56)
    pos = _path(scenario, rng, n_frames, w, h, tw, th, speed)
    out = Path(out_dir)
    (out / "img").mkdir(parents=True, exist_ok=True)
    boxes = []
    for t in range(n_frames):
        bw, bh = tw, th
        if scenario == "color-constant-deformation":
            bw = int(round(tw * (1 + 0.2 * np.sin(2 * np.pi * t / 60))))
            bh = int(round(th * (1 - 0.2 * np.sin(2 * np.pi * t / 60))))
        box = (float(pos[t, 0]), float(pos[t, 1]), bw, bh)
        img = bg.copy()
        (_draw_face if face else _draw_square)(img, box)
        if scenario == "occlusion" and 80 <= t < 110:
            ox = box[0] - 30 + (t - 80) * 4
            img[:, int(max(ox, 0)):int(max(ox + 24, 0))] = [0.5, 0.5, 0.5]
        noise = np.random.default_rng((seed, t)).normal(0, 0.015, img.shape)
        write_frame(out / "img" / f"{t + 1:04d}.png", np.clip(img + noise, 0, 1))
        boxes.append(box)
    write_groundtruth(out / GT_NAME, boxes)
    return load_sequence(out)
