"""OTB-style per-frame metrics: overlap, centre error, success curve."""

from dataclasses import dataclass

import numpy as np

SUCCESS_THRESHOLDS = tuple(k / 10 for k in range(11))


def overlap_rate(a, b):
    """Intersection over union of two ``(x, y, w, h)`` boxes."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    ih = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    if union <= 0:
        return 0.0
    return float(min(1.0, max(0.0, inter / union)))


def center_error(a, b):
    return float(np.hypot(a[0] + a[2] / 2 - b[0] - b[2] / 2, a[1] + a[3] / 2 - b[1] - b[3] / 2))


def success_curve(overlaps, thresholds=SUCCESS_THRESHOLDS):
    """Fraction of frames whose overlap is at least each threshold."""
    ov = np.asarray(overlaps, dtype=np.float64)
    if ov.size == 0:
        raise ValueError("success curve of an empty sequence")
    return [float(np.count_nonzero(ov >= t) / ov.size) for t in thresholds]


@dataclass
class MetricsReport:
    overlaps: list
    center_errors: list
    success: list
    thresholds: tuple = SUCCESS_THRESHOLDS

    @property
    def average_overlap(self):
        return float(np.mean(self.overlaps))

    @property
    def average_center_error(self):
        return float(np.mean(self.center_errors))

    def to_dict(self, name=None):
        out = {
            "average_overlap": self.average_overlap,
            "average_center_error": self.average_center_error,
            "success_thresholds": list(self.thresholds),
            "success_rate": list(self.success),
            "frames": len(self.overlaps),
            "overlap": list(self.overlaps),
            "center_error": list(self.center_errors),
        }
        if name is not None:
            out = {"sequence": name, **out}
        return out


def evaluate(predicted, groundtruth):
    """Metrics over the frames that have groundtruth (the leading ones)."""
    n = min(len(predicted), len(groundtruth))
    if n == 0:
        raise ValueError("no frames to evaluate")
    ov = [overlap_rate(predicted[i], groundtruth[i]) for i in range(n)]
    ce = [center_error(predicted[i], groundtruth[i]) for i in range(n)]
    return MetricsReport(ov, ce, success_curve(ov))
