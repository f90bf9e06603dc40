"""Time each hot kernel in its numba and numpy flavour on tracker-sized inputs.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

The full-step comparison runs the tracker in a subprocess per backend,
because the backend is fixed at import time by SHT_DISABLE_NUMBA.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from sht import kernels
from sht.superpixel import rgb_to_lab


def best_of(fn, repeat):
    fn()  # warm-up (JIT compile for the numba flavour)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    gray = rng.random((360, 640))
    xs = rng.uniform(0, 640, (600, 1024))
    ys = rng.uniform(0, 360, (600, 1024))
    mask = rng.random((200, 200)) < 0.3
    lab = rgb_to_lab(rng.random((64, 64, 3)))
    g = np.arange(4.5, 64, 9.0)
    cy, cx = np.meshgrid(g, g, indexing="ij")
    iy, ix = cy.astype(int).ravel(), cx.astype(int).ravel()
    centers = np.column_stack([lab[iy, ix], cy.ravel(), cx.ravel()])
    labels0 = rng.integers(0, len(centers), (64, 64))
    seg = rng.integers(0, 50, (64, 64))
    return {
        "bilinear 600x32x32": (
            lambda: kernels.sample_bilinear_numba(gray, xs, ys),
            lambda: kernels.sample_bilinear_numpy(gray, xs, ys)),
        "ccl 200x200": (
            lambda: kernels.label_components_numba(mask),
            lambda: kernels.label_components_numpy(mask)),
        "slic assign 64x64 k=49": (
            lambda: kernels.slic_assign_numba(lab, centers, labels0, 9.0, 10.0, 9.0, 10),
            lambda: kernels.slic_assign_numpy(lab, centers, labels0, 9.0, 10.0, 9.0, 10)),
        "connectivity 64x64": (
            lambda: kernels.enforce_connectivity_numba(seg, 20),
            lambda: kernels.enforce_connectivity_numpy(seg, 20)),
    }


STEP_SCRIPT = """
import sys, tempfile, time
import numpy as np
from sht import backend_name
from sht.sequence import read_frame, synth_sequence
from sht.tracker import Tracker, TrackerConfig
with tempfile.TemporaryDirectory() as d:
    seq = synth_sequence("smooth-motion", d, seed=0, n_frames=int(sys.argv[1]))
    frames = [read_frame(p) for p in seq.frames]
tr = Tracker(frames[0], seq.groundtruth[0], TrackerConfig())
tr.step(frames[1])
t0 = time.perf_counter()
for f in frames[2:]:
    tr.step(f)
print(backend_name(), (time.perf_counter() - t0) / (len(frames) - 2))
"""


def step_time(disable_numba, n_frames):
    env = dict(os.environ, SHT_DISABLE_NUMBA="1" if disable_numba else "0")
    out = subprocess.run([sys.executable, "-c", STEP_SCRIPT, str(n_frames)], env=env,
                         capture_output=True, text=True, check=True)
    name, secs = out.stdout.split()
    return name, float(secs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--frames", type=int, default=12, help="frames for the full-step timing")
    ap.add_argument("--skip-step", action="store_true")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'kernel':26s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, (nb, npy) in kernel_cases(rng).items():
        a = best_of(nb, args.repeat) * 1e3
        b = best_of(npy, args.repeat) * 1e3
        print(f"{name:26s} {a:10.2f} {b:10.2f} {b / a:8.1f}x")

    if not args.skip_step:
        print()
        for flag in (False, True):
            name, secs = step_time(flag, args.frames)
            print(f"tracker step, {name:5s} backend: {secs:.3f} s/frame (640x360)")


if __name__ == "__main__":
    main()
