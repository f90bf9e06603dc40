"""Command-line driver: ``sht track``, ``sht bench``, ``sht synth``."""

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .metrics import evaluate
from .sequence import SCENARIOS, SequenceError, load_sequence, read_frame, synth_sequence
from .tracker import ConfigError, Tracker, TrackerConfig

log = logging.getLogger("sht")

RESULT_COLUMNS = ("frame", "x", "y", "w", "h", "confidence", "mode")
ABLATIONS = ("nsgs", "nsm", "nlrs")


def load_config(path=None, seed=None, ablations=()):
    cfg = TrackerConfig.from_json(path) if path else TrackerConfig()
    if seed is not None:
        cfg = TrackerConfig.from_dict({**cfg.to_dict(), "seed": seed})
    if ablations:
        cfg = cfg.with_ablation(*ablations)
    return cfg


def _num(v):
    return repr(float(v))


def annotate_frame(frame, box, gt_box, path):
    from PIL import Image, ImageDraw

    img = Image.fromarray(np.clip(np.rint(frame * 255), 0, 255).astype(np.uint8))
    draw = ImageDraw.Draw(img)
    if gt_box is not None:
        x, y, w, h = gt_box
        draw.rectangle([x, y, x + w, y + h], outline=(0, 255, 0), width=2)
    x, y, w, h = box
    draw.rectangle([x, y, x + w, y + h], outline=(255, 0, 0), width=2)
    img.save(path)


def track_sequence(seq_dir, out_dir, config, annotate=False):
    """Run one sequence; writes results.csv (and metrics.json when groundtruth exists)."""
    seq = load_sequence(seq_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    first = read_frame(seq.frames[0])
    init_box = tuple(seq.groundtruth[0])
    t0 = time.perf_counter()
    tracker = Tracker(first, init_box, config)
    boxes = [init_box]
    rows = [(1, *init_box, 1.0, "init")]
    if annotate:
        (out / "frames").mkdir(exist_ok=True)
        annotate_frame(first, init_box, init_box, out / "frames" / "0001.png")
    for i, path in enumerate(seq.frames[1:], start=2):
        frame = read_frame(path)
        est, diag = tracker.step(frame)
        box = est.to_box()
        boxes.append(box)
        rows.append((i, *box, diag.confidence, diag.mode))
        if annotate:
            gt = tuple(seq.groundtruth[i - 1]) if i - 1 < len(seq.groundtruth) else None
            annotate_frame(frame, box, gt, out / "frames" / f"{i:04d}.png")
    elapsed = time.perf_counter() - t0

    with open(out / "results.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(RESULT_COLUMNS)
        for fr, x, y, w, h, conf, mode in rows:
            wr.writerow([fr, _num(x), _num(y), _num(w), _num(h), _num(conf), mode])

    report = evaluate(boxes, seq.groundtruth)
    metrics = report.to_dict(seq.name)
    metrics["seconds_per_frame"] = elapsed / max(1, len(seq.frames) - 1)
    with open(out / "metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=2)
    log.info("%s: overlap %.3f, centre error %.2f px, %.3f s/frame", seq.name,
             metrics["average_overlap"], metrics["average_center_error"],
             metrics["seconds_per_frame"])
    return metrics


def _track_job(args):
    seq_dir, out_dir, cfg_dict, annotate = args
    return track_sequence(seq_dir, out_dir, TrackerConfig.from_dict(cfg_dict), annotate)


def read_seq_list(path):
    path = Path(path)
    if not path.is_file():
        raise SequenceError(f"missing sequence list {path}")
    dirs = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        p = Path(line)
        dirs.append(p if p.is_absolute() else path.parent / p)
    if not dirs:
        raise SequenceError(f"sequence list {path} is empty")
    return dirs


def bench(seq_dirs, out_dir, config, annotate=False, workers=None):
    """Track every sequence and write an aggregate summary.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = [Path(d).name for d in seq_dirs]
    if len(set(names)) != len(names):
        raise SequenceError("sequence directory names must be unique")
    jobs = [(str(d), str(out / n), config.to_dict(), annotate) for d, n in zip(seq_dirs, names)]
    if workers is None:
        workers = int(os.environ.get("SHT_THREADS", "1") or 1)
    workers = max(1, min(workers, len(jobs)))
    if workers == 1:
        results = [_track_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_track_job, jobs))
    summary = {
        "sequences": [
            {k: r[k] for k in ("sequence", "frames", "average_overlap", "average_center_error",
                               "success_thresholds", "success_rate")}
            for r in results
        ],
        "average_overlap": float(np.mean([r["average_overlap"] for r in results])),
        "average_center_error": float(np.mean([r["average_center_error"] for r in results])),
        "success_thresholds": results[0]["success_thresholds"],
        "success_rate": [float(v) for v in np.mean([r["success_rate"] for r in results], axis=0)],
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def build_parser():
    p = argparse.ArgumentParser(prog="sht", description="Saliency-guided hierarchical tracker")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with TrackerConfig fields")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--ablate", action="append", choices=ABLATIONS, default=[],
                        help="disable a component (repeatable)")
        sp.add_argument("--annotate", action="store_true", help="write annotated PNG frames")

    t = sub.add_parser("track", help="track one OTB-layout sequence")
    t.add_argument("--seq", required=True, help="sequence directory")
    common(t)

    b = sub.add_parser("bench", help="track a list of sequences and aggregate")
    b.add_argument("--seq-list", required=True, help="text file, one sequence dir per line")
    b.add_argument("--workers", type=int, default=None, help="defaults to $SHT_THREADS or 1")
    common(b)

    s = sub.add_parser("synth", help="render a synthetic sequence")
    s.add_argument("--scenario", required=True, choices=SCENARIOS)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--frames", type=int, default=200)
    s.add_argument("--width", type=int, default=640)
    s.add_argument("--height", type=int, default=360)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "synth":
            seq = synth_sequence(args.scenario, args.out, args.seed, args.frames,
                                 (args.width, args.height))
            log.info("wrote %d frames to %s", len(seq), args.out)
            return 0
        cfg = load_config(args.config, args.seed, args.ablate)
        if args.command == "track":
            track_sequence(args.seq, args.out, cfg, args.annotate)
        else:
            summary = bench(read_seq_list(args.seq_list), args.out, cfg, args.annotate,
                            args.workers)
            log.info("mean overlap %.3f over %d sequences", summary["average_overlap"],
                     len(summary["sequences"]))
        return 0
    except (OSError, SequenceError, ConfigError, ValueError) as exc:
        print(f"sht: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
