import csv
import json

import numpy as np
import pytest

from sht.cli import main, read_seq_list
from sht.sequence import SequenceError, synth_sequence


@pytest.fixture(scope="module")
def small_seq(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "smooth"
    synth_sequence("smooth-motion", out, seed=3, n_frames=10, size=(200, 150))
    return out


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_track_writes_outputs(small_seq, tmp_path):
    assert main(["track", "--seq", str(small_seq), "--out", str(tmp_path), "--annotate"]) == 0
    rows = _rows(tmp_path / "results.csv")
    assert rows[0] == ["frame", "x", "y", "w", "h", "confidence", "mode"]
    assert len(rows) == 11
    assert rows[1][-1] == "init"
    m = json.loads((tmp_path / "metrics.json").read_text())
    assert m["frames"] == 10 and len(m["success_rate"]) == 11
    assert len(list((tmp_path / "frames").glob("*.png"))) == 10


def test_track_nsgs_never_global(small_seq, tmp_path):
    assert main(["track", "--seq", str(small_seq), "--out", str(tmp_path), "--ablate", "nsgs"]) == 0
    modes = {r[-1] for r in _rows(tmp_path / "results.csv")[2:]}
    assert modes == {"local-fallback"}


def test_bench_aggregates(small_seq, tmp_path):
    other = tmp_path / "occ"
    synth_sequence("occlusion", other, seed=4, n_frames=6, size=(200, 150))
    lst = tmp_path / "list.txt"
    lst.write_text(f"# two sequences\n{small_seq}\nocc\n")
    out = tmp_path / "out"
    assert main(["bench", "--seq-list", str(lst), "--out", str(out), "--ablate", "nsm"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    per = [json.loads((out / n / "metrics.json").read_text()) for n in ("smooth", "occ")]
    assert summary["average_overlap"] == pytest.approx(np.mean([p["average_overlap"] for p in per]))
    assert summary["average_center_error"] == pytest.approx(
        np.mean([p["average_center_error"] for p in per]))
    assert summary["success_rate"] == pytest.approx(
        list(np.mean([p["success_rate"] for p in per], axis=0)))


def test_synth_command(tmp_path):
    assert main(["synth", "--scenario", "occlusion", "--out", str(tmp_path), "--frames", "2",
                 "--width", "120", "--height", "90"]) == 0
    assert len(list((tmp_path / "img").glob("*.png"))) == 2


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["track", "--seq", str(tmp_path / "missing"), "--out", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "cfg.json"
    bad.write_text('{"unknown_key": 1}')
    assert main(["track", "--seq", str(tmp_path), "--out", str(tmp_path),
                 "--config", str(bad)]) != 0
    bad.write_text("{not json")
    assert main(["track", "--seq", str(tmp_path), "--out", str(tmp_path),
                 "--config", str(bad)]) != 0


def test_seq_list_errors(tmp_path):
    p = tmp_path / "l.txt"
    p.write_text("# nothing\n")
    with pytest.raises(SequenceError):
        read_seq_list(p)
    with pytest.raises(SequenceError):
        read_seq_list(tmp_path / "nope.txt")
