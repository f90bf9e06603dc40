import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sht.sequence import (GT_NAME, SCENARIOS, SequenceError, format_box, load_sequence,
                          parse_groundtruth, read_frame, synth_sequence, write_frame,
                          write_groundtruth)


def test_parse_formats(tmp_path):
    p = tmp_path / GT_NAME
    p.write_text("1,2,30,40\n11\t12 30 40\n\n5.5,6.25,7,8\n")
    gt = parse_groundtruth(p)
    assert gt.tolist() == [[0, 1, 30, 40], [10, 11, 30, 40], [4.5, 5.25, 7, 8]]


@pytest.mark.parametrize("text", ["1,2,3\n", "1,2,a,4\n", "1,2,0,4\n", "1,2,nan,4\n", ""])
def test_parse_errors(tmp_path, text):
    p = tmp_path / GT_NAME
    p.write_text(text)
    with pytest.raises(SequenceError):
        parse_groundtruth(p)


def test_parse_error_names_line(tmp_path):
    p = tmp_path / GT_NAME
    p.write_text("1,2,3,4\n1,2,3\n")
    with pytest.raises(SequenceError, match=":2:"):
        parse_groundtruth(p)


@settings(max_examples=200)
@given(st.floats(-1000, 1000), st.floats(-1000, 1000), st.floats(1, 500), st.floats(1, 500))
def test_groundtruth_load_write_load(x, y, w, h):
    import pathlib
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        p = pathlib.Path(d) / GT_NAME
        p.write_text(f"{x!r},{y!r},{w!r},{h!r}\n")
        first = parse_groundtruth(p)
        write_groundtruth(p, first)
        assert parse_groundtruth(p).tolist() == first.tolist()


def test_format_box_integers():
    assert format_box((0.0, 9.0, 30.0, 40.0)) == "1,10,30,40"


def test_load_errors(tmp_path):
    with pytest.raises(SequenceError):
        load_sequence(tmp_path)
    (tmp_path / "img").mkdir()
    with pytest.raises(SequenceError):
        load_sequence(tmp_path)
    write_frame(tmp_path / "img" / "0001.png", np.zeros((4, 4, 3)))
    with pytest.raises(SequenceError):
        load_sequence(tmp_path)
    write_groundtruth(tmp_path / GT_NAME, [(0, 0, 2, 2), (0, 0, 2, 2)])
    with pytest.raises(SequenceError):
        load_sequence(tmp_path)


def test_sequence_round_trip(tmp_path):
    seq = synth_sequence("smooth-motion", tmp_path / "a", seed=1, n_frames=4, size=(80, 64))
    out = tmp_path / "b"
    (out / "img").mkdir(parents=True)
    for p in seq.frames:
        write_frame(out / "img" / p.name, read_frame(p))
    write_groundtruth(out / GT_NAME, seq.groundtruth)
    again = load_sequence(out)
    assert np.array_equal(again.groundtruth, seq.groundtruth)
    for a, b in zip(seq.frames, again.frames):
        assert np.array_equal(read_frame(a), read_frame(b))


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_synth_scenarios(tmp_path, scenario):
    seq = synth_sequence(scenario, tmp_path, seed=0, n_frames=3, size=(160, 120))
    assert len(seq) == 3 and seq.groundtruth.shape == (3, 4)
    assert read_frame(seq.frames[0]).shape == (120, 160, 3)
    x, y, w, h = seq.groundtruth.T
    assert np.all(x >= 0) and np.all(y >= 0) and np.all(x + w <= 160) and np.all(y + h <= 120)


def test_abrupt_jumps_are_large(tmp_path):
    seq = synth_sequence("abrupt-jump", tmp_path, seed=0, n_frames=120, size=(640, 360))
    c = seq.groundtruth[:, :2] + seq.groundtruth[:, 2:] / 2
    step = np.hypot(*np.diff(c, axis=0).T)
    jumps = np.flatnonzero(step > 50) + 1
    assert list(jumps) == [50, 100]
    assert step[step <= 50].max() <= 6


def test_synth_unknown_scenario(tmp_path):
    with pytest.raises(ValueError):
        synth_sequence("teleport", tmp_path)
