import json

import numpy as np
import pytest

from sht.appearance import normalize_patch
from sht.features import affine_crop, build_feature_stack, to_gray
from sht.particle import AffineState, make_rng, propagate
from sht.saliency import groundtruth_map
from sht.sequence import read_frame, synth_sequence
from sht.tracker import MODES, ConfigError, Tracker, TrackerConfig


@pytest.fixture(scope="module")
def seq(tmp_path_factory):
    out = tmp_path_factory.mktemp("seq")
    return synth_sequence("abrupt-jump", out, seed=2, n_frames=6, size=(240, 180))


def _frames(seq):
    return [read_frame(p) for p in seq.frames]


def test_config_defaults_and_validation(tmp_path):
    cfg = TrackerConfig()
    assert cfg.weight_threshold == pytest.approx(0.45)
    assert cfg.n_particles == 600 and cfg.n_superpixel_candidates == 70 and cfg.n_refine == 5
    with pytest.raises(ConfigError):
        TrackerConfig(tau_low=0.1)
    with pytest.raises(ConfigError):
        TrackerConfig(tau_high=0.9)
    with pytest.raises(ConfigError):
        TrackerConfig(mu_appearance=0.7, mu_histogram=0.7)
    with pytest.raises(ConfigError):
        TrackerConfig.from_dict({"n_particles": 10, "bogus": 1})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({**cfg.to_dict(), "seed": 4}))
    assert TrackerConfig.from_json(path).seed == 4
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        TrackerConfig.from_json(path)


def test_with_ablation():
    cfg = TrackerConfig().with_ablation("nsgs", "nlrs")
    assert cfg.disable_global and cfg.disable_refinement and not cfg.disable_superpixel
    with pytest.raises(ConfigError):
        TrackerConfig().with_ablation("nope")


def test_init_state(seq):
    frame = read_frame(seq.frames[0])
    box = tuple(seq.groundtruth[0])
    tr = Tracker(frame, box, TrackerConfig())
    assert tr.estimate.to_box() == pytest.approx(box, abs=1e-9)
    assert np.all(tr.template.bins > 0)
    f = build_feature_stack(frame).reshape(19, -1).T
    x = groundtruth_map(box, frame.shape).ravel().astype(float)
    lam = tr.config.saliency_ridge
    assert np.abs((f.T @ f + lam * np.eye(19)) @ tr.weights - f.T @ x).max() <= 1e-8


def test_init_rejects_box_outside(seq):
    frame = read_frame(seq.frames[0])
    with pytest.raises(ValueError):
        Tracker(frame, (230, 10, 30, 30))
    with pytest.raises(ValueError):
        Tracker(frame, (-5, 10, 30, 30))


def test_step_modes_and_weight_gating(seq):
    frames = _frames(seq)
    tr = Tracker(frames[0], seq.groundtruth[0], TrackerConfig())
    for fr in frames[1:]:
        w_before = tr.weights.copy()
        _, diag = tr.step(fr)
        assert diag.mode in MODES
        theta = diag.theta_star
        if not (theta > tr.config.weight_threshold):
            assert np.array_equal(tr.weights, w_before) and not diag.weights_updated
        if diag.mode == "global-only":
            assert not diag.template_updated
        else:
            assert diag.template_updated


def test_step_rejects_other_shape(seq):
    tr = Tracker(read_frame(seq.frames[0]), seq.groundtruth[0])
    with pytest.raises(ValueError):
        tr.step(np.zeros((10, 10, 3)))


def test_nsgs_never_uses_global(seq):
    frames = _frames(seq)
    tr = Tracker(frames[0], seq.groundtruth[0], TrackerConfig(disable_global=True))
    for fr in frames[1:]:
        _, diag = tr.step(fr)
        assert diag.mode == "local-fallback" and diag.n_regions == 0


def test_exact_candidate_fires_global_only():
    # 200x200 frame: map and frame coordinates coincide, and a symmetric
    # target's rounded centroid lands on the box centre, so one candidate
    # crops exactly the initial patch
    frame = np.full((200, 200, 3), 0.2)
    box = (80, 60, 32, 32)
    yy, xx = np.mgrid[0:32, 0:32]
    frame[60:92, 80:112] = [0.9, 0.3, 0.2]
    frame[60:92, 80:112][((yy // 4 + xx // 4) % 2) == 0] = [0.6, 0.1, 0.1]
    cfg = TrackerConfig(tau_low=0.2, tau_high=0.4)
    tr = Tracker(frame, box, cfg)
    est, diag = tr.step(frame)
    assert (96.0, 76.0) in [c.center for c in diag.candidates]
    assert diag.theta_star == pytest.approx(1.0, abs=1e-12)
    assert diag.mode == "global-only"
    assert est.to_box() == pytest.approx(box, abs=1e-9)


def test_no_regions_falls_back():
    frame = np.full((120, 160, 3), 0.5)
    tr = Tracker(frame, (60, 40, 30, 30))
    _, diag = tr.step(frame)
    assert diag.n_regions == 0
    assert diag.mode == "local-fallback"


def test_run_is_reproducible(seq):
    frames = _frames(seq)
    runs = []
    for _ in range(2):
        tr = Tracker(frames[0], seq.groundtruth[0], TrackerConfig(seed=11))
        runs.append([tr.step(f)[0].as_array() for f in frames[1:]])
    assert all(np.array_equal(a, b) for a, b in zip(*runs))


def test_full_ablation_is_plain_map(seq):
    frames = _frames(seq)
    cfg = TrackerConfig(seed=5).with_ablation("nsgs", "nsm", "nlrs")
    tr = Tracker(frames[0], seq.groundtruth[0], cfg)
    for fr in frames[1:]:
        prev = tr.estimate
        dic = tr.dictionary
        # the reduced path: propagate, code, pick the best confidence
        params = propagate(prev, cfg.motion_std, cfg.n_particles,
                           make_rng((cfg.seed, tr.frame_index + 1)))
        y = normalize_patch(np.stack([affine_crop(to_gray(fr), p, 32) for p in params]))
        conf = dic.likelihood(y, dic.code(y), cfg.l1_weight)
        expected = AffineState.from_array(params[int(np.argmax(conf))])
        est, _ = tr.step(fr)
        assert est == tr._clamp(expected)
