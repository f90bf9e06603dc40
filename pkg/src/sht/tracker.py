"""The full tracking loop: saliency-guided global search, the integration
rule that gates the local search, superpixel-fused local search, refinement
and the per-frame model updates."""

import json
import logging
from dataclasses import dataclass, field, fields, asdict

import numpy as np

from .appearance import PcaDictionary, normalize_patch
from .features import (SKIN_MEAN, SKIN_STD, affine_crop, affine_crop_many,
                       build_feature_stack, check_frame, to_gray)
from .particle import AffineState, make_rng, propagate, top_k_indices
from .refine import combine_states, joint_likelihood, refine
from .saliency import (frame_to_map, generate_candidates, groundtruth_map,
                       saliency_search, update_weights)
from .superpixel import HistTemplate, hist_error, patch_histogram, similarity, update_template

log = logging.getLogger(__name__)

MODES = ("global-only", "local-guided", "local-fallback")


class ConfigError(ValueError):
    pass


@dataclass
class TrackerConfig:
    # particle filter
    n_particles: int = 600
    motion_std: tuple = (8.0, 8.0, 0.01, 0.02, 0.002, 0.001)
    seed: int = 0
    # saliency
    saliency_ridge: float = 0.05
    penalty_scale: float = 2.0
    penalty_form: str = "exp"
    binarize_threshold: float = 0.7
    min_region_area: int = 40
    skin_mean: tuple = SKIN_MEAN
    skin_std: tuple = SKIN_STD
    # integration thresholds; weight_threshold None -> midpoint
    tau_low: float = 0.3
    tau_high: float = 0.6
    weight_threshold: float = None
    # appearance model
    template_side: int = 32
    n_basis: int = 16
    coding_ridge: float = 0.01
    trivial_ridge: float = 1.0
    l1_weight: float = 0.1
    update_batch: int = 5
    forgetting: float = 0.95
    # superpixel matching
    n_superpixel_candidates: int = 70
    n_superpixels: int = 50
    slic_compactness: float = 10.0
    slic_side: int = 64
    hist_kernel: float = 10.0
    hist_learning_rate: float = 0.95
    hist_error_offset: float = 0.5
    mu_appearance: float = 0.5
    mu_histogram: float = 0.5
    # refinement
    n_refine: int = 5
    refine_ridge: float = 0.005
    refine_max_iter: int = 10
    refine_tol: float = 1e-6
    # ablations
    disable_global: bool = False
    disable_superpixel: bool = False
    disable_refinement: bool = False

    def __post_init__(self):
        self.motion_std = tuple(float(v) for v in self.motion_std)
        self.skin_mean = tuple(float(v) for v in self.skin_mean)
        self.skin_std = tuple(float(v) for v in self.skin_std)
        if self.weight_threshold is None:
            self.weight_threshold = 0.5 * (self.tau_low + self.tau_high)
        self.validate()

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(0.2 <= self.tau_low <= 0.45, "tau_low must lie in [0.2, 0.45]")
        need(0.4 <= self.tau_high <= 0.8, "tau_high must lie in [0.4, 0.8]")
        need(self.tau_low < self.weight_threshold < self.tau_high,
             "need tau_low < weight_threshold < tau_high")
        need(len(self.motion_std) == 6 and min(self.motion_std) >= 0,
             "motion_std needs 6 nonnegative values")
        need(len(self.skin_mean) == 2 and len(self.skin_std) == 2 and min(self.skin_std) > 0,
             "skin_mean / skin_std need two values each (std positive)")
        need(self.mu_appearance >= 0 and self.mu_histogram >= 0
             and abs(self.mu_appearance + self.mu_histogram - 1.0) < 1e-9,
             "mu_appearance + mu_histogram must equal 1")
        need(1 <= self.n_refine <= 10, "n_refine must lie in [1, 10]")
        need(self.n_refine <= self.n_superpixel_candidates <= self.n_particles,
             "need n_refine <= n_superpixel_candidates <= n_particles")
        for name in ("saliency_ridge", "penalty_scale", "coding_ridge", "trivial_ridge",
                     "refine_ridge", "slic_compactness", "hist_kernel", "hist_error_offset"):
            need(getattr(self, name) > 0, f"{name} must be positive")
        need(self.l1_weight >= 0, "l1_weight must be nonnegative")
        need(0 < self.binarize_threshold < 1, "binarize_threshold must lie in (0, 1)")
        need(self.min_region_area >= 1, "min_region_area must be >= 1")
        need(0 <= self.hist_learning_rate <= 1 and 0 < self.forgetting <= 1,
             "learning rates must lie in [0, 1]")
        need(self.penalty_form in ("exp", "linear"), "penalty_form must be 'exp' or 'linear'")
        need(self.refine_max_iter >= 1 and self.update_batch >= 1 and self.n_basis >= 1,
             "iteration / batch counts must be >= 1")
        need(1 <= self.n_superpixels <= self.slic_side ** 2, "n_superpixels out of range")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)

    def with_ablation(self, *names):
        flags = {"nsgs": "disable_global", "nsm": "disable_superpixel",
                 "nlrs": "disable_refinement"}
        data = self.to_dict()
        for n in names:
            if n not in flags:
                raise ConfigError(f"unknown ablation {n!r}")
            data[flags[n]] = True
        return TrackerConfig.from_dict(data)


@dataclass
class StepDiagnostics:
    frame_index: int
    mode: str = "local-fallback"
    theta_star: float = float("nan")
    n_regions: int = 0
    confidence: float = float("nan")
    weights_updated: bool = False
    template_updated: bool = False
    alpha: np.ndarray = None
    candidates: list = field(default_factory=list)


class Tracker:
    """Single-sequence tracker state. ``step`` calls must be sequential."""

    def __init__(self, first_frame, initial_box, config=None):
        cfg = config or TrackerConfig()
        self.config = cfg
        frame = check_frame(first_frame)
        h, w = frame.shape[:2]
        x, y, bw, bh = (float(v) for v in initial_box)
        tol = 1e-6
        if bw <= 0 or bh <= 0 or x < -tol or y < -tol or x + bw > w + tol or y + bh > h + tol:
            raise ValueError(f"initial box {initial_box} is not inside the {w}x{h} frame")
        self.frame_shape = frame.shape
        self.frame_index = 0
        self.estimate = AffineState.from_box((x, y, bw, bh))
        gray = to_gray(frame)
        patch = normalize_patch(affine_crop(gray, self.estimate, cfg.template_side))
        self.dictionary = PcaDictionary(
            patch, n_basis=cfg.n_basis, batch_size=cfg.update_batch,
            forgetting=cfg.forgetting, lam=cfg.coding_ridge, lam_trivial=cfg.trivial_ridge)
        color = np.clip(affine_crop(frame, self.estimate, cfg.slic_side), 0.0, 1.0)
        self.template = HistTemplate(
            patch_histogram(color, cfg.n_superpixels, cfg.slic_compactness, cfg.hist_kernel),
            cfg.hist_learning_rate)
        stack = self._features(frame)
        self.weights = update_weights(stack, groundtruth_map((x, y, bw, bh), frame.shape),
                                      cfg.saliency_ridge)

    # ------------------------------------------------------------------

    def _features(self, frame):
        return build_feature_stack(frame, self.config.skin_mean, self.config.skin_std)

    @property
    def last_center(self):
        return self.estimate.center

    def global_search(self, frame, gray, stack):
        """Candidate states from the saliency map and their appearance confidences."""
        cfg = self.config
        p_c = frame_to_map(*self.estimate.center, frame.shape)
        sal = saliency_search(stack, self.weights, p_c, cfg.penalty_scale,
                              cfg.binarize_threshold, cfg.min_region_area, cfg.penalty_form)
        cands = generate_candidates([r.center for r in sal.regions], self.estimate, frame.shape)
        if not cands:
            return sal, cands, np.zeros(0)
        params = np.array([c.as_array() for c in cands])
        y = normalize_patch(affine_crop_many(gray, params, cfg.template_side))
        return sal, cands, self.dictionary.confidence(y, cfg.l1_weight)

    def local_search(self, frame, gray, center, diag):
        cfg = self.config
        rng = make_rng((cfg.seed, self.frame_index))
        params = propagate(center, cfg.motion_std, cfg.n_particles, rng)
        y = normalize_patch(affine_crop_many(gray, params, cfg.template_side))
        coeffs = self.dictionary.code(y)
        conf = self.dictionary.likelihood(y, coeffs, cfg.l1_weight)
        top = top_k_indices(conf, cfg.n_superpixel_candidates)

        hists = None
        if cfg.disable_superpixel:
            fused = conf[top]
        else:
            color = np.clip(affine_crop_many(frame, params[top], cfg.slic_side), 0.0, 1.0)
            hists = np.array([patch_histogram(c, cfg.n_superpixels, cfg.slic_compactness,
                                              cfg.hist_kernel) for c in color])
            e_hist = hist_error([similarity(h, self.template.bins) for h in hists],
                                cfg.hist_error_offset)
            r = y[top] - self.dictionary.mean
            e_app = np.sum((r - coeffs.beta_b[top] @ self.dictionary.basis.T) ** 2, axis=1)
            fused = joint_likelihood(e_app, e_hist, cfg.mu_appearance, cfg.mu_histogram)

        order = top_k_indices(fused, min(cfg.n_refine, fused.size))
        chosen = top[order]
        if cfg.disable_refinement:
            est = params[chosen[0]]
        else:
            m = (y[chosen] - self.dictionary.mean).T
            sol = refine(m, self.dictionary.basis, fused[order], cfg.refine_ridge,
                         cfg.refine_max_iter, cfg.refine_tol)
            diag.alpha = sol.alpha
            est = combine_states(params[chosen], sol.alpha).as_array()

        if hists is not None:
            self.template = update_template(self.template, hists[order[0]])
            diag.template_updated = True
        return AffineState.from_array(est)

    def _clamp(self, state):
        h, w = self.frame_shape[:2]
        return state.with_center(min(max(state.d1, 0.0), w), min(max(state.d2, 0.0), h))

    def step(self, frame):
        """Track one frame; returns ``(estimate, diagnostics)``."""
        cfg = self.config
        frame = check_frame(frame)
        if frame.shape != self.frame_shape:
            raise ValueError(f"frame shape {frame.shape} differs from {self.frame_shape}")
        self.frame_index += 1
        diag = StepDiagnostics(self.frame_index)
        gray = to_gray(frame)

        stack = None
        theta_star = None
        best = None
        if not cfg.disable_global:
            stack = self._features(frame)
            sal, cands, conf = self.global_search(frame, gray, stack)
            diag.n_regions = len(sal.regions)
            diag.candidates = cands
            if len(cands):
                i = int(np.argmax(conf))
                theta_star = float(conf[i])
                best = cands[i]
                diag.theta_star = theta_star

        if theta_star is not None and theta_star > cfg.tau_high:
            diag.mode = "global-only"
            estimate = best
        elif theta_star is not None and theta_star > cfg.tau_low:
            diag.mode = "local-guided"
            estimate = self.local_search(frame, gray, self.estimate.with_center(*best.center), diag)
        else:
            diag.mode = "local-fallback"
            estimate = self.local_search(frame, gray, self.estimate, diag)
        estimate = self._clamp(estimate)

        y = normalize_patch(affine_crop(gray, estimate, cfg.template_side))
        diag.confidence = float(self.dictionary.confidence(y, cfg.l1_weight))
        self.dictionary.update(y)

        if stack is not None and theta_star is not None and theta_star > cfg.weight_threshold:
            mask = groundtruth_map(estimate.to_box(), frame.shape)
            self.weights = update_weights(stack, mask, cfg.saliency_ridge)
            diag.weights_updated = True

        self.estimate = estimate
        log.debug("frame %d mode=%s theta*=%.3f conf=%.3f", self.frame_index, diag.mode,
                  diag.theta_star, diag.confidence)
        return estimate, diag
