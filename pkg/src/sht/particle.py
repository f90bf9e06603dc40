"""Affine target state, random-walk proposals and MAP / top-k selection.

State layout is ``(d1, d2, theta, scale, aspect, skew)``:

* ``d1, d2``  -- centre of the target in continuous frame coordinates
  (pixel ``i`` spans ``[i, i + 1)``),
* ``theta``   -- rotation in radians,
* ``scale``   -- box width divided by :data:`REFERENCE_SIDE`,
* ``aspect``  -- box height over box width,
* ``skew``    -- horizontal shear.

The unit square ``[-0.5, 0.5]^2`` maps into the frame through
``centre + R(theta) @ [[1, skew], [0, 1]] @ diag(width, height)``.
"""

from dataclasses import dataclass, astuple

import numpy as np

REFERENCE_SIDE = 32.0
N_PARAMS = 6


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class AffineState:
    d1: float
    d2: float
    theta: float = 0.0
    scale: float = 1.0
    aspect: float = 1.0
    skew: float = 0.0

    def __post_init__(self):
        vals = astuple(self)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidStateError(f"non-finite state {vals}")
        if self.scale <= 0 or self.aspect <= 0:
            raise InvalidStateError(f"scale and aspect must be positive, got {vals}")

    def as_array(self):
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        return cls(*(float(v) for v in arr[:N_PARAMS]))

    @classmethod
    def from_box(cls, box):
        """Axis-aligned ``(x, y, w, h)`` box -> state with no rotation or skew."""
        x, y, w, h = (float(v) for v in box)
        if w <= 0 or h <= 0:
            raise InvalidStateError(f"box needs positive size, got {box}")
        return cls(x + w / 2.0, y + h / 2.0, 0.0, w / REFERENCE_SIDE, h / w, 0.0)

    @property
    def width(self):
        return REFERENCE_SIDE * self.scale

    @property
    def height(self):
        return REFERENCE_SIDE * self.scale * self.aspect

    @property
    def center(self):
        return self.d1, self.d2

    def with_center(self, d1, d2):
        return AffineState(float(d1), float(d2), self.theta, self.scale, self.aspect, self.skew)

    def matrix(self):
        return affine_matrix(self.as_array())

    def to_box(self):
        """Axis-aligned bounding box ``(x, y, w, h)`` of the warped unit square."""
        corners = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
        pts = corners @ self.matrix().T + np.array(self.center)
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        return (float(lo[0]), float(lo[1]), float(hi[0] - lo[0]), float(hi[1] - lo[1]))


def affine_matrix(params):
    """2x2 linear part for one state vector."""
    _, _, theta, s, a, k = params
    c, sn = np.cos(theta), np.sin(theta)
    w = REFERENCE_SIDE * s
    h = w * a
    rot = np.array([[c, -sn], [sn, c]])
    shear = np.array([[1.0, k], [0.0, 1.0]])
    return rot @ shear @ np.diag([w, h])


def affine_matrices(params):
    """Vectorised :func:`affine_matrix` for an ``(n, 6)`` array -> ``(n, 2, 2)``."""
    p = np.atleast_2d(np.asarray(params, dtype=np.float64))
    c, sn = np.cos(p[:, 2]), np.sin(p[:, 2])
    w = REFERENCE_SIDE * p[:, 3]
    h = w * p[:, 4]
    k = p[:, 5]
    out = np.empty((p.shape[0], 2, 2))
    out[:, 0, 0] = c * w
    out[:, 0, 1] = (c * k - sn) * h
    out[:, 1, 0] = sn * w
    out[:, 1, 1] = (sn * k + c) * h
    return out


@dataclass
class Particle:
    state: AffineState
    likelihood: float

    def __post_init__(self):
        if not self.likelihood >= 0:
            raise ValueError(f"likelihood must be nonnegative, got {self.likelihood}")


def make_rng(seed):
    """Counter-based generator; ``seed`` may be an int or a tuple of ints."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def propagate(center, motion_std, n, seed=0):
    """Draw ``n`` random-walk proposals around ``center``; returns an ``(n, 6)`` array.

    ``seed`` is either an int / tuple for :func:`make_rng` or a ready
    ``numpy.random.Generator``.
    """
    if n < 1:
        raise ValueError("need at least one particle")
    base = center.as_array() if isinstance(center, AffineState) else np.asarray(center, float)
    std = np.asarray(motion_std, dtype=np.float64)
    if std.shape != (N_PARAMS,) or np.any(std < 0):
        raise ValueError(f"motion_std must be 6 nonnegative values, got {motion_std}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    out = base + rng.standard_normal((n, N_PARAMS)) * std
    # keep scale / aspect in the valid domain
    out[:, 3:5] = np.maximum(out[:, 3:5], 1e-3)
    return out


def _likelihoods(particles):
    return np.array([p.likelihood for p in particles], dtype=np.float64)


def argmax_first(values):
    """Index of the maximum, lowest index on ties."""
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("empty input")
    return int(np.argmax(values))


def top_k_indices(values, k):
    """Indices of the ``k`` largest values, descending, stable on ties."""
    values = np.asarray(values, dtype=np.float64)
    if not 1 <= k <= values.size:
        raise ValueError(f"k={k} out of range for {values.size} particles")
    order = np.argsort(-values, kind="stable")
    return order[:k]


def map_estimate(particles):
    if len(particles) == 0:
        raise ValueError("map_estimate needs at least one particle")
    return particles[argmax_first(_likelihoods(particles))].state


def top_k(particles, k):
    idx = top_k_indices(_likelihoods(particles), k)
    return [particles[i] for i in idx]
