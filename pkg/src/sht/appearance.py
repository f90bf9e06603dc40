"""Holistic grayscale appearance model.

Patches are coded against ``[B, I]``: an orthonormal PCA basis ``B`` plus
trivial (identity) templates that soak up occluded or outlier pixels. The
ridge problem

    min  ||r - B b - e||^2 + lam * ||b||^2 + lam_trivial * ||e||^2,   r = y - mean

separates because the trivial block is the identity: for fixed ``b`` the
optimal ``e`` is ``(r - B b) / (1 + lam_trivial)``, which leaves a small
``k x k`` system for ``b``. Its solution operator is cached per dictionary
update, so coding a batch of patches is one matrix product.
"""

from dataclasses import dataclass

import numpy as np


def normalize_patch(patch):
    """Vectorise, remove the pixel mean, scale to unit norm. Batched over leading axes."""
    p = np.asarray(patch, dtype=np.float64)
    if p.ndim == 2:
        v = p.ravel()
    else:
        v = p.reshape(p.shape[0], -1)
    v = v - v.mean(axis=-1, keepdims=True)
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.where(nrm > 0, v / np.where(nrm > 0, nrm, 1.0), 0.0)


@dataclass
class Coefficients:
    beta_b: np.ndarray  # (..., k)
    beta_e: np.ndarray  # (..., d)


class PcaDictionary:
    """Mean + orthonormal basis with buffered incremental SVD updates.

    ``sample_count`` is the effective (forgetting-weighted) number of
    observations behind ``mean``.
    """

    def __init__(self, mean, basis=None, singular_values=None, sample_count=1.0,
                 n_basis=16, batch_size=5, forgetting=0.95,
                 lam=0.01, lam_trivial=1.0):
        self.mean = np.array(mean, dtype=np.float64).ravel()
        d = self.mean.size
        self.basis = np.zeros((d, 0)) if basis is None else np.array(basis, dtype=np.float64)
        if singular_values is None:
            singular_values = np.ones(self.basis.shape[1])
        self.singular_values = np.array(singular_values, dtype=np.float64)
        self.sample_count = float(sample_count)
        self.n_basis = n_basis
        self.batch_size = batch_size
        self.forgetting = forgetting
        self.lam = lam
        self.lam_trivial = lam_trivial
        self.buffer = []
        if lam <= 0 or lam_trivial <= 0:
            raise ValueError("ridge weights must be positive")
        self._refresh()

    @property
    def dim(self):
        return self.mean.size

    @property
    def rank(self):
        return self.basis.shape[1]

    def _refresh(self):
        b = self.basis
        rho = self.lam_trivial / (1.0 + self.lam_trivial)
        gram = rho * (b.T @ b) + self.lam * np.eye(b.shape[1])
        self.projection = np.linalg.solve(gram, rho * b.T) if b.shape[1] else np.zeros((0, self.dim))

    # -- coding ------------------------------------------------------------

    def code(self, y):
        """Ridge coefficients for one vector ``(d,)`` or a batch ``(n, d)``."""
        r = np.asarray(y, dtype=np.float64) - self.mean
        bb = r @ self.projection.T
        be = (r - bb @ self.basis.T) / (1.0 + self.lam_trivial)
        return Coefficients(bb, be)

    def reconstruction_error(self, y, coeffs):
        """``||(y - mean) - B b||^2`` -- the appearance error used in fusion."""
        r = np.asarray(y, dtype=np.float64) - self.mean
        return np.sum((r - coeffs.beta_b @ self.basis.T) ** 2, axis=-1)

    def likelihood(self, y, coeffs, delta_c=0.1):
        """``exp(-||r - B b - e||^2 - delta_c * ||e||_1)``."""
        if delta_c < 0:
            raise ValueError("delta_c must be nonnegative")
        r = np.asarray(y, dtype=np.float64) - self.mean
        res = r - coeffs.beta_b @ self.basis.T - coeffs.beta_e
        return np.exp(-np.sum(res ** 2, axis=-1) - delta_c * np.sum(np.abs(coeffs.beta_e), axis=-1))

    def confidence(self, y, delta_c=0.1):
        return self.likelihood(y, self.code(y), delta_c)

    # -- update ------------------------------------------------------------

    def update(self, y):
        """Queue one observation; absorb the queue once it holds ``batch_size``.

        Returns True when an absorb happened.
        """
        self.buffer.append(np.asarray(y, dtype=np.float64).ravel().copy())
        if len(self.buffer) < self.batch_size:
            return False
        self.absorb(np.array(self.buffer))
        self.buffer = []
        return True

    def absorb(self, data):
        """Incremental SVD step with forgetting over the rows of ``data``."""
        data = np.atleast_2d(data)
        m = data.shape[0]
        ff = self.forgetting
        n = self.sample_count
        mu_new = data.mean(axis=0)
        mu = (ff * n * self.mean + m * mu_new) / (ff * n + m)
        cols = np.column_stack([(data - mu_new).T,
                                np.sqrt(n * m / (n + m)) * (mu_new - self.mean)])
        u = self.basis
        proj = u.T @ cols
        res = cols - u @ proj
        # second pass keeps the new directions orthogonal to the old basis
        corr = u.T @ res
        res -= u @ corr
        proj += corr
        q, _ = np.linalg.qr(res)
        k = u.shape[1]
        big = np.zeros((k + q.shape[1], k + cols.shape[1]))
        big[:k, :k] = ff * np.diag(self.singular_values)
        big[:k, k:] = proj
        big[k:, k:] = q.T @ res
        u2, s2, _ = np.linalg.svd(big, full_matrices=False)
        keep = s2 ** 2 >= max(np.sum(s2 ** 2) * 1e-6, 1e-24)
        keep[self.n_basis:] = False
        basis = np.column_stack([u, q]) @ u2[:, keep]
        # polish orthonormality lost to round-off
        basis, rr = np.linalg.qr(basis)
        sgn = np.sign(np.diag(rr))
        basis *= np.where(sgn == 0, 1.0, sgn)
        self.basis = basis
        self.singular_values = s2[keep]
        self.mean = mu
        self.sample_count = ff * n + m
        self._refresh()
