"""Seedable random spectra, Haar (CUE) unitaries and random density matrices."""

from __future__ import annotations

import numpy as np

from .linalg import dagger
from .mems import check_spectrum


class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys,
    so ``substream(i)`` gives a statistically independent child whose draws
    depend only on ``(seed, stream_id, i)`` and not on how work is scheduled.
    """

    def __init__(self, seed: int, stream_id: int = 0, _key: tuple = ()):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.key = (self.stream_id, *_key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, (*self.key[1:], int(index)))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def _gen(rng) -> np.random.Generator:
    return rng.generator if isinstance(rng, RngStream) else rng


def sample_spectrum(rng, size: int | None = None) -> np.ndarray:
    """Uniform (flat Dirichlet) point on the probability simplex, sorted descending."""
    g = _gen(rng)
    shape = (4,) if size is None else (size, 4)
    x = g.standard_exponential(shape)
    p = x / x.sum(axis=-1, keepdims=True)
    return -np.sort(-p, axis=-1)


def haar_from_gaussian(z: np.ndarray) -> np.ndarray:
    """Map complex Ginibre matrices to Haar unitaries via QR with phase fixing.

    ``Q`` alone is not Haar distributed; multiplying each column by the
    phase of the matching diagonal entry of ``R`` makes it so.
    """
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def sample_cue(rng, size: int | None = None, n: int = 4) -> np.ndarray:
    """Haar-random ``n x n`` unitary (or a stack of ``size`` of them)."""
    g = _gen(rng)
    shape = (n, n, 2) if size is None else (size, n, n, 2)
    # One draw call for real and imaginary parts keeps sample prefixes stable.
    x = g.standard_normal(shape)
    z = (x[..., 0] + 1j * x[..., 1]) / np.sqrt(2.0)
    return haar_from_gaussian(z)


def sample_density(rng, p, size: int | None = None) -> np.ndarray:
    """``U diag(p) U^dagger`` with Haar-random ``U``; the spectrum is kept exactly.

    ``p`` may be one spectrum or one per sample, shape ``(size, 4)``.
    """
    p = check_spectrum(p, stacked=True)
    if p.ndim == 2:
        p = p[:, None, :]
    u = sample_cue(rng, size=size)
    return conjugate_diagonal(u, p)


def conjugate_diagonal(u: np.ndarray, p: np.ndarray) -> np.ndarray:
    rho = (u * p) @ dagger(u)
    return 0.5 * (rho + dagger(rho))
