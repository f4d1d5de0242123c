"""Superpixel-guided clustering of a masked support feature map into prototypes."""
from __future__ import annotations

from itertools import islice
from typing import Iterator, Sequence

import numpy as np

from .core import (
    DimMismatch,
    EmptyMask,
    NonPositiveFactor,
    PrototypeSet,
    SeedOutsideMask,
    SgcConfig,
    adaptive_prototype_count,
    as_feature_map,
    as_mask,
    masked_average_pool,
)
from .seeding import place_seeds


def augment_coordinates(feat, r: float) -> np.ndarray:
    """Append ``row / r`` and ``col / r`` channels to a ``(c, h, w)`` map.

    Squared distance in the augmented space is then ``d_f**2 + (d_s / r)**2``.
    """
    if not r > 0:
        raise NonPositiveFactor(f"spatial factor must be positive, got {r}")
    feat = as_feature_map(feat)
    _, h, w = feat.shape
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    coords = np.stack([rows, cols]).astype(np.float64) / r
    return np.concatenate([feat, coords], axis=0)


def extract_masked(feat, mask) -> np.ndarray:
    """Gather the ``(N_m, channels)`` pixel vectors under ``mask`` in row-major order."""
    feat = as_feature_map(feat)
    mask = as_mask(mask, feat.shape[1:])
    if not mask.any():
        raise EmptyMask("no foreground pixels to extract")
    return feat[:, mask].T.copy()


def init_centroids(masked: np.ndarray, seeds: Sequence[tuple[int, int]], mask) -> np.ndarray:
    """Initial centroids: the masked rows sitting at each seed pixel."""
    mask = as_mask(mask)
    # row index of every foreground pixel inside ``masked``
    order = np.full(mask.shape, -1, dtype=np.int64)
    order[mask] = np.arange(int(mask.sum()))
    rows = []
    for r, c in seeds:
        if not (0 <= r < mask.shape[0] and 0 <= c < mask.shape[1]) or order[r, c] < 0:
            raise SeedOutsideMask(f"seed {(r, c)} is not a foreground pixel")
        rows.append(order[r, c])
    return masked[np.asarray(rows, dtype=np.int64)].reshape(len(rows), masked.shape[1]).copy()


def association(masked: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Soft pixel-to-centroid weights ``exp(-||x_p - s_i||**2)``.

    All entries are divided by the same constant (the largest weight) so the
    best match is exactly 1; a single global scale cancels in the centroid
    update.
    """
    masked = np.asarray(masked, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    if masked.ndim != 2 or centroids.ndim != 2 or masked.shape[1] != centroids.shape[1]:
        raise DimMismatch(
            f"pixel vectors {masked.shape} and centroids {centroids.shape} disagree"
        )
    diff = masked[:, None, :] - centroids[None, :, :]
    exponent = -np.einsum("pic,pic->pi", diff, diff)
    return np.exp(exponent - exponent.max())


def update_centroids(masked: np.ndarray, q: np.ndarray, prev: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Weighted mean of pixel vectors per centroid; near-empty centroids stay put."""
    z = q.sum(axis=0)
    weighted = q.T @ masked
    out = np.array(prev, dtype=np.float64, copy=True)
    live = z >= eps
    # a convex combination cannot leave the per-channel data range; clip away rounding
    out[live] = np.clip(weighted[live] / z[live, None], masked.min(axis=0), masked.max(axis=0))
    return out


def iterate_centroids(masked: np.ndarray, centroids: np.ndarray, eps: float = 1e-12) -> Iterator[np.ndarray]:
    """Yield the centroids after each association/update round, forever."""
    while True:
        centroids = update_centroids(masked, association(masked, centroids), centroids, eps)
        yield centroids


def sgc_cluster(feat, mask, cfg: SgcConfig | None = None, shot: int = 0) -> PrototypeSet:
    """Cluster the masked support feature into adaptive-count prototypes.

    Falls back to masked average pooling when the mask is too small to
    warrant more than one prototype.
    """
    cfg = cfg or SgcConfig()
    feat = as_feature_map(feat)
    mask = as_mask(mask, feat.shape[1:])
    n_m = int(mask.sum())
    if n_m == 0:
        raise EmptyMask("support mask is empty")
    n = adaptive_prototype_count(n_m, cfg)
    if n <= 1:
        return masked_average_pool(feat, mask, shot=shot)

    masked = extract_masked(augment_coordinates(feat, cfg.r), mask)
    centroids = init_centroids(masked, place_seeds(mask, n), mask)
    for centroids in islice(iterate_centroids(masked, centroids, cfg.eps), cfg.iterations):
        pass
    c = feat.shape[0]
    return PrototypeSet(centroids[:, :c], np.full(n, shot))
