"""Masked Euclidean distance transform and iterative seed placement.

The distance transform is exact: squared distances are kept as integers
through both passes (column scan, then the lower-envelope-of-parabolas row
pass of Felzenszwalb & Huttenlocher), and only the final result is square
rooted.  Pixels outside the image count as background.
"""
from __future__ import annotations

import numpy as np

from .core import InsufficientForeground, as_mask


def _column_pass(fg: np.ndarray) -> np.ndarray:
    """Squared vertical distance to the nearest background pixel in each column.

    ``fg`` must already be padded so that every column has background.
    """
    h, _ = fg.shape
    big = h + 1
    dist = np.where(fg, big, 0).astype(np.int64)
    for i in range(1, h):
        dist[i] = np.minimum(dist[i], dist[i - 1] + 1)
    for i in range(h - 2, -1, -1):
        dist[i] = np.minimum(dist[i], dist[i + 1] + 1)
    return dist * dist


def _lower_envelope(f: list[int]) -> list[int]:
    """1-D squared distance transform of sampled function ``f`` (all finite)."""
    n = len(f)
    v = [0] * n
    z = [0.0] * (n + 1)
    k = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        while True:
            p = v[k]
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2 * (q - p))
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    out = [0] * n
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        p = v[k]
        out[q] = (q - p) * (q - p) + f[p]
    return out


def squared_distance_transform(mask) -> np.ndarray:
    """Integer squared Euclidean distance to the nearest background pixel."""
    fg = as_mask(mask)
    h, w = fg.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = fg
    cols = _column_pass(padded)[1:-1]
    out = np.empty((h, w), dtype=np.int64)
    for i in range(h):
        # the padding columns are background, so the row envelope sees them too
        out[i] = _lower_envelope(cols[i].tolist())[1:-1]
    return out


def distance_transform(mask) -> np.ndarray:
    """Euclidean distance from every pixel to the nearest background pixel.

    Background pixels map to 0, and the image border behaves as background.
    """
    return np.sqrt(squared_distance_transform(mask).astype(np.float64))


def place_seeds(mask, n: int) -> list[tuple[int, int]]:
    """Place ``n`` seeds inside the foreground, one per pass.

    Each pass takes the pixel that is farthest from the background
    (ties broken by smallest row, then smallest column), records it and
    turns it into background before the next distance transform.
    """
    work = np.array(as_mask(mask), copy=True)
    if n < 0:
        raise ValueError("seed count must be non-negative")
    n_m = int(work.sum())
    if n_m < n:
        raise InsufficientForeground(f"cannot place {n} seeds in {n_m} foreground pixels")
    seeds = []
    for _ in range(n):
        d2 = squared_distance_transform(work)
        # argmax returns the first maximum in row-major order
        row, col = np.unravel_index(int(np.argmax(d2)), d2.shape)
        seeds.append((int(row), int(col)))
        work[row, col] = False
    return seeds
