"""Shared domain types, validation helpers and elementary reductions.

Feature maps and masks are plain numpy arrays (``(c, h, w)`` real and
``(h, w)`` bool).  Anything that carries more than an array gets a small
frozen dataclass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class AsgError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AsgError, ValueError):
    pass


class DimMismatch(ValidationError):
    pass


class EmptyMask(ValidationError):
    pass


class EmptyPrototypeSet(ValidationError):
    pass


class EmptyList(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class ProjectionShapeMismatch(DimMismatch):
    pass


class NonPositiveFactor(ValidationError):
    pass


class InsufficientForeground(ValidationError):
    pass


class SeedOutsideMask(ValidationError):
    pass


def as_feature_map(feat) -> np.ndarray:
    """Validate a ``(c, h, w)`` feature map and return it as float64."""
    arr = np.asarray(feat)
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise DimMismatch(f"feature map must be (c, h, w) with positive dims, got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.number) or np.issubdtype(arr.dtype, np.complexfloating):
        raise ValidationError(f"feature map must be real-valued, got dtype {arr.dtype}")
    arr = arr.astype(np.float64, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("feature map contains NaN or Inf")
    return arr


def as_mask(mask, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Validate a 2-D mask (optionally against ``shape``) and return it as bool."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise DimMismatch(f"mask must be 2-D, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise DimMismatch(f"mask shape {arr.shape} does not match feature map {tuple(shape)}")
    return arr.astype(bool, copy=False)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PrototypeSet:
    """Ordered prototype vectors, one row each, tagged with their source shot."""

    vectors: np.ndarray
    shots: np.ndarray = field(default=None)

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise DimMismatch(f"prototype vectors must be (count, dim), got {vectors.shape}")
        if not np.all(np.isfinite(vectors)):
            raise ValidationError("prototype vectors must be finite")
        shots = self.shots
        if shots is None:
            shots = np.zeros(len(vectors), dtype=np.int64)
        shots = np.asarray(shots, dtype=np.int64)
        if shots.shape != (len(vectors),):
            raise DimMismatch("one shot index per prototype vector is required")
        object.__setattr__(self, "vectors", _frozen(vectors))
        object.__setattr__(self, "shots", _frozen(shots))

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.count


@dataclass(frozen=True)
class SgcConfig:
    """Clustering hyper-parameters.

    ``r`` defaults to ``sqrt(s_sp)``, roughly the radius of one superpixel.
    """

    s_sp: float = 100
    n_max: int = 5
    iterations: int = 5
    r: float | None = None
    eps: float = 1e-12

    def __post_init__(self):
        if self.s_sp < 1:
            raise ValidationError(f"s_sp must be >= 1, got {self.s_sp}")
        if self.n_max < 1:
            raise ValidationError(f"n_max must be >= 1, got {self.n_max}")
        if self.iterations < 1:
            raise ValidationError(f"iterations must be >= 1, got {self.iterations}")
        if self.r is None:
            object.__setattr__(self, "r", math.sqrt(self.s_sp))
        if not self.r > 0:
            raise NonPositiveFactor(f"r must be positive, got {self.r}")
        if not self.eps >= 0:
            raise ValidationError("eps must be non-negative")


@dataclass(frozen=True)
class ProjectionWeights:
    """Per-pixel linear map (1x1 convolution) over the merged query feature."""

    matrix: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2 or min(matrix.shape) < 1:
            raise ProjectionShapeMismatch(f"projection matrix must be (out, in), got {matrix.shape}")
        object.__setattr__(self, "matrix", _frozen(matrix))
        if self.bias is not None:
            bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
            if bias.shape != (matrix.shape[0],):
                raise ProjectionShapeMismatch(
                    f"bias length {bias.size} does not match out_channels {matrix.shape[0]}"
                )
            object.__setattr__(self, "bias", _frozen(bias))

    @property
    def out_channels(self) -> int:
        return self.matrix.shape[0]

    @property
    def in_channels(self) -> int:
        return self.matrix.shape[1]

    def apply(self, feat: np.ndarray) -> np.ndarray:
        if feat.shape[0] != self.in_channels:
            raise ProjectionShapeMismatch(
                f"projection expects {self.in_channels} input channels, got {feat.shape[0]}"
            )
        out = np.tensordot(self.matrix, feat, axes=(1, 0))
        if self.bias is not None:
            out = out + self.bias[:, None, None]
        return out


def masked_average_pool(feat, mask, shot: int = 0) -> PrototypeSet:
    """Mean feature vector over the foreground of ``mask`` (a single prototype)."""
    feat = as_feature_map(feat)
    mask = as_mask(mask, feat.shape[1:])
    if not mask.any():
        raise EmptyMask("masked average pooling needs at least one foreground pixel")
    values = feat[:, mask]
    # summation rounding may step one ulp outside the data range
    vector = np.clip(values.mean(axis=1), values.min(axis=1), values.max(axis=1))
    return PrototypeSet(vector[None, :], [shot])


def adaptive_prototype_count(n_m: int, cfg: SgcConfig) -> int:
    """Number of prototypes for a mask of ``n_m`` pixels: ``min(floor(n_m / s_sp), n_max)``.

    Zero means the mask is too small for clustering; callers fall back to
    masked average pooling, which yields one prototype.
    """
    if n_m < 0:
        raise ValidationError("pixel count must be non-negative")
    return int(min(math.floor(n_m / cfg.s_sp), cfg.n_max))


def _pair(pred, gt):
    pred = as_mask(pred)
    gt = as_mask(gt, pred.shape)
    return pred, gt


def iou(pred, gt) -> float:
    pred, gt = _pair(pred, gt)
    union = np.count_nonzero(pred | gt)
    if union == 0:
        return 1.0
    return np.count_nonzero(pred & gt) / union


def fb_iou(pred, gt) -> float:
    """Mean of the foreground IoU and the background IoU."""
    pred, gt = _pair(pred, gt)
    return (iou(pred, gt) + iou(~pred, ~gt)) / 2.0
