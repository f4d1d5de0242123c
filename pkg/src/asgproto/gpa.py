"""Guided prototype allocation: match prototypes to every query pixel."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DimMismatch,
    EmptyPrototypeSet,
    IndexOutOfRange,
    PrototypeSet,
    ProjectionShapeMismatch,
    ProjectionWeights,
    as_feature_map,
)

NORM_EPS = 1e-12


def similarity_stack(protos: PrototypeSet, query) -> np.ndarray:
    """Cosine similarity of each prototype with each query pixel, ``(N_sp, h, w)``.

    A zero-norm prototype or pixel gets similarity 0.
    """
    query = as_feature_map(query)
    if protos.count < 1:
        raise EmptyPrototypeSet("need at least one prototype")
    if protos.dim != query.shape[0]:
        raise DimMismatch(f"prototype dim {protos.dim} != query channels {query.shape[0]}")
    q_norm = np.sqrt((query * query).sum(axis=0))
    q_dead = q_norm < NORM_EPS
    out = np.zeros((protos.count,) + query.shape[1:])
    # one prototype at a time: a plane never depends on which other prototypes are present
    for i, proto in enumerate(protos.vectors):
        p_norm = np.sqrt(proto @ proto)
        if p_norm < NORM_EPS:
            continue
        dots = (proto[:, None, None] * query).sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            plane = dots / (p_norm * q_norm)
        plane[q_dead] = 0.0
        out[i] = plane
    return out


def guide_map(sim: np.ndarray) -> np.ndarray:
    """Index of the most similar prototype per pixel (lowest index on ties)."""
    sim = np.asarray(sim)
    if sim.ndim != 3 or sim.shape[0] < 1:
        raise EmptyPrototypeSet("similarity stack must be (N_sp >= 1, h, w)")
    return np.argmax(sim, axis=0)


def guide_feature(protos: PrototypeSet, guide: np.ndarray) -> np.ndarray:
    """Scatter the selected prototype into every pixel, giving a ``(c, h, w)`` map."""
    guide = np.asarray(guide)
    if guide.size and (guide.min() < 0 or guide.max() >= protos.count):
        raise IndexOutOfRange(f"guide map indices must lie in [0, {protos.count})")
    return np.moveaxis(protos.vectors[guide], -1, 0)


def probability_map(sim: np.ndarray) -> np.ndarray:
    """Raw sum of similarities over prototypes (not rescaled)."""
    sim = np.asarray(sim)
    if sim.ndim != 3 or sim.shape[0] < 1:
        raise EmptyPrototypeSet("similarity stack must be (N_sp >= 1, h, w)")
    return sim.sum(axis=0)


def assemble_query(query, guide_feat, prob, proj: ProjectionWeights | None = None) -> np.ndarray:
    """Concatenate ``query``, guide feature and probability map along channels.

    Channel layout is ``[0, c)`` query, ``[c, 2c)`` guide feature, ``2c``
    probability.  With ``proj`` the per-pixel linear map is applied on top.
    """
    query = as_feature_map(query)
    guide_feat = np.asarray(guide_feat, dtype=np.float64)
    prob = np.asarray(prob, dtype=np.float64)
    if guide_feat.shape != query.shape:
        raise DimMismatch(f"guide feature {guide_feat.shape} does not match query {query.shape}")
    if prob.shape != query.shape[1:]:
        raise DimMismatch(f"probability map {prob.shape} does not match query {query.shape[1:]}")
    merged = np.concatenate([query, guide_feat, prob[None]], axis=0)
    if proj is None:
        return merged
    if proj.in_channels != merged.shape[0]:
        raise ProjectionShapeMismatch(
            f"projection expects {proj.in_channels} channels, merged feature has {merged.shape[0]}"
        )
    return proj.apply(merged)


@dataclass(frozen=True)
class Allocation:
    similarity: np.ndarray
    guide: np.ndarray
    probability: np.ndarray
    guide_feature: np.ndarray
    merged: np.ndarray


def allocate(protos: PrototypeSet, query, proj: ProjectionWeights | None = None) -> Allocation:
    query = as_feature_map(query)
    sim = similarity_stack(protos, query)
    guide = guide_map(sim)
    feat_g = guide_feature(protos, guide)
    prob = probability_map(sim)
    return Allocation(sim, guide, prob, feat_g, assemble_query(query, feat_g, prob, proj))
