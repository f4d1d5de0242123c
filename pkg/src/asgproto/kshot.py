from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import DimMismatch, EmptyList, PrototypeSet


def merge_shots(sets: Sequence[PrototypeSet], relabel: bool = False) -> PrototypeSet:
    """Concatenate per-shot prototype sets in order.

    Shot indices already carried by the sets are kept, so merging is
    associative.  With ``relabel`` every vector is instead tagged with the
    position of its set in ``sets``.
    """
    sets = list(sets)
    if not sets:
        raise EmptyList("merge_shots needs at least one prototype set")
    dim = sets[0].dim
    for s in sets[1:]:
        if s.dim != dim:
            raise DimMismatch(f"prototype dims differ: {dim} vs {s.dim}")
    if len(sets) == 1 and not relabel:
        return sets[0]
    vectors = np.concatenate([s.vectors for s in sets], axis=0)
    if relabel:
        shots = np.concatenate([np.full(s.count, k, dtype=np.int64) for k, s in enumerate(sets)])
    else:
        shots = np.concatenate([s.shots for s in sets])
    return PrototypeSet(vectors, shots)
