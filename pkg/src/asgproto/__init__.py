"""Adaptive prototype learning and allocation for few-shot segmentation.

Support feature maps are clustered into a mask-size dependent number of
prototypes, which are then matched pixel by pixel against a query feature.
"""
from .core import (
    AsgError,
    DimMismatch,
    EmptyList,
    EmptyMask,
    EmptyPrototypeSet,
    IndexOutOfRange,
    InsufficientForeground,
    NonPositiveFactor,
    ProjectionShapeMismatch,
    ProjectionWeights,
    PrototypeSet,
    SeedOutsideMask,
    SgcConfig,
    ValidationError,
    adaptive_prototype_count,
    fb_iou,
    iou,
    masked_average_pool,
)
from .gpa import (
    Allocation,
    allocate,
    assemble_query,
    guide_feature,
    guide_map,
    probability_map,
    similarity_stack,
)
from .kshot import merge_shots
from .seeding import distance_transform, place_seeds
from .sgc import (
    association,
    augment_coordinates,
    extract_masked,
    init_centroids,
    iterate_centroids,
    sgc_cluster,
    update_centroids,
)
from .tensorio import read_tensor, write_tensor

__version__ = "0.1.0"
