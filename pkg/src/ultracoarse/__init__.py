"""Finite ultrametric spaces and truncated universal spaces of asymptotic dimension 0."""

from .blocks import (
    BlockSpec,
    address_distance,
    block_cardinality,
    build_block,
    build_block_recursive,
    cu_spec,
    embed_into_block,
    fu_spec,
)
from .errors import EmbeddingError, SizeGuardError, StructureError, TruncationError
from .groups import (
    BitVector,
    SubgroupChain,
    ball_cardinality_profile,
    build_universal_group,
    chain_metric,
    check_chain_coarse_equivalence,
    embed_into_group,
    group_space,
)
from .metric_core import (
    CoarseModuli,
    DistanceSet,
    EmbeddingMap,
    FiniteMetricSpace,
    FiniteUltrametricSpace,
    IsometryReport,
    Partition,
    asdim0_witness,
    coarse_moduli,
    distance_set,
    find_isometric_embedding,
    r_components,
    ultrametrize,
    validate_ultrametric,
    verify_isometric_embedding,
)
from .random_spaces import gen_random_ultrametric
from .dendrogram import export_dendrogram
from .unions import (
    PointedSpace,
    UnionSpec,
    annulus_decomposition,
    check_coarse_disjoint_union,
    equivalence_split,
    r_union,
    seq_union,
)
from .universal import build_cu, build_pu, embed_into_cu, embed_into_pu, enumerate_dsets

__version__ = "0.1.0"
