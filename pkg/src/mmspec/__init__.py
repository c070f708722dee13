"""Spectral estimation of the undirected mixed membership stochastic blockmodel.

Adjacency spectral embedding, followed by a minimum-volume enclosing
polytope around the principal components, recovers the block matrix,
memberships and Dirichlet concentration of the model.
"""
from .embedding import (
    Embedding,
    PcaFrame,
    eigen_topk_by_magnitude,
    pca_project,
    pca_reconstruct,
    procrustes_align,
    spectral_embed,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateInputError,
    InvalidParameterError,
    MmspecError,
    NotNonnegativeDefiniteError,
    ParseError,
)
from .estimation import (
    EstimationResult,
    ShrinkPolicy,
    dirichlet_mle,
    estimate,
    estimate_B,
    estimate_from_embedding,
    estimate_memberships,
    match_permutation,
    vertex_error,
)
from .kernels import BACKEND
from .model import (
    DEFAULT_B,
    GraphSample,
    ModelSpec,
    edge_probability,
    latent_positions,
    sample_dirichlet,
    sample_mmsbm,
    sample_rdpg,
    true_vertices,
)
from .polytope import (
    A_STAR,
    Polytope,
    barycentric,
    contains,
    fit_mvecp,
    shrink,
    shrink_factor,
    simplex_volume,
    symdiff_volume_mc,
)

__version__ = "0.1.0"

__all__ = [
    "A_STAR",
    "BACKEND",
    "barycentric",
    "ConfigError",
    "contains",
    "ConvergenceError",
    "DEFAULT_B",
    "DegenerateInputError",
    "dirichlet_mle",
    "edge_probability",
    "eigen_topk_by_magnitude",
    "Embedding",
    "estimate",
    "estimate_B",
    "estimate_from_embedding",
    "estimate_memberships",
    "EstimationResult",
    "fit_mvecp",
    "GraphSample",
    "InvalidParameterError",
    "latent_positions",
    "match_permutation",
    "MmspecError",
    "ModelSpec",
    "NotNonnegativeDefiniteError",
    "ParseError",
    "pca_project",
    "pca_reconstruct",
    "PcaFrame",
    "Polytope",
    "procrustes_align",
    "sample_dirichlet",
    "sample_mmsbm",
    "sample_rdpg",
    "shrink",
    "shrink_factor",
    "ShrinkPolicy",
    "simplex_volume",
    "spectral_embed",
    "symdiff_volume_mc",
    "true_vertices",
    "vertex_error",
]
