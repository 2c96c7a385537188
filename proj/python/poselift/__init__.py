"""Multi-hypothesis 3D pose lifting with a DDIM sampler and hypothesis aggregation."""

from poselift._core import (
    BehindCamera,
    Camera,
    Denoiser,
    Error,
    InvalidArgument,
    MissingGroundTruth,
    NoiseSchedule,
    ShapeError,
    Skeleton,
    aggregate,
    auc,
    ddim_sigma,
    diffuse,
    gen_hypotheses,
    gen_poses,
    load_denoiser,
    mpjpe,
    oracle_contractive,
    oracle_noisy,
    oracle_perfect,
    pck,
    pmpjpe,
    procrustes_align,
    project,
    sample,
    timestep_ladder,
)

__all__ = [
    "BehindCamera",
    "Camera",
    "Denoiser",
    "Error",
    "InvalidArgument",
    "MissingGroundTruth",
    "NoiseSchedule",
    "ShapeError",
    "Skeleton",
    "aggregate",
    "auc",
    "ddim_sigma",
    "diffuse",
    "gen_hypotheses",
    "gen_poses",
    "load_denoiser",
    "mpjpe",
    "oracle_contractive",
    "oracle_noisy",
    "oracle_perfect",
    "pck",
    "pmpjpe",
    "procrustes_align",
    "project",
    "sample",
    "timestep_ladder",
]
