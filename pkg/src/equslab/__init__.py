"""Desk-scale laboratory for diffusion-prior image restoration with equivariant sampling."""

from .diffusion import NoiseSchedule, build_schedule, estimate_x0, forward_sample, reverse_step, score_eps_convert
from .guidance import GuidanceConfig, apply_guidance, guide_gradient, guide_pinv, guide_transpose
from .operators import LinearOperator, build_task, compose_with_transform
from .priors import EpsErrorDenoiser, GaussianMixturePrior, symmetrize
from .samplers import RunReport, SamplerConfig, make_subsequence, sample, sample_baseline, sample_equs
from .transforms import Transform, TransformGroup, next_transform, parse_group

__version__ = "0.1.0"

__all__ = [
    "NoiseSchedule",
    "build_schedule",
    "estimate_x0",
    "forward_sample",
    "reverse_step",
    "score_eps_convert",
    "GuidanceConfig",
    "apply_guidance",
    "guide_gradient",
    "guide_pinv",
    "guide_transpose",
    "LinearOperator",
    "build_task",
    "compose_with_transform",
    "EpsErrorDenoiser",
    "GaussianMixturePrior",
    "symmetrize",
    "RunReport",
    "SamplerConfig",
    "make_subsequence",
    "sample",
    "sample_baseline",
    "sample_equs",
    "Transform",
    "TransformGroup",
    "next_transform",
    "parse_group",
]
