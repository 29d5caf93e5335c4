"""Correspondence-aware sliced distribution transfer for colour grading."""

__version__ = "0.1.0"

from .flow import (
    CorrespondenceField,
    FlowFormatError,
    identity_field,
    load_flo,
    target_coords,
    write_flo,
)
from .image import ImageBuffer, ImageFormatError, load_image, pixel_at, save_image
from .metrics import psnr, ssim
from .patches import (
    PatchPairSet,
    build_pairs,
    default_position_scale,
    extract_patches,
    merge_candidates,
)
from .transfer import (
    ConvergenceTrace,
    RotationBasis,
    TransferConfig,
    l2_divergence,
    project,
    random_orthonormal_basis,
    remap_step,
    run_transfer,
)
from .transport1d import (
    IdentityMapping,
    KernelConfig,
    Mapping1D,
    eval_mapping,
    nw_map_1d,
    ot_map_1d,
)

__all__ = [
    "ConvergenceTrace",
    "CorrespondenceField",
    "FlowFormatError",
    "IdentityMapping",
    "ImageBuffer",
    "ImageFormatError",
    "KernelConfig",
    "Mapping1D",
    "PatchPairSet",
    "RotationBasis",
    "TransferConfig",
    "build_pairs",
    "default_position_scale",
    "eval_mapping",
    "extract_patches",
    "identity_field",
    "l2_divergence",
    "load_flo",
    "load_image",
    "merge_candidates",
    "nw_map_1d",
    "ot_map_1d",
    "pixel_at",
    "project",
    "psnr",
    "random_orthonormal_basis",
    "remap_step",
    "run_transfer",
    "save_image",
    "ssim",
    "target_coords",
    "write_flo",
    "__version__",
]
