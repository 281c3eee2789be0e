"""Tiny real-time semantic segmentation toolkit."""

from ._sgrt import (
    CLASS_NAMES,
    DEFAULT_LEAKY_SLOPE,
    Model,
    SgrtError,
    Trainer,
    augment,
    average_precision,
    bce_loss,
    default_augmentation_json,
    evaluate,
    generate_toy_scene,
    mask_to_targets,
    resolve_config,
    subsample_image,
    time_inference,
)

__all__ = [
    "CLASS_NAMES",
    "DEFAULT_LEAKY_SLOPE",
    "Model",
    "SgrtError",
    "Trainer",
    "augment",
    "average_precision",
    "bce_loss",
    "default_augmentation_json",
    "evaluate",
    "generate_toy_scene",
    "mask_to_targets",
    "resolve_config",
    "subsample_image",
    "time_inference",
]
