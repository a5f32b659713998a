"""The two fixed domains used by the evaluation suite.

Source: few large, high-contrast instances on smooth background. Target: many
small, lower-contrast instances on busier texture. The axes mirror the kind of
shift seen between EM volumes from different organisms.
"""

from .generate import DomainSpec

TRAIN_SAMPLES = 40
VAL_SAMPLES = 10

SOURCE_SEED = 1001
TARGET_SEED = 2002
VAL_OFFSET = 10_000  # validation uses an offset seed so splits never overlap


def source_spec(seed: int = SOURCE_SEED) -> DomainSpec:
    return DomainSpec(
        image_size=128,
        instances_per_image=(3, 6),
        instance_radius=(9.0, 15.0),
        instance_eccentricity=(0.0, 0.7),
        fg_mean=0.30,
        bg_mean=0.68,
        fg_noise_std=0.04,
        bg_noise_std=0.04,
        texture_frequency=6.0,
        seed=seed,
    )


def target_spec(seed: int = TARGET_SEED) -> DomainSpec:
    return DomainSpec(
        image_size=128,
        instances_per_image=(10, 18),
        instance_radius=(3.0, 8.0),
        instance_eccentricity=(0.0, 0.7),
        fg_mean=0.36,
        bg_mean=0.62,
        fg_noise_std=0.05,
        bg_noise_std=0.05,
        texture_frequency=12.0,
        seed=seed,
    )
