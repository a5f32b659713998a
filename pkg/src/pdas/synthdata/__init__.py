from .generate import (
    DENSITY_PEAK_VALUE,
    DENSITY_SIGMA,
    DomainSpec,
    Sample,
    density_from_points,
    generate_domain,
    generate_sample,
    sample_sparse_points,
)
from .augment import (
    ViewTransform,
    align_point_to_strong,
    align_to_strong,
    apply_geometry,
    apply_geometry_point,
    apply_view,
    crop_and_augment,
    draw_view,
    strengthen,
)
from .io import load_dataset, load_sample, save_dataset
from .prompts import PROVENANCES, ROLES, PointPrompt, task_point
