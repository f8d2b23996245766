from .meanshift import kernel_density, mean_shift_centers, mean_shift_mode
from .spheres import (LabeledPoint, PrimitiveFitConfig, SpherePrimitiveSet,
                      fit_instance, fit_template, label_points,
                      load_primitives, save_primitives, surface_residuals)

__all__ = [
    "SpherePrimitiveSet", "LabeledPoint", "PrimitiveFitConfig",
    "fit_template", "fit_instance", "label_points", "surface_residuals",
    "save_primitives", "load_primitives",
    "mean_shift_centers", "mean_shift_mode", "kernel_density",
]
