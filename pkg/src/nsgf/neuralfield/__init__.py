from .fitting import FitConfig, fit, grad_check, smoothed_trace
from .losses import FitDataset, build_labels, fitting_loss, fitting_loss_tape
from .model import NsgfModel, QueryResult
from .pose import Grasp, GraspLabel, assemble_pose
from .rotation import (frame_to_rot6d, minimal_rotation_between, rot6d_to_frame,
                       rotation_about_axis)
from .width import refine_width, refine_width_batch

__all__ = [
    "NsgfModel", "QueryResult", "FitConfig", "fit", "grad_check", "smoothed_trace",
    "FitDataset", "build_labels", "fitting_loss", "fitting_loss_tape",
    "Grasp", "GraspLabel", "assemble_pose",
    "rot6d_to_frame", "frame_to_rot6d", "minimal_rotation_between",
    "rotation_about_axis", "refine_width", "refine_width_batch",
]
