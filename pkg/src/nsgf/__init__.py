"""nsgf: neural surface grasping fields with primitive-based transfer.

Desk-scale pipeline on synthetic shape families: occupancy-grid geometry,
sphere-primitive correspondence, a sinusoidal-MLP grasp field with exact
reverse-mode gradients, an analytic antipodal/collision grasp oracle, and
function-to-function transfer between instances of a category.
"""
from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
