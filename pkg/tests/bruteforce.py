"""Independent antipodal oracle: discretized friction-cone feasibility.

Decides cone membership by nonnegative least squares against 360 cone
boundary rays instead of the closed-form angle comparison, so it shares no
code path with the implementation it checks.
"""
import numpy as np
from scipy.optimize import nnls


def _cone_rays(axis: np.ndarray, half_angle: float, n: int = 360) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    helper = np.array([1.0, 0, 0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1, 0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    phis = 2 * np.pi * np.arange(n) / n
    return (np.cos(half_angle) * axis[None, :]
            + np.sin(half_angle) * (np.cos(phis)[:, None] * u[None, :]
                                    + np.sin(phis)[:, None] * v[None, :]))


def _inside_cone(direction: np.ndarray, axis: np.ndarray, half_angle: float) -> bool:
    rays = _cone_rays(axis, half_angle)
    coeffs, residual = nnls(rays.T, direction / np.linalg.norm(direction))
    return residual < 1e-6


def brute_force_antipodal(n1: np.ndarray, n2: np.ndarray, baseline: np.ndarray,
                          mu: float) -> bool:
    """Two-contact force closure: the squeeze line lies inside both friction cones.

    Contact 1 pushes along +baseline inside the cone about -n1; contact 2
    pushes along -baseline inside the cone about -n2.
    """
    half = np.arctan(mu)
    return (_inside_cone(baseline, -n1, half)
            and _inside_cone(-baseline, -n2, half))
