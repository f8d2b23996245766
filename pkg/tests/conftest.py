import numpy as np
import pytest

from nsgf.geomcore import (OccupancyField, ShapeSpec, extract_mesh,
                           generate_shape, sample_surface)


def sphere_occupancy_field(radius: float, dims: int = 64, half: float = 0.5,
                           center=(0.0, 0.0, 0.0)) -> OccupancyField:
    """Analytic sphere occupancy sigma(-(d - r)/beta), beta = one voxel edge."""
    beta = 2.0 * half / (dims - 1)
    c = np.asarray(center, dtype=np.float64)

    def occ(pts):
        d = np.linalg.norm(pts - c[None, :], axis=1)
        return 1.0 / (1.0 + np.exp((d - radius) / beta))

    return OccupancyField.from_function(occ, [-half] * 3, [half] * 3,
                                        (dims,) * 3, beta)


def random_unit(rng, n=None):
    v = rng.normal(size=(n, 3) if n else 3)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@pytest.fixture(scope="session")
def cylinder_scene():
    """Shared source cylinder: field, analytic shape, mesh, samples."""
    fld, shape = generate_shape(ShapeSpec.cylinder(0.10, 1.0), 64)
    mesh = extract_mesh(fld, 0.5)
    samples = sample_surface(mesh, fld, 4000, seed=5)
    return {"field": fld, "shape": shape, "mesh": mesh, "samples": samples}
