from .field import (OccupancyField, line_iso_crossing, line_iso_crossing_batch,
                    load_grid, occupancy_gradient, query_occupancy, save_grid,
                    shape_confidence, surface_normals)
from .mesh import TriMesh, empty_mesh, extract_mesh, write_obj
from .sampling import SurfaceSample, SurfaceSamples, sample_surface
from .shapes import CATEGORIES, AnalyticShape, ShapeSpec, Sim3, generate_shape

__all__ = [
    "OccupancyField", "query_occupancy", "occupancy_gradient", "shape_confidence",
    "surface_normals", "line_iso_crossing", "line_iso_crossing_batch",
    "save_grid", "load_grid", "TriMesh", "extract_mesh", "empty_mesh", "write_obj",
    "SurfaceSample", "SurfaceSamples", "sample_surface",
    "ShapeSpec", "Sim3", "AnalyticShape", "generate_shape", "CATEGORIES",
]
