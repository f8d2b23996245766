"""Triangle meshes and iso-surface extraction.

Marching cubes over the full 256-case table with linear edge interpolation.
The per-case triangulations are generated once at import from the cube's
combinatorics: on every cell face, iso-contour crossings are paired (around
inside corners on ambiguous faces), which closes the crossing edges of each
case into polygons; polygons are fan-triangulated and oriented outward.
Vertices land on grid edges and are shared between cells, so the surface is
watertight up to the usual ambiguous-face grid artifacts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UserError
from .field import OccupancyField, occupancy_gradient

# cube corner c has coordinates (c & 1, c >> 1 & 1, c >> 2 & 1)
_CORNER_POS = np.array([[c & 1, (c >> 1) & 1, (c >> 2) & 1] for c in range(8)],
                       dtype=np.int64)

_EDGE_CORNERS: list[tuple[int, int]] = []
_EDGE_AXIS: list[int] = []
for _axis, _stride in ((0, 1), (1, 2), (2, 4)):
    for _hi in (0, 1):
        for _lo in (0, 1):
            if _axis == 0:
                c0 = 2 * _lo + 4 * _hi
            elif _axis == 1:
                c0 = _lo + 4 * _hi
            else:
                c0 = _lo + 2 * _hi
            _EDGE_CORNERS.append((c0, c0 + _stride))
            _EDGE_AXIS.append(_axis)
_EDGE_CORNERS_ARR = np.array(_EDGE_CORNERS, dtype=np.int64)
_EDGE_AXIS_ARR = np.array(_EDGE_AXIS, dtype=np.int64)
_EDGE_BASE = _CORNER_POS[_EDGE_CORNERS_ARR[:, 0]]  # lower node of each edge

_FACES = []  # (corner ids, edge ids) per cube face
for _axis in range(3):
    for _side in (0, 1):
        _corners = [c for c in range(8) if _CORNER_POS[c, _axis] == _side]
        _edges = [e for e, (a, b) in enumerate(_EDGE_CORNERS)
                  if a in _corners and b in _corners]
        _FACES.append((_corners, _edges))


def _case_polygons(case: int) -> list[list[int]]:
    """Closed crossing-edge cycles (as cube-edge id lists) for one corner sign case."""
    inside = [(case >> c) & 1 == 1 for c in range(8)]
    crossing = [e for e in range(12)
                if inside[_EDGE_CORNERS[e][0]] != inside[_EDGE_CORNERS[e][1]]]
    if not crossing:
        return []
    partners: dict[int, list[int]] = {e: [] for e in crossing}

    def link(a, b):
        partners[a].append(b)
        partners[b].append(a)

    for corners, edges in _FACES:
        ce = [e for e in edges if e in partners]
        if len(ce) == 2:
            link(ce[0], ce[1])
        elif len(ce) == 4:
            # ambiguous face: keep diagonal inside corners separated
            for c in corners:
                if inside[c]:
                    inc = [e for e in ce if c in _EDGE_CORNERS[e]]
                    assert len(inc) == 2
                    link(inc[0], inc[1])
        else:
            assert len(ce) == 0, f"face with odd crossing count in case {case}"

    for e, ps in partners.items():
        assert len(ps) == 2, f"crossing edge {e} has degree {len(ps)} in case {case}"

    cycles = []
    seen: set[int] = set()
    for start in crossing:
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = partners[cur][0] if partners[cur][0] != prev else partners[cur][1]
            if nxt == start:
                break
            cycle.append(nxt)
            seen.add(nxt)
            prev, cur = cur, nxt
        assert len(cycle) >= 3
        cycles.append(cycle)

    oriented = []
    for cycle in cycles:
        mids = np.array([(_CORNER_POS[_EDGE_CORNERS[e][0]]
                          + _CORNER_POS[_EDGE_CORNERS[e][1]]) * 0.5 for e in cycle])
        newell = np.zeros(3)
        for i in range(len(cycle)):
            newell += np.cross(mids[i], mids[(i + 1) % len(cycle)])
        ins = np.array([_CORNER_POS[_EDGE_CORNERS[e][0]]
                        if inside[_EDGE_CORNERS[e][0]] else _CORNER_POS[_EDGE_CORNERS[e][1]]
                        for e in cycle], dtype=np.float64)
        outs = np.array([_CORNER_POS[_EDGE_CORNERS[e][1]]
                         if inside[_EDGE_CORNERS[e][0]] else _CORNER_POS[_EDGE_CORNERS[e][0]]
                         for e in cycle], dtype=np.float64)
        ref = outs.mean(axis=0) - ins.mean(axis=0)
        d = float(newell @ ref)
        assert abs(d) > 1e-12, f"degenerate polygon orientation in case {case}"
        oriented.append(cycle if d > 0 else cycle[::-1])
    return oriented


def _build_tri_table() -> list[np.ndarray]:
    table = []
    for case in range(256):
        tris = []
        for cycle in _case_polygons(case):
            for i in range(1, len(cycle) - 1):
                tris.append((cycle[0], cycle[i], cycle[i + 1]))
        assert len(tris) <= 5
        table.append(np.asarray(tris, dtype=np.int64).reshape(-1, 3))
    return table


TRI_TABLE = _build_tri_table()


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray        # (V, 3)
    faces: np.ndarray           # (F, 3) int
    vertex_normals: np.ndarray  # (V, 3) unit

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        n = np.asarray(self.vertex_normals, dtype=np.float64).reshape(-1, 3)
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise UserError("mesh face indices out of range")
        if len(n) != len(v):
            raise UserError("vertex_normals must match vertices")
        if len(n) and np.abs(np.linalg.norm(n, axis=1) - 1.0).max() > 1e-6:
            raise UserError("vertex normals must be unit length")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "vertex_normals", n)

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    def face_areas(self) -> np.ndarray:
        a = self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 1]]
        c = self.vertices[self.faces[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def surface_area(self) -> float:
        return float(self.face_areas().sum())


def empty_mesh() -> TriMesh:
    return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3)))


def extract_mesh(field: OccupancyField, iso: float = 0.5) -> TriMesh:
    """Marching-cubes iso-surface of the occupancy grid.

    Vertices are placed by linear interpolation along sign-crossing grid
    edges; normals come from the occupancy gradient, negated to point
    outward. An empty iso-surface yields an empty mesh.
    """
    if not (0.0 < iso < 1.0):
        raise UserError(f"iso must lie in (0, 1), got {iso}")
    data = field.data
    nx, ny, nz = data.shape
    inside = data > iso

    cases = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.uint8)
    for c in range(8):
        ox, oy, oz = _CORNER_POS[c]
        cases |= (inside[ox:nx - 1 + ox, oy:ny - 1 + oy, oz:nz - 1 + oz]
                  .astype(np.uint8) << c)

    active = (cases != 0) & (cases != 255)
    if not active.any():
        return empty_mesh()

    cell_idx = np.argwhere(active)
    cell_cases = cases[active]

    key_chunks = []
    for case in np.unique(cell_cases):
        tris = TRI_TABLE[case]
        if len(tris) == 0:
            continue
        cells = cell_idx[cell_cases == case]            # (M, 3)
        edge_ids = tris.reshape(-1)                     # (T*3,)
        base = _EDGE_BASE[edge_ids]                     # (T*3, 3)
        axis = _EDGE_AXIS_ARR[edge_ids]                 # (T*3,)
        node = cells[:, None, :] + base[None, :, :]     # (M, T*3, 3)
        keys = ((node[:, :, 0] * ny + node[:, :, 1]) * nz + node[:, :, 2]) * 3 \
            + axis[None, :]
        key_chunks.append(keys.reshape(-1, 3))
    all_keys = np.concatenate(key_chunks, axis=0)       # (F, 3)

    uniq, inv = np.unique(all_keys.reshape(-1), return_inverse=True)
    faces = inv.reshape(-1, 3).astype(np.int64)

    axis = uniq % 3
    node = uniq // 3
    iz = node % nz
    iy = (node // nz) % ny
    ix = node // (nz * ny)
    v0 = data[ix, iy, iz]
    step = np.eye(3, dtype=np.int64)[axis]
    jx, jy, jz = ix + step[:, 0], iy + step[:, 1], iz + step[:, 2]
    v1 = data[jx, jy, jz]
    t = np.clip((iso - v0) / (v1 - v0), 0.0, 1.0)

    voxel = field.voxel_size
    verts = field.bbox_min[None, :] + np.stack([ix, iy, iz], axis=1) * voxel[None, :]
    verts[np.arange(len(uniq)), axis] += t * voxel[axis]

    grads = occupancy_gradient(field, verts)
    norms = np.linalg.norm(grads, axis=1)
    normals = -grads / np.maximum(norms, 1e-15)[:, None]
    normals[norms < 1e-15] = np.array([0.0, 0.0, 1.0])

    # drop zero-area triangles from shared-vertex degeneracies
    keep = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) \
        & (faces[:, 0] != faces[:, 2])
    return TriMesh(verts, faces[keep], normals)


def write_obj(mesh: TriMesh, path) -> None:
    """ASCII OBJ export with v/vn/f records."""
    with open(path, "w") as fh:
        fh.write("# nsgf mesh export\n")
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for n in mesh.vertex_normals:
            fh.write(f"vn {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}\n")
        for f in mesh.faces:
            a, b, c = f + 1
            fh.write(f"f {a}//{a} {b}//{b} {c}//{c}\n")
