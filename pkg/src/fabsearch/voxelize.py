"""Mesh normalization and binary surface voxelization.

Normalization puts the area-weighted surface centroid at the grid center and
scales the bounding-sphere radius to R/2 - 1, so every occupied voxel stays
inside the shell sphere with a one-voxel margin. Voxelization marks every cell
whose unit cube overlaps any triangle (separating-axis test, 13 axes; boundary
ties resolve toward occupied).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptIndex, DegenerateGeometry
from .mesh_io import TriangleMesh, triangle_areas

FVOX_MAGIC = b"FVOX"
FVOX_VERSION = 1


@dataclass(frozen=True)
class VoxelGrid:
    """R x R x R binary occupancy, indexed occupancy[x, y, z]."""

    occupancy: np.ndarray

    def __post_init__(self):
        occ = np.ascontiguousarray(self.occupancy, dtype=bool)
        if occ.ndim != 3 or len(set(occ.shape)) != 1:
            raise ValueError(f"occupancy must be cubic, got shape {occ.shape}")
        object.__setattr__(self, "occupancy", occ)

    @property
    def resolution(self) -> int:
        return self.occupancy.shape[0]

    @property
    def center(self) -> np.ndarray:
        return np.full(3, self.resolution / 2.0)

    def occupied_centers(self) -> np.ndarray:
        """(K, 3) coordinates of occupied voxel centers."""
        return np.argwhere(self.occupancy).astype(np.float64) + 0.5

    def count(self) -> int:
        return int(self.occupancy.sum())


def surface_centroid(mesh: TriangleMesh) -> np.ndarray:
    """Area-weighted centroid of the triangle surface."""
    areas = triangle_areas(mesh)
    total = areas.sum()
    tri_centroids = mesh.triangle_corners.mean(axis=1)
    if total <= 0:
        raise DegenerateGeometry("mesh has zero total surface area")
    return (tri_centroids * areas[:, None]).sum(axis=0) / total


def normalize_mesh(mesh: TriangleMesh, resolution: int = 32) -> TriangleMesh:
    """Translate the surface centroid to the grid center and scale the
    max vertex radius to resolution/2 - 1."""
    centroid = surface_centroid(mesh)
    used = np.unique(mesh.triangles)
    radii = np.linalg.norm(mesh.vertices[used] - centroid, axis=1)
    rmax = radii.max()
    if rmax < 1e-12:
        raise DegenerateGeometry("all vertices coincide; scale undefined")
    scale = (resolution / 2.0 - 1.0) / rmax
    verts = (mesh.vertices - centroid) * scale + resolution / 2.0
    return TriangleMesh(verts, mesh.triangles, dropped_degenerate=mesh.dropped_degenerate)


# 13 SAT axes: 3 box normals, 1 triangle normal, 9 edge cross products.
def _triangle_box_overlap(corners: np.ndarray, cell_min: np.ndarray) -> np.ndarray:
    """Vectorized SAT over (P, 3, 3) triangle corners vs unit cells at cell_min.

    Returns a (P,) bool mask; ties (touching contact) count as overlap.
    """
    half = 0.5
    center = cell_min + half
    v = corners - center[:, None, :]          # (P, 3, 3) corners relative to cell center
    e = np.stack([v[:, 1] - v[:, 0],
                  v[:, 2] - v[:, 1],
                  v[:, 0] - v[:, 2]], axis=1)  # (P, 3, 3) edges

    eps = 1e-12
    ok = np.ones(len(v), dtype=bool)

    # box normals: AABB of the triangle vs the cell
    lo = v.min(axis=1)
    hi = v.max(axis=1)
    ok &= np.all((hi >= -half - eps) & (lo <= half + eps), axis=1)

    # triangle normal
    normal = np.cross(e[:, 0], e[:, 1])
    d = np.einsum("ij,ij->i", normal, v[:, 0])
    r = half * np.abs(normal).sum(axis=1)
    ok &= np.abs(d) <= r + eps

    # 9 edge cross products a_{ij} = e_j x box_axis_i
    for j in range(3):
        ex, ey, ez = e[:, j, 0], e[:, j, 1], e[:, j, 2]
        for axis_cross in (
            np.stack([np.zeros_like(ex), -ez, ey], axis=1),   # x-axis
            np.stack([ez, np.zeros_like(ex), -ex], axis=1),   # y-axis
            np.stack([-ey, ex, np.zeros_like(ex)], axis=1),   # z-axis
        ):
            p = np.einsum("ikj,ij->ik", v, axis_cross)        # (P, 3) projections
            r = half * np.abs(axis_cross).sum(axis=1)
            ok &= (p.min(axis=1) <= r + eps) & (p.max(axis=1) >= -r - eps)
    return ok


def voxelize_normalized(mesh: TriangleMesh, resolution: int = 32) -> VoxelGrid:
    """Voxelize a mesh already in grid coordinates (no normalization)."""
    occ = np.zeros((resolution, resolution, resolution), dtype=bool)
    corners = mesh.triangle_corners
    if len(corners) == 0:
        return VoxelGrid(occ)

    # candidate cells: every cell in each triangle's AABB, generated without a
    # per-triangle Python loop via ragged index arithmetic
    lo = np.clip(np.floor(corners.min(axis=1) - 1e-9).astype(np.int64), 0, resolution - 1)
    hi = np.clip(np.floor(corners.max(axis=1) + 1e-9).astype(np.int64), 0, resolution - 1)
    span = hi - lo + 1
    counts = span.prod(axis=1)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    total = int(counts.sum())
    tri_idx = np.repeat(np.arange(len(corners)), counts)
    offset = np.arange(total) - starts[tri_idx]
    sy, sz = span[tri_idx, 1], span[tri_idx, 2]
    iz = offset % sz
    iy = (offset // sz) % sy
    ix = offset // (sz * sy)
    cells = lo[tri_idx] + np.stack([ix, iy, iz], axis=1)

    hit = _triangle_box_overlap(corners[tri_idx], cells.astype(np.float64))
    hits = cells[hit]
    occ[hits[:, 0], hits[:, 1], hits[:, 2]] = True
    return VoxelGrid(occ)


def voxelize_surface(mesh: TriangleMesh, resolution: int = 32,
                     normalized: bool = False) -> VoxelGrid:
    """Normalize (unless told the mesh already is) and rasterize the surface."""
    if not normalized:
        mesh = normalize_mesh(mesh, resolution)
    return voxelize_normalized(mesh, resolution)


def dump_voxels(grid: VoxelGrid) -> bytes:
    """Flat bit-stream dump: "FVOX" + u16 version + u16 R + ceil(R^3/8) bytes,
    x-fastest order."""
    r = grid.resolution
    flat = grid.occupancy.transpose(2, 1, 0).reshape(-1)  # x fastest, then y, then z
    packed = np.packbits(flat.astype(np.uint8))
    return FVOX_MAGIC + struct.pack("<HH", FVOX_VERSION, r) + packed.tobytes()


def load_voxels(data: bytes) -> VoxelGrid:
    if data[:4] != FVOX_MAGIC:
        raise CorruptIndex("bad FVOX magic")
    if len(data) < 8:
        raise CorruptIndex("truncated FVOX header")
    version, r = struct.unpack_from("<HH", data, 4)
    if version != FVOX_VERSION:
        raise CorruptIndex(f"unsupported FVOX version {version}")
    nbytes = (r ** 3 + 7) // 8
    body = data[8:]
    if len(body) != nbytes:
        raise CorruptIndex(f"FVOX body is {len(body)} bytes, expected {nbytes}")
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8))[: r ** 3]
    occ = bits.reshape(r, r, r).transpose(2, 1, 0).astype(bool)
    return VoxelGrid(occ)
