"""fabsearch: rank manufacturing service providers by shape-similar past work.

Pipeline: triangle mesh -> canonical voxel grid -> rotation-invariant
spherical-harmonics signature -> backlinked KNN neighborhood -> Bayesian
(count-ratio) manufacturer ranking.
"""

from .engine import query_with_mesh, run_query, signature_from_mesh_bytes
from .graph import KnnGraph, Neighborhood, build_knn_graph, query_neighborhood, undirect
from .index import PartRecord, Repository, load_repository, save_repository
from .mesh_io import (MaterialClass, MeshFormat, PartMeta, Process,
                      ToleranceClass, TriangleMesh, load_mesh, load_part_meta,
                      mesh_diagnostics, write_stl_binary)
from .ranker import (ManufacturerRanking, QueryRequirements,
                     rank_manufacturers, tolerance_satisfies)
from .sph import SphSignature, distance, load_signature, dump_signature, signature
from .voxelize import (VoxelGrid, dump_voxels, load_voxels, normalize_mesh,
                       voxelize_normalized, voxelize_surface)

__version__ = "0.1.0"

__all__ = [
    "query_with_mesh", "run_query", "signature_from_mesh_bytes",
    "KnnGraph", "Neighborhood", "build_knn_graph", "query_neighborhood", "undirect",
    "PartRecord", "Repository", "load_repository", "save_repository",
    "MaterialClass", "MeshFormat", "PartMeta", "Process", "ToleranceClass",
    "TriangleMesh", "load_mesh", "load_part_meta", "mesh_diagnostics",
    "write_stl_binary",
    "ManufacturerRanking", "QueryRequirements", "rank_manufacturers",
    "tolerance_satisfies",
    "SphSignature", "distance", "load_signature", "dump_signature", "signature",
    "VoxelGrid", "dump_voxels", "load_voxels", "normalize_mesh",
    "voxelize_normalized", "voxelize_surface",
]
