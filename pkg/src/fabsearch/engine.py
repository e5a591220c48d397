"""End-to-end query pipeline shared by the library API, the CLI, and the
HTTP service, so all three paths produce identical rankings by construction
of a single code path."""

from __future__ import annotations

import time
from typing import Optional

from .graph import DEFAULT_K, query_neighborhood
from .index import Repository
from .mesh_io import MaterialClass, MeshFormat, ToleranceClass, load_mesh
from .ranker import QueryRequirements, rank_manufacturers
from .sph import DEFAULT_FREQ, DEFAULT_SHELLS, SphSignature, signature
from .voxelize import voxelize_surface


def signature_from_mesh_bytes(data: bytes, fmt: MeshFormat = MeshFormat.AUTO,
                              resolution: int = 32, n_shells: int = DEFAULT_SHELLS,
                              n_freq: int = DEFAULT_FREQ) -> SphSignature:
    mesh = load_mesh(data, fmt)
    grid = voxelize_surface(mesh, resolution)
    return signature(grid, n_shells, n_freq)


def run_query(repo: Repository, query_sig: SphSignature,
              material_class: MaterialClass, required_tolerance: ToleranceClass,
              k: int = DEFAULT_K, max_results: Optional[int] = None,
              search_ms: Optional[float] = None,
              signature_ms: Optional[float] = None) -> dict:
    """Execute the neighborhood search and ranking; returns a plain dict that
    serializes identically everywhere."""
    t0 = time.perf_counter()
    neigh = query_neighborhood(repo, query_sig, k)
    req = QueryRequirements(material_class=material_class,
                            required_tolerance=required_tolerance)
    ranking = rank_manufacturers(neigh, repo, req)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    entries = ranking.entries
    if max_results is not None:
        entries = entries[:max_results]
    return {
        "status": ranking.status,
        "ranking": [
            {
                "manufacturer_id": e.manufacturer_id,
                "posterior": e.posterior,
                "matched_count": e.matched_count,
                "best_distance": e.best_distance,
                "tolerance_satisfied": e.tolerance_satisfied,
            }
            for e in entries
        ],
        "neighborhood": [
            {
                "part_id": f"{pid:08x}",
                "distance": dist,
                "tolerance_class": (repo.get(pid).meta.tolerance_class.value
                                    if repo.get(pid).meta.tolerance_class else None),
                "manufacturer_id": repo.get(pid).meta.manufacturer_id,
                "direction": direction,
            }
            for pid, dist, direction in neigh.members
        ],
        "timing": {
            "signature_ms": signature_ms,
            "search_ms": search_ms if search_ms is not None else elapsed_ms,
        },
    }


def query_with_mesh(repo: Repository, mesh_bytes: bytes,
                    material_class: MaterialClass,
                    required_tolerance: ToleranceClass,
                    fmt: MeshFormat = MeshFormat.AUTO, k: int = DEFAULT_K,
                    max_results: Optional[int] = None,
                    resolution: int = 32) -> dict:
    n_shells, n_freq = repo.dims if repo.dims else (DEFAULT_SHELLS, DEFAULT_FREQ)
    t0 = time.perf_counter()
    sig = signature_from_mesh_bytes(mesh_bytes, fmt, resolution, n_shells, n_freq)
    sig_ms = (time.perf_counter() - t0) * 1000.0
    return run_query(repo, sig, material_class, required_tolerance, k,
                     max_results, signature_ms=sig_ms)
