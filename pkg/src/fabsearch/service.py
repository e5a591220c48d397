"""HTTP JSON service over a read-only repository snapshot.

The index is loaded once at startup and never mutated; every request computes
against the same immutable snapshot, so concurrent requests need no locking.
"""

from __future__ import annotations

import base64
import binascii
import os

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import errors
from .engine import query_with_mesh
from .index import Repository
from .mesh_io import MaterialClass, MeshFormat, ToleranceClass

DEFAULT_MAX_MESH_BYTES = 50 * 1024 * 1024
MAX_MESH_ENV = "FABSEARCH_MAX_MESH_BYTES"


class QueryBody(BaseModel):
    mesh_base64: str
    format: str = "Auto"
    material_class: str
    required_tolerance: str
    k: int = Field(default=10, ge=1)
    max_results: int | None = None


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(repo: Repository, max_mesh_bytes: int | None = None) -> FastAPI:
    if max_mesh_bytes is None:
        max_mesh_bytes = int(os.environ.get(MAX_MESH_ENV, DEFAULT_MAX_MESH_BYTES))
    app = FastAPI(title="fabsearch")

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "parts": len(repo)}

    @app.get("/v1/parts/{part_id}")
    def get_part(part_id: str):
        try:
            pid = int(part_id, 16)
        except ValueError:
            return _error(400, "bad-part-id", f"{part_id!r} is not an 8-hex-char id")
        if pid not in repo:
            return _error(404, "unknown-part", f"part {part_id} not in index")
        meta = repo.get(pid).meta
        return {
            "part_id": meta.part_id_hex,
            "material_class": meta.material_class.value,
            "material_name": meta.material_name,
            "tolerance_value": meta.tolerance_value,
            "tolerance_class": meta.tolerance_class.value if meta.tolerance_class else None,
            "process": meta.process.value if meta.process else None,
            "manufacturer_id": meta.manufacturer_id,
        }

    @app.get("/v1/manufacturers")
    def manufacturers():
        counts: dict = {}
        for rec in repo.records():
            m = rec.meta.manufacturer_id
            if m is not None:
                counts[m] = counts.get(m, 0) + 1
        return {"manufacturers": [{"manufacturer_id": m, "part_count": c}
                                  for m, c in sorted(counts.items())]}

    @app.post("/v1/query")
    def query(body: QueryBody):
        try:
            mesh_bytes = base64.b64decode(body.mesh_base64, validate=True)
        except (binascii.Error, ValueError) as exc:
            return _error(400, "bad-mesh-encoding", f"mesh_base64 is not valid base64: {exc}")
        if len(mesh_bytes) > max_mesh_bytes:
            return _error(413, "mesh-too-large",
                          f"mesh is {len(mesh_bytes)} bytes, cap is {max_mesh_bytes}")
        try:
            fmt = MeshFormat(body.format)
            material = MaterialClass(body.material_class)
            tolerance = ToleranceClass(body.required_tolerance)
        except ValueError as exc:
            return _error(400, "bad-enum", str(exc))
        try:
            return query_with_mesh(repo, mesh_bytes, material, tolerance,
                                   fmt=fmt, k=body.k, max_results=body.max_results)
        except (errors.MalformedFile, errors.EmptyMesh,
                errors.DegenerateGeometry, errors.DimensionMismatch) as exc:
            return _error(400, type(exc).__name__, str(exc))
        except errors.TooFewRecords as exc:
            return _error(400, "TooFewRecords", str(exc))

    return app
