"""Triangle mesh parsing (binary/ASCII STL, OFF) and part-metadata sidecar I/O.

Meshes are kept as raw triangle soup: the shape descriptor only ever samples
triangle surfaces, so vertex welding is deliberately skipped.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import EmptyMesh, MalformedFile, SchemaError

# squared-cross-product threshold below which a triangle counts as degenerate
DEGENERATE_AREA_SQ = 1e-12


class MeshFormat(Enum):
    STL_BINARY = "StlBinary"
    STL_ASCII = "StlAscii"
    OFF = "Off"
    AUTO = "Auto"


class MaterialClass(Enum):
    METAL = "Metal"
    NONMETAL = "Nonmetal"


class ToleranceClass(Enum):
    STANDARD = "Standard"
    MEDIUM = "Medium"
    HIGH = "High"


class Process(Enum):
    CASTING = "Casting"
    MACHINING = "Machining"
    FORMING = "Forming"
    MOLDING = "Molding"


@dataclass(frozen=True)
class TriangleMesh:
    """Raw triangle soup: vertices (N,3) float64, triangles (M,3) int indices."""

    vertices: np.ndarray
    triangles: np.ndarray
    dropped_degenerate: int = 0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MalformedFile("triangle index out of range")

    @property
    def triangle_corners(self) -> np.ndarray:
        """(M, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]


@dataclass
class PartMeta:
    part_id: int
    material_class: MaterialClass
    tolerance_value: float
    material_name: Optional[str] = None
    tolerance_class: Optional[ToleranceClass] = None
    process: Optional[Process] = None
    manufacturer_id: Optional[str] = None
    units: Optional[str] = None
    volume: Optional[float] = None
    surface_area: Optional[float] = None
    feature_count: Optional[int] = None

    def __post_init__(self):
        if not (0 <= self.part_id < 2**32):
            raise SchemaError(f"part_id {self.part_id} not a 32-bit unsigned integer")
        if not (self.tolerance_value > 0):
            raise SchemaError(f"tolerance_value must be > 0, got {self.tolerance_value}")

    @property
    def part_id_hex(self) -> str:
        return f"{self.part_id:08x}"

    def to_json(self) -> str:
        doc = {"part_id": self.part_id_hex,
               "material_class": self.material_class.value,
               "tolerance_value": self.tolerance_value}
        if self.material_name is not None:
            doc["material_name"] = self.material_name
        if self.tolerance_class is not None:
            doc["tolerance_class"] = self.tolerance_class.value
        if self.process is not None:
            doc["process"] = self.process.value
        if self.manufacturer_id is not None:
            doc["manufacturer_id"] = self.manufacturer_id
        if self.units is not None:
            doc["units"] = self.units
        if self.volume is not None:
            doc["volume"] = self.volume
        if self.surface_area is not None:
            doc["surface_area"] = self.surface_area
        if self.feature_count is not None:
            doc["feature_count"] = self.feature_count
        return json.dumps(doc, sort_keys=True)


@dataclass(frozen=True)
class MeshDiagnostics:
    triangle_count: int
    dropped_degenerate: int
    bbox_min: tuple
    bbox_max: tuple
    surface_area: float


def _drop_degenerate(vertices: np.ndarray, triangles: np.ndarray):
    """Remove triangles with repeated indices or (near-)zero area."""
    if len(triangles) == 0:
        return triangles, 0
    t = triangles
    repeated = (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
    corners = vertices[t]
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    zero_area = np.einsum("ij,ij->i", cross, cross) < DEGENERATE_AREA_SQ
    bad = repeated | zero_area
    return t[~bad], int(bad.sum())


def _finish_mesh(vertices, triangles) -> TriangleMesh:
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    triangles, dropped = _drop_degenerate(vertices, triangles)
    if len(triangles) == 0:
        raise EmptyMesh("no valid triangles after degenerate filtering")
    return TriangleMesh(vertices, triangles, dropped_degenerate=dropped)


def _parse_stl_binary(data: bytes) -> TriangleMesh:
    if len(data) < 84:
        raise MalformedFile(f"binary STL shorter than 84-byte header ({len(data)} bytes)")
    (count,) = struct.unpack_from("<I", data, 80)
    need = 84 + 50 * count
    if len(data) < need:
        raise MalformedFile(
            f"binary STL declares {count} triangles ({need} bytes) but file has {len(data)}")
    # each 50-byte record: normal(3f) + 3 vertices(9f) + u16 attribute
    raw = np.frombuffer(data[84:need], dtype=np.uint8).reshape(count, 50) if count else np.zeros((0, 50), np.uint8)
    floats = raw[:, :48].copy().view("<f4").reshape(count, 12)
    corners = floats[:, 3:12].astype(np.float64).reshape(count * 3, 3)
    triangles = np.arange(count * 3, dtype=np.int64).reshape(count, 3)
    return _finish_mesh(corners, triangles)


def _parse_stl_ascii(data: bytes) -> TriangleMesh:
    try:
        text = data.decode("utf-8", errors="strict")
    except UnicodeDecodeError as exc:
        raise MalformedFile(f"ASCII STL is not valid UTF-8: {exc}") from None
    verts = []
    tokens = text.split()
    i = 0
    n = len(tokens)
    while i < n:
        if tokens[i].lower() == "vertex":
            if i + 3 >= n:
                raise MalformedFile("truncated vertex line in ASCII STL")
            try:
                verts.append([float(tokens[i + 1]), float(tokens[i + 2]), float(tokens[i + 3])])
            except ValueError as exc:
                raise MalformedFile(f"non-numeric vertex token: {exc}") from None
            i += 4
        else:
            i += 1
    if len(verts) % 3 != 0:
        raise MalformedFile(f"ASCII STL vertex count {len(verts)} not a multiple of 3")
    if not verts:
        raise EmptyMesh("ASCII STL contains no facets")
    count = len(verts) // 3
    triangles = np.arange(count * 3, dtype=np.int64).reshape(count, 3)
    return _finish_mesh(np.array(verts), triangles)


def _parse_off(data: bytes) -> TriangleMesh:
    try:
        text = data.decode("utf-8", errors="strict")
    except UnicodeDecodeError as exc:
        raise MalformedFile(f"OFF file is not valid UTF-8: {exc}") from None
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("OFF"):
        raise MalformedFile("missing OFF header")
    # counts may share the header line ("OFF 8 12 0") or follow on the next
    rest = lines[0][3:].strip()
    body = ([rest] if rest else []) + lines[1:]
    if not body:
        raise MalformedFile("OFF file has no counts line")
    try:
        nv, nf, _ne = (int(tok) for tok in body[0].split()[:3])
    except (ValueError, IndexError):
        raise MalformedFile(f"bad OFF counts line: {body[0]!r}") from None
    rows = body[1:]
    if len(rows) < nv + nf:
        raise MalformedFile(f"OFF declares {nv} vertices + {nf} faces, found {len(rows)} rows")
    try:
        verts = np.array([[float(x) for x in rows[i].split()[:3]] for i in range(nv)])
    except ValueError as exc:
        raise MalformedFile(f"non-numeric OFF vertex: {exc}") from None
    triangles = []
    for i in range(nv, nv + nf):
        try:
            fields = [int(x) for x in rows[i].split()]
        except ValueError as exc:
            raise MalformedFile(f"non-numeric OFF face: {exc}") from None
        if not fields or len(fields) < fields[0] + 1:
            raise MalformedFile(f"truncated OFF face row: {rows[i]!r}")
        k, idx = fields[0], fields[1:fields[0] + 1]
        if k < 3:
            raise MalformedFile(f"OFF face with {k} vertices")
        if any(j < 0 or j >= nv for j in idx):
            raise MalformedFile(f"OFF face index out of range: {rows[i]!r}")
        for j in range(1, k - 1):  # fan-triangulate polygons
            triangles.append((idx[0], idx[j], idx[j + 1]))
    if not triangles:
        raise EmptyMesh("OFF file contains no faces")
    return _finish_mesh(verts, np.array(triangles))


def _looks_ascii_stl(data: bytes) -> bool:
    if not data.lstrip()[:5].lower() == b"solid":
        return False
    head = data[:4096].lower()
    return b"facet" in head and b"vertex" in head


def load_mesh(data: bytes, fmt: MeshFormat = MeshFormat.AUTO) -> TriangleMesh:
    """Parse mesh bytes into a TriangleMesh, dropping degenerate triangles.

    AUTO sniffs: leading "solid" with ASCII facets -> STL_ASCII,
    "OFF" header -> OFF, else binary STL.
    """
    if fmt is MeshFormat.AUTO:
        if _looks_ascii_stl(data):
            fmt = MeshFormat.STL_ASCII
        elif data.lstrip()[:3] == b"OFF":
            fmt = MeshFormat.OFF
        else:
            fmt = MeshFormat.STL_BINARY
    if fmt is MeshFormat.STL_BINARY:
        return _parse_stl_binary(data)
    if fmt is MeshFormat.STL_ASCII:
        return _parse_stl_ascii(data)
    if fmt is MeshFormat.OFF:
        return _parse_off(data)
    raise ValueError(f"unsupported format {fmt}")


def write_stl_binary(mesh: TriangleMesh, header: bytes = b"") -> bytes:
    """Serialize as binary STL in load order, normals zeroed."""
    corners = mesh.triangle_corners.astype("<f4")
    count = len(corners)
    out = bytearray(84 + 50 * count)
    out[0:len(header[:80])] = header[:80]
    struct.pack_into("<I", out, 80, count)
    rec = np.zeros((count, 50), dtype=np.uint8)
    floats = np.zeros((count, 12), dtype="<f4")
    floats[:, 3:12] = corners.reshape(count, 9)
    rec[:, :48] = floats.view(np.uint8).reshape(count, 48)
    out[84:] = rec.tobytes()
    return bytes(out)


def _enum_or_schema_error(cls, value, key):
    try:
        return cls(value)
    except ValueError:
        raise SchemaError(f"bad value for {key}: {value!r}") from None


def load_part_meta(data: bytes) -> PartMeta:
    """Parse the UTF-8 JSON metadata sidecar."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"metadata document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("metadata document must be a JSON object")
    for key in ("part_id", "material_class", "tolerance_value"):
        if key not in doc:
            raise SchemaError(f"missing required field {key!r}")
    raw_id = doc["part_id"]
    try:
        part_id = int(raw_id, 16) if isinstance(raw_id, str) else int(raw_id)
    except (ValueError, TypeError):
        raise SchemaError(f"part_id {raw_id!r} is not an 8-hex-char id") from None
    material = _enum_or_schema_error(MaterialClass, doc["material_class"], "material_class")
    tol_value = doc["tolerance_value"]
    if not isinstance(tol_value, (int, float)) or not math.isfinite(tol_value):
        raise SchemaError(f"tolerance_value {tol_value!r} is not a finite number")
    tol_class = None
    if "tolerance_class" in doc:
        tol_class = _enum_or_schema_error(ToleranceClass, doc["tolerance_class"], "tolerance_class")
    process = None
    if "process" in doc:
        process = _enum_or_schema_error(Process, doc["process"], "process")
    return PartMeta(
        part_id=part_id,
        material_class=material,
        tolerance_value=float(tol_value),
        material_name=doc.get("material_name"),
        tolerance_class=tol_class,
        process=process,
        manufacturer_id=doc.get("manufacturer_id"),
        units=doc.get("units"),
        volume=doc.get("volume"),
        surface_area=doc.get("surface_area"),
        feature_count=doc.get("feature_count"),
    )


def triangle_areas(mesh: TriangleMesh) -> np.ndarray:
    corners = mesh.triangle_corners
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def mesh_diagnostics(mesh: TriangleMesh) -> MeshDiagnostics:
    used = mesh.vertices[np.unique(mesh.triangles)]
    return MeshDiagnostics(
        triangle_count=len(mesh.triangles),
        dropped_degenerate=mesh.dropped_degenerate,
        bbox_min=tuple(used.min(axis=0)),
        bbox_max=tuple(used.max(axis=0)),
        surface_area=float(triangle_areas(mesh).sum()),
    )
