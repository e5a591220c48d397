"""Procedural repository construction: parametric part generation by shape
family, tolerance sampling, 1-D k-means tolerance classing, and balanced
manufacturer assignment.

Every stochastic step draws from a substream derived from (seed, stream tag),
so adding a family or resizing one never perturbs another family's draws.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateData, InvalidParams, UnservableProcess
from .index import PartRecord, Repository
from .mesh_io import MaterialClass, PartMeta, Process, ToleranceClass, TriangleMesh
from .sph import DEFAULT_FREQ, DEFAULT_SHELLS, signature
from .voxelize import voxelize_surface


class ShapeFamily(Enum):
    WASHER = "Washer"
    BRACKET = "Bracket"
    BLOCK = "Block"
    GEAR_LIKE = "GearLike"
    FREEFORM = "Freeform"


@dataclass
class FamilyConfig:
    family: ShapeFamily
    process: Process
    count: int
    material_class: MaterialClass = MaterialClass.METAL
    material_name: str = "Stainless Steel"
    param_ranges: Dict[str, Tuple[float, float]] = field(default_factory=dict)


@dataclass
class ManufacturerConfig:
    manufacturer_id: str
    specialties: List[Process]


@dataclass
class SimulationConfig:
    rng_seed: int
    families: List[FamilyConfig]
    manufacturers: List[ManufacturerConfig]
    tolerance_ranges: Dict[Process, Tuple[float, float]]
    resolution: int = 32
    n_shells: int = DEFAULT_SHELLS
    n_freq: int = DEFAULT_FREQ

    def validate(self):
        for fam in self.families:
            if fam.count < 0:
                raise InvalidParams(f"negative count for family {fam.family.value}")
            if not any(fam.process in m.specialties for m in self.manufacturers):
                raise UnservableProcess(
                    f"no manufacturer specializes in {fam.process.value}")
        for proc, (lo, hi) in self.tolerance_ranges.items():
            if not (0 < lo < hi):
                raise InvalidParams(
                    f"bad tolerance range for {proc.value}: ({lo}, {hi})")


@dataclass
class ToleranceClassing:
    """Contiguous 1-D clustering of tolerance values into 3 named classes.

    Numerically smallest cluster = High (tightest), largest = Standard.
    """

    centroids: Tuple[float, float, float]  # ascending
    thresholds: Tuple[float, float]        # class boundaries between clusters

    def classify(self, value: float) -> ToleranceClass:
        if value <= self.thresholds[0]:
            return ToleranceClass.HIGH
        if value <= self.thresholds[1]:
            return ToleranceClass.MEDIUM
        return ToleranceClass.STANDARD


@dataclass
class GroundTruthRow:
    part_id: int
    process: Process
    manufacturer_id: str
    tolerance_value: float
    tolerance_class: ToleranceClass
    material_class: MaterialClass


# ---------------------------------------------------------------------------
# shape generators

_BOX_FACES = [
    (0, 1, 2), (0, 2, 3),  # bottom (z=lo)
    (4, 6, 5), (4, 7, 6),  # top
    (0, 4, 5), (0, 5, 1),  # y=lo
    (3, 2, 6), (3, 6, 7),  # y=hi
    (1, 5, 6), (1, 6, 2),  # x=hi
    (0, 3, 7), (0, 7, 4),  # x=lo
]


def _box(lo, hi):
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    verts = np.array([
        [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
        [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
    ])
    return verts, np.array(_BOX_FACES)


def _merge(pieces) -> TriangleMesh:
    verts = []
    tris = []
    offset = 0
    for v, t in pieces:
        verts.append(v)
        tris.append(np.asarray(t) + offset)
        offset += len(v)
    return TriangleMesh(np.concatenate(verts), np.concatenate(tris))


def _washer(outer: float, inner: float, thickness: float, segments: int = 48):
    if not (0 < inner < outer) or thickness <= 0:
        raise InvalidParams(f"washer needs 0 < inner < outer, thickness > 0")
    ang = np.linspace(0, 2 * math.pi, segments, endpoint=False)
    cos, sin = np.cos(ang), np.sin(ang)
    rings = []
    for radius in (outer, inner):
        for z in (0.0, thickness):
            rings.append(np.stack([radius * cos, radius * sin, np.full_like(ang, z)], axis=1))
    ot_b, ot_t, in_b, in_t = 0, segments, 2 * segments, 3 * segments
    verts = np.concatenate(rings)
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        # top and bottom annuli
        tris += [(ot_t + i, ot_t + j, in_t + j), (ot_t + i, in_t + j, in_t + i)]
        tris += [(ot_b + i, in_b + j, ot_b + j), (ot_b + i, in_b + i, in_b + j)]
        # outer and inner walls
        tris += [(ot_b + i, ot_b + j, ot_t + j), (ot_b + i, ot_t + j, ot_t + i)]
        tris += [(in_b + i, in_t + j, in_b + j), (in_b + i, in_t + i, in_t + j)]
    return TriangleMesh(verts, np.array(tris))


def _bracket(length: float, width: float, thickness: float, height: float):
    if min(length, width, thickness, height) <= 0 or thickness >= min(length, height):
        raise InvalidParams("bracket needs positive dims with thickness < length, height")
    base = _box((0, 0, 0), (length, width, thickness))
    wall = _box((0, 0, thickness), (thickness, width, height))
    return _merge([base, wall])


def _block(length: float, width: float, height: float, pocket_depth: float):
    if min(length, width, height) <= 0 or not (0 < pocket_depth < height):
        raise InvalidParams("block needs positive dims and 0 < pocket_depth < height")
    outer = _box((0, 0, 0), (length, width, height))
    pocket = _box((0.25 * length, 0.25 * width, height - pocket_depth),
                  (0.75 * length, 0.75 * width, height))
    return _merge([outer, pocket])


def _gear_like(radius: float, tooth_height: float, thickness: float, teeth: int):
    if radius <= 0 or tooth_height <= 0 or thickness <= 0 or teeth < 3:
        raise InvalidParams("gear needs positive dims and >= 3 teeth")
    n = 2 * teeth
    ang = np.linspace(0, 2 * math.pi, n, endpoint=False)
    radii = np.where(np.arange(n) % 2 == 0, radius + tooth_height, radius)
    boundary = np.stack([radii * np.cos(ang), radii * np.sin(ang)], axis=1)
    bottom = np.column_stack([boundary, np.zeros(n)])
    top = np.column_stack([boundary, np.full(n, thickness)])
    centers = np.array([[0, 0, 0], [0, 0, thickness]], dtype=float)
    verts = np.concatenate([bottom, top, centers])
    cb, ct = 2 * n, 2 * n + 1
    tris = []
    for i in range(n):
        j = (i + 1) % n
        tris.append((cb, j, i))                 # bottom fan
        tris.append((ct, n + i, n + j))         # top fan
        tris += [(i, j, n + j), (i, n + j, n + i)]  # wall
    return TriangleMesh(verts, np.array(tris))


def _freeform(base_radius: float, bump_amp: float, rng: np.random.Generator,
              n_lat: int = 24, n_lon: int = 48, n_terms: int = 3):
    if base_radius <= 0 or bump_amp < 0:
        raise InvalidParams("freeform needs positive base radius, non-negative amplitude")
    a = rng.integers(1, 5, size=n_terms)
    b = rng.integers(1, 5, size=n_terms)
    phase = rng.uniform(0, 2 * math.pi, size=(2, n_terms))
    theta = np.linspace(0, math.pi, n_lat + 1)
    phi = np.linspace(0, 2 * math.pi, n_lon, endpoint=False)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    bump = np.zeros_like(tt)
    for k in range(n_terms):
        bump += np.sin(a[k] * tt + phase[0, k]) * np.cos(b[k] * pp + phase[1, k])
    r = base_radius * (1.0 + bump_amp * bump / n_terms)
    xyz = np.stack([r * np.sin(tt) * np.cos(pp),
                    r * np.sin(tt) * np.sin(pp),
                    r * np.cos(tt)], axis=-1)
    verts = xyz.reshape(-1, 3)
    tris = []
    for i in range(n_lat):
        for jj in range(n_lon):
            j2 = (jj + 1) % n_lon
            v00 = i * n_lon + jj
            v01 = i * n_lon + j2
            v10 = (i + 1) * n_lon + jj
            v11 = (i + 1) * n_lon + j2
            tris += [(v00, v10, v11), (v00, v11, v01)]
    return TriangleMesh(verts, np.array(tris))


def generate_part(family: ShapeFamily, params: dict,
                  rng: Optional[np.random.Generator] = None) -> TriangleMesh:
    """Build one parametric triangle mesh of the given shape family."""
    if rng is None:
        rng = np.random.default_rng(0)
    try:
        if family is ShapeFamily.WASHER:
            return _washer(params["outer"], params["inner"], params["thickness"])
        if family is ShapeFamily.BRACKET:
            return _bracket(params["length"], params["width"],
                            params["thickness"], params["height"])
        if family is ShapeFamily.BLOCK:
            return _block(params["length"], params["width"],
                          params["height"], params["pocket_depth"])
        if family is ShapeFamily.GEAR_LIKE:
            return _gear_like(params["radius"], params["tooth_height"],
                              params["thickness"], int(params["teeth"]))
        if family is ShapeFamily.FREEFORM:
            return _freeform(params["base_radius"], params["bump_amp"], rng)
    except KeyError as exc:
        raise InvalidParams(f"missing parameter {exc} for family {family.value}") from None
    raise InvalidParams(f"unknown family {family}")


DEFAULT_PARAM_RANGES = {
    ShapeFamily.WASHER: {"outer": (8.0, 12.0), "inner": (3.0, 5.0),
                         "thickness": (1.0, 3.0)},
    ShapeFamily.BRACKET: {"length": (8.0, 12.0), "width": (4.0, 6.0),
                          "thickness": (1.0, 2.0), "height": (6.0, 10.0)},
    ShapeFamily.BLOCK: {"length": (8.0, 12.0), "width": (6.0, 9.0),
                        "height": (4.0, 7.0), "pocket_depth": (1.5, 3.0)},
    ShapeFamily.GEAR_LIKE: {"radius": (8.0, 10.0), "tooth_height": (1.5, 3.0),
                            "thickness": (1.0, 3.0), "teeth": (8, 14)},
    ShapeFamily.FREEFORM: {"base_radius": (8.0, 10.0), "bump_amp": (0.05, 0.25)},
}


# ---------------------------------------------------------------------------
# tolerances and assignment

def sample_tolerances(processes: Sequence[Process],
                      ranges: Dict[Process, Tuple[float, float]],
                      rng: np.random.Generator) -> np.ndarray:
    """One tightest-tolerance value per part, uniform over its process's range."""
    values = np.empty(len(processes))
    for i, proc in enumerate(processes):
        lo, hi = ranges[proc]
        values[i] = rng.uniform(lo, hi)
    return values


def kmeans_1d(values: Sequence[float], k: int = 3) -> ToleranceClassing:
    """Globally optimal contiguous 3-partition of 1-D data by SSE.

    Optimal 1-D k-means clusters are contiguous in sorted order, so dynamic
    programming over split points finds the global optimum directly (no Lloyd
    iteration, no initialization sensitivity).
    """
    if k != 3:
        raise ValueError("only k=3 is supported")
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = len(x)
    if len(np.unique(x)) < k:
        raise DegenerateData(f"need >= {k} distinct values, have {len(np.unique(x))}")
    s1 = np.concatenate([[0.0], np.cumsum(x)])
    s2 = np.concatenate([[0.0], np.cumsum(x * x)])

    def seg_cost(i, j):
        # SSE of x[i..j] inclusive; i, j may be arrays
        cnt = j - i + 1
        tot = s1[j + 1] - s1[i]
        return (s2[j + 1] - s2[i]) - tot * tot / cnt

    idx = np.arange(n)
    # d2[j] = best cost of splitting x[0..j] into 2 clusters, b2[j] = last start
    d1 = seg_cost(np.zeros(n, dtype=np.int64), idx)
    d2 = np.empty(n)
    b2 = np.empty(n, dtype=np.int64)
    for j in range(1, n):
        starts = np.arange(1, j + 1)
        costs = d1[starts - 1] + seg_cost(starts, np.full(len(starts), j))
        best = int(np.argmin(costs))
        d2[j], b2[j] = costs[best], starts[best]
    starts = np.arange(2, n)
    costs = d2[starts - 1] + seg_cost(starts, np.full(len(starts), n - 1))
    best = int(np.argmin(costs))
    i3 = int(starts[best])        # start of third cluster
    i2 = int(b2[i3 - 1])          # start of second cluster

    groups = [x[:i2], x[i2:i3], x[i3:]]
    centroids = tuple(float(g.mean()) for g in groups)
    thresholds = (float((groups[0][-1] + groups[1][0]) / 2.0),
                  float((groups[1][-1] + groups[2][0]) / 2.0))
    return ToleranceClassing(centroids=centroids, thresholds=thresholds)


def assign_manufacturers(processes: Sequence[Process],
                         manufacturers: Sequence[ManufacturerConfig],
                         rng: np.random.Generator) -> List[str]:
    """Balanced random assignment within each process to its specialists."""
    by_process: Dict[Process, List[int]] = {}
    for i, proc in enumerate(processes):
        by_process.setdefault(proc, []).append(i)
    result: List[Optional[str]] = [None] * len(processes)
    for proc in sorted(by_process, key=lambda p: p.value):
        specialists = sorted(m.manufacturer_id for m in manufacturers
                             if proc in m.specialties)
        if not specialists:
            raise UnservableProcess(f"no manufacturer specializes in {proc.value}")
        part_order = rng.permutation(by_process[proc])
        start = int(rng.integers(0, len(specialists)))
        for slot, part_idx in enumerate(part_order):
            result[part_idx] = specialists[(start + slot) % len(specialists)]
    return result  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# full pipeline

def _draw_part_ids(n: int, rng: np.random.Generator) -> List[int]:
    seen = set()
    ids = []
    while len(ids) < n:
        candidate = int(rng.integers(1, 2**32))
        if candidate not in seen:
            seen.add(candidate)
            ids.append(candidate)
    return ids


def build_simulated_repository(config: SimulationConfig):
    """Generate meshes, signatures, tolerances, classes, and assignments.

    Returns (Repository, ground_truth rows, specialties map).
    """
    config.validate()
    seed = config.rng_seed

    meshes: List[TriangleMesh] = []
    processes: List[Process] = []
    materials: List[MaterialClass] = []
    material_names: List[str] = []
    for fam_idx, fam in enumerate(config.families):
        fam_rng = np.random.default_rng([seed, fam_idx])
        ranges = fam.param_ranges or DEFAULT_PARAM_RANGES[fam.family]
        for _ in range(fam.count):
            params = {name: float(fam_rng.uniform(lo, hi))
                      for name, (lo, hi) in sorted(ranges.items())}
            meshes.append(generate_part(fam.family, params, fam_rng))
            processes.append(fam.process)
            materials.append(fam.material_class)
            material_names.append(fam.material_name)

    n = len(meshes)
    repo = Repository()
    specialties = {m.manufacturer_id: list(m.specialties) for m in config.manufacturers}
    if n == 0:
        return repo, [], specialties

    tol_rng = np.random.default_rng([seed, 1000])
    tolerances = sample_tolerances(processes, config.tolerance_ranges, tol_rng)
    classing = kmeans_1d(tolerances)
    classes = [classing.classify(v) for v in tolerances]

    mfg_rng = np.random.default_rng([seed, 2000])
    assigned = assign_manufacturers(processes, config.manufacturers, mfg_rng)

    id_rng = np.random.default_rng([seed, 3000])
    part_ids = _draw_part_ids(n, id_rng)

    ground_truth: List[GroundTruthRow] = []
    for i in range(n):
        grid = voxelize_surface(meshes[i], config.resolution)
        sig = signature(grid, config.n_shells, config.n_freq)
        meta = PartMeta(
            part_id=part_ids[i],
            material_class=materials[i],
            material_name=material_names[i],
            tolerance_value=float(tolerances[i]),
            tolerance_class=classes[i],
            process=processes[i],
            manufacturer_id=assigned[i],
        )
        repo.add(PartRecord(meta, sig))
        ground_truth.append(GroundTruthRow(
            part_id=part_ids[i], process=processes[i], manufacturer_id=assigned[i],
            tolerance_value=float(tolerances[i]), tolerance_class=classes[i],
            material_class=materials[i]))
    ground_truth.sort(key=lambda row: row.part_id)
    return repo, ground_truth, specialties


# ---------------------------------------------------------------------------
# config and ground-truth serialization

def default_config(seed: int = 7, parts_per_family: int = 60) -> SimulationConfig:
    """Desk-scale configuration: 4 separable families across 4 processes,
    8 manufacturers (2 specialists per process)."""
    families = [
        FamilyConfig(ShapeFamily.WASHER, Process.FORMING, parts_per_family),
        FamilyConfig(ShapeFamily.BRACKET, Process.MACHINING, parts_per_family),
        FamilyConfig(ShapeFamily.BLOCK, Process.CASTING, parts_per_family),
        FamilyConfig(ShapeFamily.GEAR_LIKE, Process.MOLDING, parts_per_family),
    ]
    manufacturers = [
        ManufacturerConfig("A", [Process.FORMING]),
        ManufacturerConfig("B", [Process.FORMING]),
        ManufacturerConfig("C", [Process.MACHINING]),
        ManufacturerConfig("D", [Process.MACHINING]),
        ManufacturerConfig("E", [Process.CASTING]),
        ManufacturerConfig("F", [Process.CASTING]),
        ManufacturerConfig("G", [Process.MOLDING]),
        ManufacturerConfig("H", [Process.MOLDING]),
    ]
    # ranges are this artifact's defaults, ordered tighter-to-looser by process
    tolerance_ranges = {
        Process.MACHINING: (0.001, 0.01),
        Process.MOLDING: (0.01, 0.05),
        Process.FORMING: (0.05, 0.2),
        Process.CASTING: (0.2, 1.0),
    }
    return SimulationConfig(rng_seed=seed, families=families,
                            manufacturers=manufacturers,
                            tolerance_ranges=tolerance_ranges)


def config_to_json(config: SimulationConfig) -> str:
    doc = {
        "rng_seed": config.rng_seed,
        "resolution": config.resolution,
        "n_shells": config.n_shells,
        "n_freq": config.n_freq,
        "families": [
            {"family": f.family.value, "process": f.process.value, "count": f.count,
             "material_class": f.material_class.value, "material_name": f.material_name,
             "param_ranges": {k: list(v) for k, v in f.param_ranges.items()}}
            for f in config.families
        ],
        "manufacturers": [
            {"id": m.manufacturer_id, "specialties": [p.value for p in m.specialties]}
            for m in config.manufacturers
        ],
        "tolerance_ranges": {p.value: list(r) for p, r in config.tolerance_ranges.items()},
    }
    return json.dumps(doc, indent=2)


def config_from_json(text: str) -> SimulationConfig:
    doc = json.loads(text)
    families = [
        FamilyConfig(
            family=ShapeFamily(f["family"]),
            process=Process(f["process"]),
            count=int(f["count"]),
            material_class=MaterialClass(f.get("material_class", "Metal")),
            material_name=f.get("material_name", "Stainless Steel"),
            param_ranges={k: tuple(v) for k, v in f.get("param_ranges", {}).items()},
        )
        for f in doc["families"]
    ]
    manufacturers = [
        ManufacturerConfig(m["id"], [Process(p) for p in m["specialties"]])
        for m in doc["manufacturers"]
    ]
    tolerance_ranges = {Process(p): tuple(r)
                        for p, r in doc["tolerance_ranges"].items()}
    return SimulationConfig(
        rng_seed=int(doc["rng_seed"]), families=families,
        manufacturers=manufacturers, tolerance_ranges=tolerance_ranges,
        resolution=int(doc.get("resolution", 32)),
        n_shells=int(doc.get("n_shells", DEFAULT_SHELLS)),
        n_freq=int(doc.get("n_freq", DEFAULT_FREQ)),
    )


GROUND_TRUTH_HEADER = "part_id,process,manufacturer_id,tolerance_value,tolerance_class,material_class"


def ground_truth_to_csv(rows: List[GroundTruthRow]) -> str:
    lines = [GROUND_TRUTH_HEADER]
    for r in rows:
        lines.append(f"{r.part_id:08x},{r.process.value},{r.manufacturer_id},"
                     f"{r.tolerance_value!r},{r.tolerance_class.value},{r.material_class.value}")
    return "\n".join(lines) + "\n"


def ground_truth_from_csv(text: str) -> List[GroundTruthRow]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != GROUND_TRUTH_HEADER:
        raise ValueError("bad ground-truth CSV header")
    rows = []
    for ln in lines[1:]:
        pid, proc, mfg, tol, tol_class, mat = ln.split(",")
        rows.append(GroundTruthRow(
            part_id=int(pid, 16), process=Process(proc), manufacturer_id=mfg,
            tolerance_value=float(tol), tolerance_class=ToleranceClass(tol_class),
            material_class=MaterialClass(mat)))
    return rows
