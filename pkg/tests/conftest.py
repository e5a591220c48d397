import struct

import numpy as np
import pytest

from fabsearch.mesh_io import TriangleMesh
from fabsearch.simulate import ShapeFamily, generate_part

# unit cube triangle soup (12 facets, corners at 0/1)
CUBE_FACES = [
    ((0, 0, 0), (1, 1, 0), (1, 0, 0)), ((0, 0, 0), (0, 1, 0), (1, 1, 0)),
    ((0, 0, 1), (1, 0, 1), (1, 1, 1)), ((0, 0, 1), (1, 1, 1), (0, 1, 1)),
    ((0, 0, 0), (1, 0, 0), (1, 0, 1)), ((0, 0, 0), (1, 0, 1), (0, 0, 1)),
    ((0, 1, 0), (1, 1, 1), (1, 1, 0)), ((0, 1, 0), (0, 1, 1), (1, 1, 1)),
    ((1, 0, 0), (1, 1, 0), (1, 1, 1)), ((1, 0, 0), (1, 1, 1), (1, 0, 1)),
    ((0, 0, 0), (0, 1, 1), (0, 1, 0)), ((0, 0, 0), (0, 0, 1), (0, 1, 1)),
]


def cube_mesh() -> TriangleMesh:
    verts = np.array(CUBE_FACES, dtype=float).reshape(-1, 3)
    tris = np.arange(36).reshape(12, 3)
    return TriangleMesh(verts, tris)


def binary_stl_bytes(triangles) -> bytes:
    out = bytearray(80)
    out += struct.pack("<I", len(triangles))
    for tri in triangles:
        out += struct.pack("<3f", 0.0, 0.0, 0.0)
        for v in tri:
            out += struct.pack("<3f", *v)
        out += struct.pack("<H", 0)
    return bytes(out)


def ascii_stl_bytes(triangles) -> bytes:
    lines = ["solid test"]
    for tri in triangles:
        lines.append("  facet normal 0 0 0")
        lines.append("    outer loop")
        for v in tri:
            lines.append(f"      vertex {v[0]} {v[1]} {v[2]}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid test")
    return "\n".join(lines).encode()


def proper_rotations():
    """The 24 proper axis-aligned rotation matrices."""
    mats = []
    for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        for signs in np.ndindex(2, 2, 2):
            m = np.zeros((3, 3))
            for row, col in enumerate(perm):
                m[row, col] = 1.0 if signs[row] == 0 else -1.0
            if np.isclose(np.linalg.det(m), 1.0):
                mats.append(m)
    assert len(mats) == 24
    return mats


def corpus_mesh(i: int) -> TriangleMesh:
    """Deterministic small corpus mesh #i across all five families."""
    families = list(ShapeFamily)
    fam = families[i % len(families)]
    rng = np.random.default_rng(1000 + i)
    params = {
        ShapeFamily.WASHER: {"outer": 8 + (i % 4), "inner": 3 + 0.3 * (i % 3),
                             "thickness": 1 + 0.5 * (i % 3)},
        ShapeFamily.BRACKET: {"length": 9 + (i % 3), "width": 4 + 0.5 * (i % 3),
                              "thickness": 1.2, "height": 7 + (i % 4)},
        ShapeFamily.BLOCK: {"length": 9 + (i % 3), "width": 6.5, "height": 5 + (i % 2),
                            "pocket_depth": 1.5 + 0.4 * (i % 3)},
        ShapeFamily.GEAR_LIKE: {"radius": 8 + (i % 2), "tooth_height": 2.0,
                                "thickness": 1.5 + 0.5 * (i % 3), "teeth": 8 + (i % 5)},
        ShapeFamily.FREEFORM: {"base_radius": 9.0, "bump_amp": 0.1 + 0.02 * (i % 5)},
    }[fam]
    return generate_part(fam, params, rng)


@pytest.fixture(scope="session")
def corpus20():
    return [corpus_mesh(i) for i in range(20)]
