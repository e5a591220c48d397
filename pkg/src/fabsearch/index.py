"""Part-record repository with exact brute-force KNN and binary persistence.

Ties at equal distance break by ascending part_id so graph construction and
rankings are reproducible.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import CorruptIndex, DimensionMismatch, DuplicateId
from .mesh_io import PartMeta, load_part_meta
from .sph import SphSignature

FIDX_MAGIC = b"FIDX"
FIDX_VERSION = 1


@dataclass(frozen=True)
class PartRecord:
    meta: PartMeta
    signature: SphSignature

    @property
    def part_id(self) -> int:
        return self.meta.part_id


class Repository:
    """In-memory collection of PartRecords keyed by part_id.

    The first insert fixes the signature dimensions; later inserts must match.
    """

    def __init__(self):
        self._records: Dict[int, PartRecord] = {}
        self.dims: Optional[tuple] = None
        self._matrix: Optional[np.ndarray] = None  # cached flattened signatures
        self._ids: Optional[np.ndarray] = None

    def __len__(self):
        return len(self._records)

    def __contains__(self, part_id: int):
        return part_id in self._records

    def add(self, record: PartRecord) -> None:
        if record.part_id in self._records:
            raise DuplicateId(f"part_id {record.part_id:08x} already present")
        if self.dims is None:
            self.dims = record.signature.dims
        elif record.signature.dims != self.dims:
            raise DimensionMismatch(
                f"signature dims {record.signature.dims} != repository dims {self.dims}")
        self._records[record.part_id] = record
        self._matrix = None
        self._ids = None

    def get(self, part_id: int) -> PartRecord:
        return self._records[part_id]

    def records(self) -> List[PartRecord]:
        return [self._records[i] for i in sorted(self._records)]

    def part_ids(self) -> List[int]:
        return sorted(self._records)

    def _ensure_matrix(self):
        if self._matrix is None:
            ids = np.array(sorted(self._records), dtype=np.int64)
            if len(ids):
                mat = np.stack([self._records[i].signature.power.ravel() for i in ids])
            else:
                mat = np.zeros((0, 0))
            self._ids = ids
            self._matrix = mat
        return self._ids, self._matrix

    def distances_to(self, query: SphSignature) -> Tuple[np.ndarray, np.ndarray]:
        """(ids, distances) of all records against the query, id-ascending order."""
        if self.dims is not None and query.dims != self.dims:
            raise DimensionMismatch(f"query dims {query.dims} != repository dims {self.dims}")
        ids, mat = self._ensure_matrix()
        if len(ids) == 0:
            return ids, np.zeros(0)
        diff = mat - query.power.ravel()
        return ids, np.sqrt(np.einsum("ij,ij->i", diff, diff))

    def knn(self, query: SphSignature, k: int,
            predicate: Optional[Callable[[PartMeta], bool]] = None,
            exclude_id: Optional[int] = None) -> List[Tuple[int, float]]:
        """Exact k nearest records by L2 signature distance, ties by part_id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        ids, dists = self.distances_to(query)
        mask = np.ones(len(ids), dtype=bool)
        if exclude_id is not None:
            mask &= ids != exclude_id
        if predicate is not None:
            mask &= np.array([predicate(self._records[int(i)].meta) for i in ids], dtype=bool)
        ids, dists = ids[mask], dists[mask]
        order = np.lexsort((ids, dists))[:k]
        return [(int(ids[j]), float(dists[j])) for j in order]


def save_repository(repo: Repository) -> bytes:
    """FIDX file: magic + u16 version + u16 n_shells + u16 n_freq + u32 count,
    then per record u32 part_id, u32-length-prefixed metadata JSON, f64 signature."""
    n_shells, n_freq = repo.dims if repo.dims else (0, 0)
    out = bytearray(FIDX_MAGIC)
    out += struct.pack("<HHHI", FIDX_VERSION, n_shells, n_freq, len(repo))
    for rec in repo.records():
        meta_json = rec.meta.to_json().encode("utf-8")
        out += struct.pack("<II", rec.part_id, len(meta_json))
        out += meta_json
        out += rec.signature.power.astype("<f8").tobytes()
    return bytes(out)


def load_repository(data: bytes) -> Repository:
    if data[:4] != FIDX_MAGIC:
        raise CorruptIndex("bad FIDX magic")
    if len(data) < 14:
        raise CorruptIndex("truncated FIDX header")
    version, n_shells, n_freq, count = struct.unpack_from("<HHHI", data, 4)
    if version != FIDX_VERSION:
        raise CorruptIndex(f"unsupported FIDX version {version}")
    repo = Repository()
    off = 14
    sig_bytes = n_shells * n_freq * 8
    for _ in range(count):
        if off + 8 > len(data):
            raise CorruptIndex("truncated FIDX record header")
        part_id, meta_len = struct.unpack_from("<II", data, off)
        off += 8
        if off + meta_len + sig_bytes > len(data):
            raise CorruptIndex("truncated FIDX record body")
        try:
            meta = load_part_meta(data[off:off + meta_len])
        except Exception as exc:
            raise CorruptIndex(f"bad metadata in FIDX record: {exc}") from None
        off += meta_len
        if meta.part_id != part_id:
            raise CorruptIndex(
                f"record id {part_id:08x} disagrees with metadata id {meta.part_id:08x}")
        power = np.frombuffer(data, dtype="<f8", count=n_shells * n_freq,
                              offset=off).reshape(n_shells, n_freq)
        off += sig_bytes
        try:
            repo.add(PartRecord(meta, SphSignature(power.copy())))
        except (DuplicateId, DimensionMismatch) as exc:
            raise CorruptIndex(str(exc)) from None
    if off != len(data):
        raise CorruptIndex(f"{len(data) - off} trailing bytes after {count} records")
    return repo
