"""Directed KNN graph over repository signatures, its undirected (backlinked)
closure, and backlinked query neighborhoods.

An external query's in-edges use insertion semantics: part p gains the edge
p -> query iff the query would displace p's current k-th neighbor, which is
exactly the edge set p would have if the query were literally inserted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import TooFewRecords
from .index import Repository
from .sph import SphSignature

DEFAULT_K = 10


@dataclass(frozen=True)
class KnnGraph:
    k: int
    out_edges: Dict[int, List[Tuple[int, float]]]
    directed: bool = True

    def neighbors(self, node: int) -> List[Tuple[int, float]]:
        return self.out_edges[node]


@dataclass(frozen=True)
class Neighborhood:
    """Backlinked search space for one query."""

    query_id: Optional[int]
    members: List[Tuple[int, float, str]]  # (part_id, distance, "out"|"in"|"both")

    def member_ids(self) -> List[int]:
        return [pid for pid, _, _ in self.members]


def build_knn_graph(repo: Repository, k: int = DEFAULT_K) -> KnnGraph:
    """Directed graph: each node points at its min(k, N-1) nearest others."""
    if len(repo) < 2:
        raise TooFewRecords(f"need >= 2 records, have {len(repo)}")
    out = {}
    for rec in repo.records():
        out[rec.part_id] = repo.knn(rec.signature, k, exclude_id=rec.part_id)
    return KnnGraph(k=k, out_edges=out, directed=True)


def undirect(g: KnnGraph) -> KnnGraph:
    """Symmetric closure: (a, b) present iff a->b or b->a was directed."""
    if not g.directed:
        return g
    merged: Dict[int, Dict[int, float]] = {node: {} for node in g.out_edges}
    for a, edges in g.out_edges.items():
        for b, d in edges:
            merged[a][b] = d
            merged.setdefault(b, {})[a] = d
    out = {node: sorted(((b, d) for b, d in nbrs.items()),
                        key=lambda e: (e[1], e[0]))
           for node, nbrs in merged.items()}
    return KnnGraph(k=g.k, out_edges=out, directed=False)


def query_neighborhood(repo: Repository, query_sig: SphSignature,
                       k: int = DEFAULT_K,
                       query_id: Optional[int] = None,
                       exclude_id: Optional[int] = None) -> Neighborhood:
    """Backlinked neighborhood: the query's k nearest parts (direction out)
    plus every part that would count the query among its own k nearest
    (direction in); parts in both sets are marked both.

    query_id participates in distance ties exactly as if the query were a
    repository record with that id; None ranks after any tied record.
    exclude_id removes one repository part (leave-one-out evaluation).
    """
    if len(repo) < 1:
        raise TooFewRecords("empty repository")
    out_edges = repo.knn(query_sig, k, exclude_id=exclude_id)
    out_ids = {pid for pid, _ in out_edges}

    ids, dists = repo.distances_to(query_sig)
    if exclude_id is not None:
        keep = ids != exclude_id
        ids, dists = ids[keep], dists[keep]
    dist_of = dict(zip(ids.tolist(), dists.tolist()))

    in_ids = set()
    for pid, dq in zip(ids.tolist(), dists.tolist()):
        rec = repo.get(pid)
        # p's current neighbors, minus itself and the excluded part
        nbrs = repo.knn(rec.signature, k + 1, exclude_id=pid)
        if exclude_id is not None:
            nbrs = [e for e in nbrs if e[0] != exclude_id]
        nbrs = nbrs[:k]
        if len(nbrs) < k:
            in_ids.add(pid)
            continue
        kth_id, kth_d = nbrs[-1][0], nbrs[-1][1]
        q_key = (dq, query_id if query_id is not None else float("inf"))
        if q_key < (kth_d, kth_id):
            in_ids.add(pid)
    members = []
    for pid in sorted(out_ids | in_ids):
        if pid in out_ids and pid in in_ids:
            direction = "both"
        elif pid in out_ids:
            direction = "out"
        else:
            direction = "in"
        members.append((pid, dist_of[pid], direction))
    members.sort(key=lambda m: (m[1], m[0]))
    return Neighborhood(query_id=query_id, members=members)


def dump_edge_list(g: KnnGraph) -> str:
    """Debug dump: `part_id part_id distance direction` lines."""
    direction = "directed" if g.directed else "undirected"
    lines = []
    for a in sorted(g.out_edges):
        for b, d in g.out_edges[a]:
            lines.append(f"{a:08x} {b:08x} {d:.17g} {direction}")
    return "\n".join(lines) + "\n"
