"""Bayesian (count-ratio) ranking of manufacturers over a query neighborhood.

The posterior for manufacturer m is the fraction of tolerance-satisfying,
material-matching neighborhood members that m built. Manufacturers whose
matches all fail the tolerance requirement stay in the ranking, demoted to a
second tier with posterior 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from .graph import Neighborhood
from .index import Repository
from .mesh_io import MaterialClass, ToleranceClass

# tightness ordering: High satisfies everything, Standard only Standard
_TIGHTNESS = {ToleranceClass.STANDARD: 0, ToleranceClass.MEDIUM: 1, ToleranceClass.HIGH: 2}

STATUS_OK = "ok"
STATUS_EMPTY = "empty-neighborhood"


@dataclass(frozen=True)
class QueryRequirements:
    material_class: MaterialClass
    required_tolerance: ToleranceClass


@dataclass(frozen=True)
class RankEntry:
    manufacturer_id: str
    posterior: float
    matched_count: int
    best_distance: float
    tolerance_satisfied: bool


@dataclass(frozen=True)
class ManufacturerRanking:
    entries: List[RankEntry]
    status: str = STATUS_OK
    skipped_no_manufacturer: int = 0

    def top(self) -> Optional[RankEntry]:
        return self.entries[0] if self.entries else None


def tolerance_satisfies(part_tol: ToleranceClass, required: ToleranceClass) -> bool:
    """True iff a part's tolerance class is at least as tight as required."""
    return _TIGHTNESS[part_tol] >= _TIGHTNESS[required]


def rank_manufacturers(neigh: Neighborhood, repo: Repository,
                       req: QueryRequirements) -> ManufacturerRanking:
    """Rank manufacturers by their share of tolerance-satisfying matches.

    Order: satisfying tier by descending posterior, then ascending best
    distance, then manufacturer_id; then the tolerance-failing tier with
    posterior 0 under the same secondary ordering.
    """
    skipped = 0
    # per-manufacturer tallies, split by tolerance satisfaction
    sat_count: dict = {}
    fail_count: dict = {}
    best_dist: dict = {}
    for part_id, dist, _direction in neigh.members:
        meta = repo.get(part_id).meta
        if meta.material_class != req.material_class:
            continue
        if meta.manufacturer_id is None:
            skipped += 1
            continue
        if meta.tolerance_class is None:
            skipped += 1
            continue
        m = meta.manufacturer_id
        if tolerance_satisfies(meta.tolerance_class, req.required_tolerance):
            sat_count[m] = sat_count.get(m, 0) + 1
        else:
            fail_count[m] = fail_count.get(m, 0) + 1
        if m not in best_dist or dist < best_dist[m]:
            best_dist[m] = dist

    if not sat_count and not fail_count:
        return ManufacturerRanking(entries=[], status=STATUS_EMPTY,
                                   skipped_no_manufacturer=skipped)

    total_sat = sum(sat_count.values())
    entries = []
    for m, c in sat_count.items():
        entries.append(RankEntry(m, c / total_sat, c, best_dist[m], True))
    for m, c in fail_count.items():
        if m in sat_count:
            continue
        entries.append(RankEntry(m, 0.0, c, best_dist[m], False))
    entries.sort(key=lambda e: (not e.tolerance_satisfied, -e.posterior,
                                e.best_distance, e.manufacturer_id))
    return ManufacturerRanking(entries=entries, status=STATUS_OK,
                               skipped_no_manufacturer=skipped)
