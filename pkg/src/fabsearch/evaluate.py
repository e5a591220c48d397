"""Leave-one-out evaluation of the engine against a ground-truth table.

Metric 1: did the top-ranked manufacturer specialize in the part's process.
Metric 2: of the correct assignments, how often was the recommended
manufacturer different from the originally assigned one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

from .errors import UnknownPart
from .graph import DEFAULT_K, query_neighborhood
from .index import Repository
from .mesh_io import Process
from .ranker import QueryRequirements, rank_manufacturers

GroundTruthMap = Dict[int, "object"]  # part_id -> GroundTruthRow


@dataclass(frozen=True)
class Verdict:
    part_id: int
    process: Process
    top_manufacturer: Optional[str]
    correct_type: bool
    improved: bool


@dataclass(frozen=True)
class Metric1Row:
    process: str
    part_count: int
    correct_count: int
    percent_correct: float


@dataclass(frozen=True)
class Metric2Row:
    process: str
    improved_of_correct_percent: float
    improved_of_all_percent: float


def evaluate_part(repo: Repository, ground_truth: GroundTruthMap, part_id: int,
                  specialties: Dict[str, List[Process]], k: int = DEFAULT_K,
                  strict_improvement: bool = False) -> Verdict:
    """Query the engine with the part's own signature and requirements,
    excluding the part itself from the neighborhood."""
    if part_id not in repo or part_id not in ground_truth:
        raise UnknownPart(f"part {part_id:08x} not in repository/ground truth")
    rec = repo.get(part_id)
    truth = ground_truth[part_id]
    neigh = query_neighborhood(repo, rec.signature, k,
                               query_id=part_id, exclude_id=part_id)
    req = QueryRequirements(material_class=rec.meta.material_class,
                            required_tolerance=truth.tolerance_class)
    ranking = rank_manufacturers(neigh, repo, req)
    top = ranking.top()
    if top is None:
        return Verdict(part_id, truth.process, None, False, False)
    correct = truth.process in specialties.get(top.manufacturer_id, [])
    improved = correct and top.manufacturer_id != truth.manufacturer_id
    if improved and strict_improvement:
        # stricter reading: the new manufacturer must beat the original's posterior
        original = next((e for e in ranking.entries
                         if e.manufacturer_id == truth.manufacturer_id), None)
        improved = original is None or top.posterior > original.posterior
    return Verdict(part_id, truth.process, top.manufacturer_id, correct, improved)


def evaluate_all(repo: Repository, ground_truth_rows, specialties,
                 k: int = DEFAULT_K, strict_improvement: bool = False) -> List[Verdict]:
    gt = {row.part_id: row for row in ground_truth_rows}
    return [evaluate_part(repo, gt, pid, specialties, k, strict_improvement)
            for pid in sorted(gt)]


def _by_process(verdicts: List[Verdict]):
    groups: Dict[str, List[Verdict]] = {}
    for v in verdicts:
        groups.setdefault(v.process.value, []).append(v)
    return groups


def metric1(verdicts: List[Verdict]) -> List[Metric1Row]:
    """Per-process correct-assignment rates plus an overall Total row."""
    rows = []
    for proc in sorted(_by_process(verdicts)):
        vs = _by_process(verdicts)[proc]
        correct = sum(v.correct_type for v in vs)
        rows.append(Metric1Row(proc, len(vs), correct, 100.0 * correct / len(vs)))
    total = len(verdicts)
    correct = sum(v.correct_type for v in verdicts)
    rows.append(Metric1Row("Total", total, correct,
                           100.0 * correct / total if total else 0.0))
    return rows


def metric2(verdicts: List[Verdict]) -> List[Metric2Row]:
    """Per-process improved-assignment rates plus an overall Total row."""
    rows = []

    def rates(vs):
        correct = sum(v.correct_type for v in vs)
        improved = sum(v.improved for v in vs)
        of_correct = 100.0 * improved / correct if correct else 0.0
        of_all = 100.0 * improved / len(vs) if vs else 0.0
        return of_correct, of_all

    groups = _by_process(verdicts)
    for proc in sorted(groups):
        rows.append(Metric2Row(proc, *rates(groups[proc])))
    rows.append(Metric2Row("Total", *rates(verdicts)))
    return rows


def metric1_csv(rows: List[Metric1Row]) -> str:
    out = ["process,part_count,correct_count,percent_correct"]
    for r in rows:
        out.append(f"{r.process},{r.part_count},{r.correct_count},{r.percent_correct:.1f}")
    return "\n".join(out) + "\n"


def metric2_csv(rows: List[Metric2Row]) -> str:
    out = ["process,improved_of_correct_percent,improved_of_all_percent"]
    for r in rows:
        out.append(f"{r.process},{r.improved_of_correct_percent:.1f},"
                   f"{r.improved_of_all_percent:.1f}")
    return "\n".join(out) + "\n"


def metric1_table(rows: List[Metric1Row]) -> str:
    header = f"{'Category':<12} {'Parts':>8} {'Correct':>8} {'% correct':>10}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r.process:<12} {r.part_count:>8} {r.correct_count:>8} "
                     f"{r.percent_correct:>9.1f}%")
    return "\n".join(lines)


def metric2_table(rows: List[Metric2Row]) -> str:
    header = f"{'Category':<12} {'% of correct':>14} {'% of all':>10}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r.process:<12} {r.improved_of_correct_percent:>13.1f}% "
                     f"{r.improved_of_all_percent:>9.1f}%")
    return "\n".join(lines)
