"""Querying an index: backlinked neighborhood search plus manufacturer ranking.

Builds a small simulated repository, then queries it with a fresh mesh the
index has never seen. The neighborhood is the query's k nearest parts plus
every part that would adopt the query as one of its own k nearest (backlinks);
manufacturers are ranked by their share of tolerance-satisfying matches.
"""

import numpy as np

from fabsearch import (MaterialClass, ToleranceClass, query_with_mesh,
                       write_stl_binary)
from fabsearch.simulate import (ShapeFamily, build_simulated_repository,
                                default_config, generate_part)

repo, truth, specialties = build_simulated_repository(
    default_config(seed=42, parts_per_family=15))
print(f"simulated index: {len(repo)} parts, "
      f"{len(specialties)} manufacturers ({', '.join(sorted(specialties))})")

# a new washer: forming territory, served by manufacturers A and B
query_mesh = generate_part(ShapeFamily.WASHER,
                           {"outer": 11.0, "inner": 4.5, "thickness": 2.5},
                           np.random.default_rng(99))
response = query_with_mesh(repo, write_stl_binary(query_mesh),
                           MaterialClass.METAL, ToleranceClass.MEDIUM, k=10)

print(f"\nstatus: {response['status']}   "
      f"signature {response['timing']['signature_ms']:.0f} ms, "
      f"search {response['timing']['search_ms']:.0f} ms")

print(f"\nneighborhood ({len(response['neighborhood'])} parts):")
for n in response["neighborhood"][:8]:
    print(f"  {n['part_id']}  d={n['distance']:7.3f}  tol={n['tolerance_class']:<8} "
          f"mfg={n['manufacturer_id']}  [{n['direction']}]")

print("\nmanufacturer ranking:")
print(f"  {'mfg':<4} {'posterior':>9} {'matches':>8} {'best dist':>10} {'tol ok':>7}")
for e in response["ranking"]:
    print(f"  {e['manufacturer_id']:<4} {e['posterior']:>9.3f} "
          f"{e['matched_count']:>8} {e['best_distance']:>10.3f} "
          f"{str(e['tolerance_satisfied']):>7}")

top = response["ranking"][0]["manufacturer_id"]
print(f"\nrecommended: {top} (specialties: "
      f"{', '.join(p.value for p in specialties[top])})")
