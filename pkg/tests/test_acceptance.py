"""Acceptance gate: one test per release criterion, each printing a
single `criterion N <name>: PASS/FAIL` line (run with -s to see them live).
"""

import base64
import functools
import json
import time

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient
from scipy.special import sph_harm_y

from fabsearch.cli import main as cli_main
from fabsearch.engine import query_with_mesh
from fabsearch.errors import CorruptIndex, MalformedFile
from fabsearch.evaluate import evaluate_all, metric1, metric2
from fabsearch.graph import build_knn_graph, query_neighborhood
from fabsearch.index import (PartRecord, Repository, load_repository,
                             save_repository)
from fabsearch.mesh_io import (MaterialClass, PartMeta, TriangleMesh,
                               ToleranceClass, write_stl_binary)
from fabsearch.ranker import QueryRequirements, rank_manufacturers
from fabsearch.service import create_app
from fabsearch.simulate import (build_simulated_repository, default_config,
                                kmeans_1d)
from fabsearch.sph import (SphSignature, bin_shells, dump_signature,
                           load_signature, signature)
from fabsearch.voxelize import VoxelGrid, normalize_mesh, voxelize_normalized

from conftest import corpus_mesh, proper_rotations
from test_graph import random_repo as graph_random_repo
from test_ranker import build_case
from test_simulate import exhaustive_kmeans_oracle


def criterion(num, name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"criterion {num:2d} {name}: FAIL")
                raise
            print(f"criterion {num:2d} {name}: PASS")
        return wrapper
    return deco


@criterion(1, "rotation invariance (20 meshes x 24 rotations, rel <= 1e-9)")
def test_rotation_invariance():
    t0 = time.perf_counter()
    for i in range(20):
        mesh = normalize_mesh(corpus_mesh(i), 32)
        ref = signature(voxelize_normalized(mesh, 32)).power
        scale = np.linalg.norm(ref)
        for rot in proper_rotations():
            rotated = TriangleMesh((mesh.vertices - 16.0) @ rot.T + 16.0,
                                   mesh.triangles)
            got = signature(voxelize_normalized(rotated, 32)).power
            assert np.linalg.norm(got - ref) <= 1e-9 * scale
    assert time.perf_counter() - t0 < 120.0


@criterion(2, "octahedral vanishing (full shells: power[1..3] <= 1e-9 power[0])")
def test_octahedral_vanishing():
    full = VoxelGrid(np.ones((32, 32, 32), dtype=bool))
    sig = signature(full).power
    for row in sig:
        assert row[0] > 0
        assert np.all(row[1:4] <= 1e-9 * row[0])


@criterion(3, "quadrature oracle (naive double loop, 50 grids, 1e-12)")
def test_quadrature_oracle():
    n_freq = 16
    for seed in range(50):
        rng = np.random.default_rng(3000 + seed)
        occ = rng.random((16, 16, 16)) < 0.03
        occ[8, 8, 8] = True
        grid = VoxelGrid(occ)
        sig = signature(grid, 8, n_freq).power
        for shell in bin_shells(grid, 8):
            want = np.zeros(n_freq)
            for l in range(n_freq):
                total = 0.0
                for m in range(-l, l + 1):
                    ylm = sph_harm_y(l, m, shell.theta, shell.phi)
                    total += abs(np.sum(shell.weight * np.conj(ylm))) ** 2
                want[l] = np.sqrt(total)
            np.testing.assert_allclose(sig[shell.shell_index], want,
                                       rtol=1e-12, atol=1e-12)


@criterion(4, "KNN exactness (1000-record fuzz incl. ties)")
def test_knn_exactness():
    rng = np.random.default_rng(41)
    repo = Repository()
    # quantized signatures force plenty of exact distance ties
    for pid in rng.choice(10_000, size=1000, replace=False):
        power = np.round(rng.uniform(0, 1, (4, 4)) * 4) / 4
        meta = PartMeta(part_id=int(pid), material_class=MaterialClass.METAL,
                        tolerance_value=0.01)
        repo.add(PartRecord(meta, SphSignature(power)))

    ids = np.array(repo.part_ids())
    mat = np.stack([repo.get(int(i)).signature.power.ravel() for i in ids])
    for trial in range(20):
        q = np.round(rng.uniform(0, 1, 16) * 4) / 4
        k = int(rng.integers(1, 30))
        dists = np.linalg.norm(mat - q, axis=1)
        order = np.lexsort((ids, dists))[:k]
        got = repo.knn(SphSignature(q.reshape(4, 4)), k)
        assert [pid for pid, _ in got] == [int(ids[j]) for j in order]

    g = build_knn_graph(repo, 5)
    for int_pid in ids[:50]:
        q = repo.get(int(int_pid)).signature.power.ravel()
        dists = np.linalg.norm(mat - q, axis=1)
        keep = ids != int_pid
        order = np.lexsort((ids[keep], dists[keep]))[:5]
        assert ([pid for pid, _ in g.neighbors(int(int_pid))]
                == [int(ids[keep][j]) for j in order])


@criterion(5, "backlink insertion consistency (100 parts x 100 queries)")
def test_backlink_insertion_consistency():
    rng = np.random.default_rng(52)
    repo = graph_random_repo(100, rng)
    k = 6
    for trial in range(100):
        qsig = SphSignature(rng.uniform(0, 1, (3, 3)))
        query_id = max(repo.part_ids()) + 1 + trial
        nb = query_neighborhood(repo, qsig, k=k, query_id=query_id)

        inserted = graph_random_repo(100, np.random.default_rng(52))
        # replay the rng draws consumed by this trial's query signature
        replay = np.random.default_rng(52)
        replay.choice(1000, size=100, replace=False)
        for _ in range(100):
            replay.uniform(0, 1, (3, 3))
        for _ in range(trial + 1):
            q = replay.uniform(0, 1, (3, 3))
        np.testing.assert_array_equal(q, qsig.power)
        meta = PartMeta(part_id=query_id, material_class=MaterialClass.METAL,
                        tolerance_value=0.01)
        inserted.add(PartRecord(meta, qsig))
        out_want = {pid for pid, _ in inserted.knn(qsig, k, exclude_id=query_id)}
        in_want = {rec.part_id for rec in inserted.records()
                   if rec.part_id != query_id
                   and any(pid == query_id for pid, _ in
                           inserted.knn(rec.signature, k, exclude_id=rec.part_id))}
        got = {pid: d for pid, _, d in nb.members}
        assert set(got) == out_want | in_want
        for pid, direction in got.items():
            want = ("both" if pid in out_want and pid in in_want
                    else "out" if pid in out_want else "in")
            assert direction == want


@criterion(6, "reference ranking (H first 3/8, five-way 1/8 tie, C demoted)")
def test_reference_ranking():
    H, S = ToleranceClass.HIGH, ToleranceClass.STANDARD
    neigh, repo = build_case([
        ("I", H, MaterialClass.METAL, 0.11), ("J", H, MaterialClass.METAL, 0.12),
        ("H", H, MaterialClass.METAL, 0.13), ("A", H, MaterialClass.METAL, 0.14),
        ("L", H, MaterialClass.METAL, 0.15), ("M", H, MaterialClass.METAL, 0.16),
        ("H", H, MaterialClass.METAL, 0.17), ("H", H, MaterialClass.METAL, 0.18),
        ("C", S, MaterialClass.METAL, 0.19),
    ])
    ranking = rank_manufacturers(neigh, repo,
                                 QueryRequirements(MaterialClass.METAL, H))
    entries = ranking.entries
    assert entries[0].manufacturer_id == "H"
    assert abs(entries[0].posterior - 3 / 8) < 1e-12
    tie = entries[1:6]
    assert {e.manufacturer_id for e in tie} == {"A", "J", "M", "L", "I"}
    assert all(abs(e.posterior - 1 / 8) < 1e-12 for e in tie)
    assert entries[-1].manufacturer_id == "C"
    assert not entries[-1].tolerance_satisfied
    total = sum(e.posterior for e in entries if e.tolerance_satisfied)
    assert abs(total - 1.0) <= 1e-12


@criterion(7, "kmeans_1d global optimum (exhaustive oracle, n <= 12) + contiguity")
def test_kmeans_global_optimum():
    for seed in range(200):
        rng = np.random.default_rng(7000 + seed)
        n = int(rng.integers(4, 13))
        values = rng.uniform(0, 1, n)
        classing = kmeans_1d(values)
        want_centroids, _ = exhaustive_kmeans_oracle(values)
        np.testing.assert_allclose(classing.centroids, want_centroids, rtol=1e-10)
        by_class = {}
        for v in values:
            by_class.setdefault(classing.classify(float(v)), []).append(v)
        H, M, S = (by_class.get(c, []) for c in
                   (ToleranceClass.HIGH, ToleranceClass.MEDIUM,
                    ToleranceClass.STANDARD))
        if H and M:
            assert max(H) < min(M)
        if M and S:
            assert max(M) < min(S)


@criterion(8, "end-to-end desk-scale reproduction (240 parts, Metric 1 >= 70%)")
def test_end_to_end_desk_scale():
    t0 = time.perf_counter()
    config = default_config(seed=7, parts_per_family=60)
    repo, truth, specialties = build_simulated_repository(config)
    assert len(repo) == 240
    verdicts = evaluate_all(repo, truth, specialties, k=10)
    m1 = {r.process: r for r in metric1(verdicts)}
    m2 = {r.process: r for r in metric2(verdicts)}
    assert m1["Total"].percent_correct >= 70.0
    assert m2["Total"].improved_of_all_percent > 0.0
    for v in verdicts:
        assert (not v.improved) or v.correct_type
    assert time.perf_counter() - t0 < 300.0


@criterion(9, "performance (10k-triangle signature < 1 s)")
def test_signature_performance():
    rng = np.random.default_rng(90)
    # a freeform surface densified to ~10k triangles
    from fabsearch.simulate import _freeform
    mesh = _freeform(9.0, 0.15, rng, n_lat=70, n_lon=72)
    assert len(mesh.triangles) >= 10_000
    t0 = time.perf_counter()
    sig = signature(voxelize_normalized(normalize_mesh(mesh, 32), 32))
    elapsed = time.perf_counter() - t0
    assert sig.dims == (16, 16)
    assert elapsed < 1.0, f"signature took {elapsed:.3f}s"


@criterion(10, "persistence (FSIG/FIDX bit-exact; corruption always detected)")
def test_persistence():
    repo, _, _ = build_simulated_repository(default_config(seed=31, parts_per_family=3))
    fidx = save_repository(repo)
    again = load_repository(fidx)
    assert save_repository(again) == fidx

    rec = repo.records()[0]
    fsig = dump_signature(rec.signature, rec.part_id)
    sig2, pid = load_signature(fsig)
    assert pid == rec.part_id
    assert sig2.power.tobytes() == rec.signature.power.tobytes()

    rng = np.random.default_rng(101)
    for data, loader in ((fidx, load_repository), (fsig, load_signature)):
        for cut in sorted(rng.choice(len(data) - 1, size=40, replace=False)):
            with pytest.raises(CorruptIndex):
                loader(data[:cut])
        for _ in range(60):
            blob = bytearray(data)
            pos = int(rng.integers(0, len(blob)))
            blob[pos] ^= int(rng.integers(1, 256))
            try:
                loader(bytes(blob))
            except (CorruptIndex, MalformedFile):
                pass  # detected; anything else would propagate and fail


@criterion(11, "tri-equality (CLI == HTTP == library, 20 queries)")
def test_tri_equality(tmp_path):
    repo, _, _ = build_simulated_repository(default_config(seed=67, parts_per_family=5))
    index = tmp_path / "index.fidx"
    index.write_bytes(save_repository(repo))
    client = TestClient(create_app(repo))
    runner = CliRunner()
    for i in range(20):
        mesh_bytes = write_stl_binary(corpus_mesh(200 + i))
        lib = query_with_mesh(repo, mesh_bytes, MaterialClass.METAL,
                              ToleranceClass.MEDIUM)
        mesh_path = tmp_path / "q.stl"
        mesh_path.write_bytes(mesh_bytes)
        result = runner.invoke(cli_main, [
            "query", "--index", str(index), "--mesh", str(mesh_path),
            "--material", "metal", "--tolerance", "medium", "--json"],
            catch_exceptions=False)
        assert result.exit_code == 0
        cli = json.loads(result.output)
        srv = client.post("/v1/query", json={
            "mesh_base64": base64.b64encode(mesh_bytes).decode(),
            "material_class": "Metal", "required_tolerance": "Medium"}).json()
        for doc in (lib, cli, srv):
            doc.pop("timing")
        assert lib == cli == srv
