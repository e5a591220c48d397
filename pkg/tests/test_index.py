import numpy as np
import pytest

from fabsearch.errors import CorruptIndex, DimensionMismatch, DuplicateId
from fabsearch.index import (PartRecord, Repository, load_repository,
                             save_repository)
from fabsearch.mesh_io import MaterialClass, PartMeta, Process, ToleranceClass
from fabsearch.sph import SphSignature, distance


def make_record(part_id, power, **meta_kw):
    meta = PartMeta(part_id=part_id, material_class=MaterialClass.METAL,
                    tolerance_value=0.01, **meta_kw)
    return PartRecord(meta, SphSignature(np.asarray(power, dtype=float)))


def random_repo(n, rng, dims=(4, 4)):
    repo = Repository()
    ids = rng.choice(10 * n, size=n, replace=False)
    for pid in ids:
        repo.add(make_record(int(pid), rng.uniform(0, 1, dims)))
    return repo


class TestRepository:
    def test_add_get_len(self):
        repo = Repository()
        rec = make_record(5, np.ones((2, 2)))
        repo.add(rec)
        assert len(repo) == 1
        assert 5 in repo
        assert repo.get(5) is rec

    def test_duplicate_id(self):
        repo = Repository()
        repo.add(make_record(5, np.ones((2, 2))))
        with pytest.raises(DuplicateId):
            repo.add(make_record(5, np.zeros((2, 2))))

    def test_dimension_mismatch(self):
        repo = Repository()
        repo.add(make_record(1, np.ones((2, 2))))
        with pytest.raises(DimensionMismatch):
            repo.add(make_record(2, np.ones((3, 2))))

    def test_query_dims_checked(self):
        repo = Repository()
        repo.add(make_record(1, np.ones((2, 2))))
        with pytest.raises(DimensionMismatch):
            repo.distances_to(SphSignature(np.ones((2, 3))))

    def test_records_sorted_by_id(self):
        rng = np.random.default_rng(2)
        repo = random_repo(20, rng)
        ids = [r.part_id for r in repo.records()]
        assert ids == sorted(ids) == repo.part_ids()


class TestKnn:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_full_sort_oracle(self, seed):
        rng = np.random.default_rng(500 + seed)
        repo = random_repo(60, rng)
        query = SphSignature(rng.uniform(0, 1, (4, 4)))
        k = int(rng.integers(1, 20))
        got = repo.knn(query, k)
        # independent oracle: explicit per-record distance + stable sort
        pairs = sorted((distance(rec.signature, query), rec.part_id)
                       for rec in repo.records())
        assert [pid for pid, _ in got] == [pid for _, pid in pairs[:k]]
        for (_, d_got), (d_want, _) in zip(got, pairs):
            assert d_got == pytest.approx(d_want, abs=1e-12)

    def test_tie_break_ascending_id(self):
        # integer-valued signatures force exact distance ties
        repo = Repository()
        for pid in (9, 3, 7, 1):
            repo.add(make_record(pid, np.full((2, 2), 2.0)))
        repo.add(make_record(5, np.zeros((2, 2))))
        got = repo.knn(SphSignature(np.full((2, 2), 2.0)), 4)
        assert [pid for pid, _ in got] == [1, 3, 7, 9]
        assert all(d == 0.0 for _, d in got)

    def test_exclude_id(self):
        repo = Repository()
        for pid in (1, 2, 3):
            repo.add(make_record(pid, np.full((2, 2), pid)))
        got = repo.knn(SphSignature(np.full((2, 2), 1.0)), 2, exclude_id=1)
        assert [pid for pid, _ in got] == [2, 3]

    def test_predicate_filter(self):
        repo = Repository()
        for pid, tc in ((1, ToleranceClass.HIGH), (2, ToleranceClass.STANDARD),
                        (3, ToleranceClass.HIGH)):
            repo.add(make_record(pid, np.full((2, 2), pid), tolerance_class=tc))
        got = repo.knn(SphSignature(np.zeros((2, 2))), 5,
                       predicate=lambda m: m.tolerance_class is ToleranceClass.HIGH)
        assert [pid for pid, _ in got] == [1, 3]

    def test_k_larger_than_repo(self):
        rng = np.random.default_rng(8)
        repo = random_repo(5, rng)
        assert len(repo.knn(SphSignature(rng.uniform(0, 1, (4, 4))), 50)) == 5

    def test_bad_k(self):
        repo = random_repo(3, np.random.default_rng(1))
        with pytest.raises(ValueError):
            repo.knn(SphSignature(np.zeros((4, 4))), 0)


class TestFidx:
    def full_record(self, pid, power):
        meta = PartMeta(part_id=pid, material_class=MaterialClass.METAL,
                        tolerance_value=0.004, material_name="Steel",
                        tolerance_class=ToleranceClass.MEDIUM,
                        process=Process.MACHINING, manufacturer_id="B",
                        units="mm", volume=3.25, surface_area=10.5, feature_count=2)
        return PartRecord(meta, SphSignature(power))

    def test_round_trip_bit_identical(self):
        rng = np.random.default_rng(21)
        repo = Repository()
        for pid in (10, 4, 99):
            repo.add(self.full_record(pid, rng.uniform(0, 1, (16, 16))))
        data = save_repository(repo)
        again = load_repository(data)
        assert again.part_ids() == repo.part_ids()
        for pid in repo.part_ids():
            assert again.get(pid).meta == repo.get(pid).meta
            assert (again.get(pid).signature.power.tobytes()
                    == repo.get(pid).signature.power.tobytes())
        # serialization itself is deterministic
        assert save_repository(again) == data

    def test_empty_repo(self):
        again = load_repository(save_repository(Repository()))
        assert len(again) == 0

    def test_bad_magic_and_version(self):
        data = save_repository(Repository())
        with pytest.raises(CorruptIndex):
            load_repository(b"XIDX" + data[4:])
        with pytest.raises(CorruptIndex):
            load_repository(data[:4] + b"\x42\x00" + data[6:])

    def test_truncations_all_raise(self):
        rng = np.random.default_rng(22)
        repo = Repository()
        for pid in (1, 2):
            repo.add(self.full_record(pid, rng.uniform(0, 1, (4, 4))))
        data = save_repository(repo)
        for cut in range(3, len(data), 5):
            with pytest.raises(CorruptIndex):
                load_repository(data[:cut])

    def test_trailing_bytes(self):
        data = save_repository(Repository())
        with pytest.raises(CorruptIndex):
            load_repository(data + b"\x00")

    def test_id_metadata_mismatch(self):
        repo = Repository()
        repo.add(self.full_record(1, np.ones((2, 2))))
        data = bytearray(save_repository(repo))
        # record part_id field lives right after the 14-byte header
        data[14] = 9
        with pytest.raises(CorruptIndex):
            load_repository(bytes(data))
