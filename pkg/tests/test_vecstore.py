import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from companion.vecstore import (
    ChecksumMismatch,
    Collection,
    DimensionMismatch,
    InvalidImportance,
    InvalidRecord,
    MemoryRecord,
    NonPositiveHalfLife,
    VectorStore,
    deterministic_ulid,
    rank_score,
)

DIMS = 16
HALF_LIFE = 24 * 3600.0


def make_record(rid, text="t", emb=None, importance=5, created=0.0, updated=None,
                collection=Collection.EVENTS, user="u1"):
    if emb is None:
        emb = np.zeros(DIMS)
        emb[0] = 1.0
    return MemoryRecord(
        id=rid, collection=collection, text=text, embedding=np.asarray(emb, float),
        index_keys=["k"], importance=importance, created_at=created,
        updated_at=updated if updated is not None else created, user_id=user,
    )


def oracle_scan(records, query, k, now, half_life=HALF_LIFE):
    """Independent O(n) full scan: explicit formulas, explicit tie-break."""
    scored = []
    for rec in records:
        qn = math.sqrt(float(np.dot(query, query)))
        rn = math.sqrt(float(np.dot(rec.embedding, rec.embedding)))
        sim = 0.0 if qn == 0 or rn == 0 else float(np.dot(query, rec.embedding)) / (qn * rn)
        s_sim = min(1.0, max(0.0, sim))
        s_imp = rec.importance / 10.0
        age = max(0.0, now - rec.updated_at)
        s_rec = 2.0 ** (-age / half_life)
        scored.append((rec, s_sim + s_imp + s_rec))
    scored.sort(key=lambda pair: (-pair[1], -pair[0].updated_at, pair[0].id))
    return [rec.id for rec, _ in scored[:k]]


class TestRankScore:
    def test_all_components_max(self):
        comps = rank_score(1.0, 10, 0.0, HALF_LIFE)
        assert comps.s_rank == pytest.approx(3.0)

    def test_half_life_age(self):
        comps = rank_score(0.6, 5, HALF_LIFE, HALF_LIFE)
        assert comps.s_similarity == pytest.approx(0.6)
        assert comps.s_importance == pytest.approx(0.5)
        assert comps.s_recency == pytest.approx(0.5)
        assert comps.s_rank == pytest.approx(1.6)

    def test_negative_cosine_and_infinite_age(self):
        comps = rank_score(-0.2, 1, 1e12, HALF_LIFE)
        assert comps.s_similarity == 0.0
        assert comps.s_importance == pytest.approx(0.1)
        assert comps.s_recency == pytest.approx(0.0, abs=1e-12)
        assert comps.s_rank == pytest.approx(0.1, abs=1e-9)

    def test_nonpositive_half_life(self):
        with pytest.raises(NonPositiveHalfLife):
            rank_score(0.5, 5, 10.0, 0.0)

    @given(
        sim=st.floats(-1, 1), imp=st.integers(1, 10),
        age=st.floats(0, 1e7), hl=st.floats(1, 1e6),
    )
    @settings(max_examples=300, deadline=None)
    def test_components_in_range(self, sim, imp, age, hl):
        comps = rank_score(sim, imp, age, hl)
        for c in (comps.s_similarity, comps.s_importance, comps.s_recency):
            assert 0.0 <= c <= 1.0
        assert 0.0 <= comps.s_rank <= 3.0

    @given(
        sim1=st.floats(-1, 1), sim2=st.floats(-1, 1),
        imp1=st.integers(1, 10), imp2=st.integers(1, 10),
        age1=st.floats(0, 1e7), age2=st.floats(0, 1e7),
    )
    @settings(max_examples=300, deadline=None)
    def test_monotone(self, sim1, sim2, imp1, imp2, age1, age2):
        lo_sim, hi_sim = sorted((sim1, sim2))
        lo_imp, hi_imp = sorted((imp1, imp2))
        lo_age, hi_age = sorted((age1, age2))
        base = rank_score(lo_sim, lo_imp, lo_age).s_rank
        assert rank_score(hi_sim, lo_imp, lo_age).s_rank >= base
        assert rank_score(lo_sim, hi_imp, lo_age).s_rank >= base
        assert rank_score(lo_sim, lo_imp, hi_age).s_rank <= base


class TestUpsert:
    def test_write_read(self):
        store = VectorStore("u1", DIMS)
        store.upsert(make_record("r1", text="hello"))
        assert store.get("r1").text == "hello"

    def test_importance_bound(self):
        store = VectorStore("u1", DIMS)
        with pytest.raises(InvalidImportance):
            store.upsert(make_record("r1", importance=11))

    def test_upsert_same_id_replaces(self):
        store = VectorStore("u1", DIMS)
        store.upsert(make_record("r1", text="v1", created=0.0, updated=1.0))
        store.upsert(make_record("r1", text="v2", created=0.0, updated=2.0))
        assert len(store) == 1
        rec = store.get("r1")
        assert rec.text == "v2"
        assert rec.updated_at == 2.0

    def test_updated_at_cannot_regress(self):
        store = VectorStore("u1", DIMS)
        store.upsert(make_record("r1", updated=5.0, created=0.0))
        with pytest.raises(InvalidRecord):
            store.upsert(make_record("r1", updated=1.0, created=0.0))

    def test_dimension_mismatch(self):
        store = VectorStore("u1", DIMS)
        with pytest.raises(DimensionMismatch):
            store.upsert(make_record("r1", emb=np.ones(DIMS + 1)))

    def test_wrong_user_rejected(self):
        store = VectorStore("u1", DIMS)
        with pytest.raises(InvalidRecord):
            store.upsert(make_record("r1", user="u2"))


class TestQueryTopK:
    def test_recency_breaks_equal_similarity(self):
        store = VectorStore("u1", DIMS)
        emb = np.zeros(DIMS)
        emb[0] = 1.0
        store.upsert(make_record("a", emb=emb, importance=5, created=0, updated=9000.0))
        store.upsert(make_record("b", emb=emb, importance=5, created=0, updated=0.0))
        hits = store.query_top_k(Collection.EVENTS, emb, 2, now=10000.0)
        assert [h.record.id for h in hits] == ["a", "b"]

    def test_k_larger_than_store(self):
        store = VectorStore("u1", DIMS)
        for i in range(3):
            store.upsert(make_record(f"r{i}"))
        hits = store.query_top_k(Collection.EVENTS, np.ones(DIMS), 50, now=0.0)
        assert len(hits) == 3

    def test_zero_query_allowed(self):
        store = VectorStore("u1", DIMS)
        store.upsert(make_record("r1"))
        hits = store.query_top_k(Collection.EVENTS, np.zeros(DIMS), 1, now=0.0)
        assert hits[0].s_similarity == 0.0

    def test_components_sum_exactly(self):
        store = VectorStore("u1", DIMS)
        rng = np.random.default_rng(0)
        for i in range(20):
            emb = rng.normal(size=DIMS)
            emb /= np.linalg.norm(emb)
            store.upsert(make_record(f"r{i}", emb=emb, importance=int(rng.integers(1, 11)),
                                     created=float(rng.uniform(0, 1e5)),
                                     updated=float(rng.uniform(1e5, 2e5))))
        q = rng.normal(size=DIMS)
        for hit in store.query_top_k(Collection.EVENTS, q, 20, now=3e5):
            assert hit.s_rank == hit.s_similarity + hit.s_importance + hit.s_recency

    def test_matches_oracle_random(self):
        rng = np.random.default_rng(42)
        store = VectorStore("u1", DIMS)
        records = []
        for i in range(1000):
            emb = rng.normal(size=DIMS)
            norm = np.linalg.norm(emb)
            if norm > 0:
                emb = emb / norm
            rec = make_record(f"r{i:05d}", emb=emb,
                              importance=int(rng.integers(1, 11)),
                              created=float(rng.uniform(0, 5e4)),
                              updated=float(rng.uniform(5e4, 1e5)))
            records.append(rec)
            store.upsert(rec)
        now = 2e5
        for _ in range(10):
            q = rng.normal(size=DIMS)
            got = [h.record.id for h in store.query_top_k(Collection.EVENTS, q, 5, now)]
            assert got == oracle_scan(records, q, 5, now)

    def test_query_dimension_mismatch(self):
        store = VectorStore("u1", DIMS)
        with pytest.raises(DimensionMismatch):
            store.query_top_k(Collection.EVENTS, np.ones(DIMS + 2), 1, now=0.0)


class TestBestMatchAbove:
    def test_exact_match(self):
        store = VectorStore("u1", DIMS)
        emb = np.zeros(DIMS)
        emb[1] = 1.0
        store.upsert(make_record("p1", emb=emb, collection=Collection.PROFILES))
        assert store.best_match_above(Collection.PROFILES, emb, 0.85).id == "p1"

    def test_orthogonal_returns_none(self):
        store = VectorStore("u1", DIMS)
        emb = np.zeros(DIMS)
        emb[1] = 1.0
        store.upsert(make_record("p1", emb=emb, collection=Collection.PROFILES))
        other = np.zeros(DIMS)
        other[2] = 1.0
        assert store.best_match_above(Collection.PROFILES, other, 0.85) is None

    def test_threshold_is_strict(self):
        store = VectorStore("u1", DIMS)
        emb = np.zeros(DIMS)
        emb[1] = 1.0
        store.upsert(make_record("p1", emb=emb, collection=Collection.PROFILES))
        assert store.best_match_above(Collection.PROFILES, emb, 1.0) is None


class TestSnapshot:
    def _random_store(self, seed=7, n=25):
        rng = np.random.default_rng(seed)
        store = VectorStore("snapuser", DIMS)
        for i in range(n):
            emb = rng.normal(size=DIMS)
            emb /= np.linalg.norm(emb)
            store.upsert(make_record(
                f"r{i:03d}", text=f"text {i}", emb=emb,
                importance=int(rng.integers(1, 11)),
                created=float(i), updated=float(i + 10),
                collection=list(Collection)[i % 3], user="snapuser"))
        return store

    def test_round_trip(self, tmp_path):
        store = self._random_store()
        path = str(tmp_path / "s.bin")
        store.snapshot(path)
        loaded = VectorStore.load(path)
        assert loaded.snapshot_bytes() == store.snapshot_bytes()
        assert [r.id for r in loaded.records()] == [r.id for r in store.records()]

    def test_truncated_file(self, tmp_path):
        store = self._random_store()
        path = str(tmp_path / "s.bin")
        store.snapshot(path)
        data = open(path, "rb").read()
        open(path, "wb").write(data[:-9])
        with pytest.raises(ChecksumMismatch):
            VectorStore.load(path)

    def test_empty_store_round_trip(self, tmp_path):
        store = VectorStore("u1", DIMS)
        path = str(tmp_path / "s.bin")
        store.snapshot(path)
        loaded = VectorStore.load(path)
        assert len(loaded) == 0
        assert loaded.user_id == "u1"

    def test_jsonl_export(self):
        store = self._random_store(n=3)
        lines = store.export_jsonl().strip().splitlines()
        assert len(lines) == 3
        import json
        row = json.loads(lines[0])
        assert len(row["embedding"]) == DIMS


class TestUlid:
    def test_deterministic(self):
        a = deterministic_ulid(1000.0, "u1", "2023-11-01", "0")
        b = deterministic_ulid(1000.0, "u1", "2023-11-01", "0")
        c = deterministic_ulid(1000.0, "u1", "2023-11-01", "1")
        assert a == b != c
        assert len(a) == 26
