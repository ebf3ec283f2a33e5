"""Embedded per-user vector store over memory records.

Retrieval is an exact full scan ranked by the composite score
``s_rank = s_similarity + s_importance + s_recency`` with each component
normalized to [0, 1]: clamped cosine, importance/10, and exponential
recency decay with a configurable half-life. Stores are keyed by user at
construction, are clock-free (all timestamps are caller-supplied epoch
seconds), and persist to a checksummed binary snapshot.
"""

from __future__ import annotations

import enum
import hashlib
import io
import json
import os
import struct
import threading
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

SNAPSHOT_MAGIC = b"CMPS"
SNAPSHOT_VERSION = 1
DEFAULT_HALF_LIFE_S = 24 * 3600.0

_B32 = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


class StoreError(Exception):
    pass


class DimensionMismatch(StoreError):
    pass


class InvalidImportance(StoreError):
    pass


class InvalidRecord(StoreError):
    pass


class NonPositiveHalfLife(StoreError):
    pass


class IoFailure(StoreError):
    pass


class VersionMismatch(StoreError):
    pass


class ChecksumMismatch(StoreError):
    pass


class Collection(enum.Enum):
    EVENTS = "Events"
    SUMMARIES = "Summaries"
    PROFILES = "Profiles"


def _encode_ulid(timestamp_ms: int, entropy: bytes) -> str:
    value = (timestamp_ms & ((1 << 48) - 1)) << 80
    value |= int.from_bytes(entropy[:10], "big")
    chars = []
    for shift in range(125, -1, -5):
        chars.append(_B32[(value >> shift) & 31])
    return "".join(chars)


def new_ulid(now_s: float, entropy: bytes | None = None) -> str:
    return _encode_ulid(int(now_s * 1000), entropy if entropy is not None else os.urandom(10))


def deterministic_ulid(now_s: float, *parts: str) -> str:
    """ULID whose entropy derives from the given parts; same inputs, same id."""
    digest = hashlib.sha256("|".join(parts).encode("utf-8")).digest()
    return _encode_ulid(int(now_s * 1000), digest[:10])


@dataclass
class MemoryRecord:
    id: str
    collection: Collection
    text: str
    embedding: np.ndarray
    index_keys: list[str]
    importance: int
    created_at: float
    updated_at: float
    user_id: str
    meta: dict = field(default_factory=dict)

    def to_json_dict(self, include_embedding: bool = True) -> dict:
        out = {
            "id": self.id,
            "collection": self.collection.value,
            "text": self.text,
            "index_keys": list(self.index_keys),
            "importance": self.importance,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "user_id": self.user_id,
            "meta": self.meta,
        }
        if include_embedding:
            out["embedding"] = [float(x) for x in self.embedding]
        return out


@dataclass(frozen=True)
class RankComponents:
    s_similarity: float
    s_importance: float
    s_recency: float

    @property
    def s_rank(self) -> float:
        return self.s_similarity + self.s_importance + self.s_recency


@dataclass(frozen=True)
class RankedHit:
    record: MemoryRecord
    s_similarity: float
    s_importance: float
    s_recency: float
    s_rank: float


def rank_score(similarity: float, importance: int, age_s: float,
               half_life_s: float = DEFAULT_HALF_LIFE_S,
               weights: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> RankComponents:
    """Composite retrieval score; negative cosine clamps to 0, age clamps to 0."""
    if half_life_s <= 0:
        raise NonPositiveHalfLife(f"half_life must be positive, got {half_life_s}")
    if not 1 <= importance <= 10:
        raise InvalidImportance(f"importance must be in [1, 10], got {importance}")
    s_sim = weights[0] * min(1.0, max(0.0, similarity))
    s_imp = weights[1] * (importance / 10.0)
    s_rec = weights[2] * (2.0 ** (-max(0.0, age_s) / half_life_s))
    return RankComponents(s_sim, s_imp, s_rec)


class VectorStore:
    """In-memory per-user store with one writer at a time and snapshot reads.

    Mutations hold the store lock; queries copy the record list under the
    lock and score outside it, so readers always see a consistent
    point-in-time view.
    """

    def __init__(self, user_id: str, dims: int,
                 half_life_s: float = DEFAULT_HALF_LIFE_S,
                 weights: tuple[float, float, float] = (1.0, 1.0, 1.0)):
        if half_life_s <= 0:
            raise NonPositiveHalfLife(f"half_life must be positive, got {half_life_s}")
        self.user_id = user_id
        self.dims = dims
        self.half_life_s = half_life_s
        self.weights = weights
        self._records: dict[str, MemoryRecord] = {}
        self._lock = threading.Lock()
        self._matrix_cache: dict[Collection, tuple[list[str], np.ndarray]] = {}

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    # -- mutation ------------------------------------------------------

    def upsert(self, record: MemoryRecord) -> str:
        self._validate(record)
        with self._lock:
            existing = self._records.get(record.id)
            if existing is not None and record.updated_at < existing.updated_at:
                raise InvalidRecord(
                    f"record {record.id} update would move updated_at backwards"
                )
            stored = replace(
                record,
                embedding=np.asarray(record.embedding, dtype=np.float64).copy(),
                index_keys=list(record.index_keys),
                meta=dict(record.meta),
            )
            if existing is not None:
                stored.created_at = existing.created_at
            self._records[record.id] = stored
            self._matrix_cache.pop(record.collection, None)
        return record.id

    def _validate(self, record: MemoryRecord) -> None:
        if record.user_id != self.user_id:
            raise InvalidRecord(
                f"record belongs to {record.user_id!r}, store is for {self.user_id!r}"
            )
        if not 1 <= record.importance <= 10:
            raise InvalidImportance(
                f"importance must be in [1, 10], got {record.importance}"
            )
        emb = np.asarray(record.embedding, dtype=np.float64)
        if emb.shape != (self.dims,):
            raise DimensionMismatch(
                f"embedding has shape {emb.shape}, store dimension is {self.dims}"
            )
        if record.updated_at < record.created_at:
            raise InvalidRecord("updated_at must be >= created_at")

    # -- reads ---------------------------------------------------------

    def get(self, record_id: str) -> MemoryRecord | None:
        with self._lock:
            return self._records.get(record_id)

    def records(self, collection: Collection | None = None) -> list[MemoryRecord]:
        with self._lock:
            values = list(self._records.values())
        if collection is not None:
            values = [r for r in values if r.collection is collection]
        return sorted(values, key=lambda r: r.id)

    def _collection_view(self, collection: Collection) -> tuple[list[MemoryRecord], np.ndarray]:
        with self._lock:
            cached = self._matrix_cache.get(collection)
            recs = [r for r in self._records.values() if r.collection is collection]
            recs.sort(key=lambda r: r.id)
            if cached is not None and cached[0] == [r.id for r in recs]:
                return recs, cached[1]
            matrix = (np.stack([r.embedding for r in recs])
                      if recs else np.zeros((0, self.dims)))
            self._matrix_cache[collection] = ([r.id for r in recs], matrix)
            return recs, matrix

    def _check_query(self, query: np.ndarray) -> np.ndarray:
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (self.dims,):
            raise DimensionMismatch(
                f"query has shape {q.shape}, store dimension is {self.dims}"
            )
        return q

    def query_top_k(self, collection: Collection, query: np.ndarray, k: int,
                    now: float) -> list[RankedHit]:
        """Top-k by s_rank; ties broken by newer updated_at then lexicographic id."""
        q = self._check_query(query)
        recs, matrix = self._collection_view(collection)
        if not recs:
            return []
        qnorm = float(np.linalg.norm(q))
        if qnorm == 0.0:
            sims = np.zeros(len(recs))
        else:
            norms = np.linalg.norm(matrix, axis=1)
            sims = np.where(norms > 0.0, matrix @ q / np.where(norms > 0, norms * qnorm, 1.0), 0.0)
        hits = []
        for rec, sim in zip(recs, sims):
            comps = rank_score(float(sim), rec.importance, now - rec.updated_at,
                               self.half_life_s, self.weights)
            hits.append(RankedHit(rec, comps.s_similarity, comps.s_importance,
                                  comps.s_recency, comps.s_rank))
        hits.sort(key=lambda h: (-h.s_rank, -h.record.updated_at, h.record.id))
        return hits[:max(0, k)]

    def best_match_above(self, collection: Collection, query: np.ndarray,
                         threshold: float) -> MemoryRecord | None:
        """Highest raw cosine strictly above the threshold, or None."""
        q = self._check_query(query)
        recs, matrix = self._collection_view(collection)
        if not recs:
            return None
        qnorm = float(np.linalg.norm(q))
        if qnorm == 0.0:
            return None
        norms = np.linalg.norm(matrix, axis=1)
        sims = np.where(norms > 0.0, matrix @ q / np.where(norms > 0, norms * qnorm, 1.0), 0.0)
        ranked = sorted(
            zip(recs, sims),
            key=lambda pair: (-pair[1], -pair[0].updated_at, pair[0].id),
        )
        best_rec, best_sim = ranked[0]
        return best_rec if best_sim > threshold else None

    # -- persistence ---------------------------------------------------

    def snapshot_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(SNAPSHOT_MAGIC)
        buf.write(struct.pack("<H", SNAPSHOT_VERSION))
        buf.write(struct.pack("<I", self.dims))
        uid = self.user_id.encode("utf-8")
        buf.write(struct.pack("<H", len(uid)))
        buf.write(uid)
        records = self.records()
        buf.write(struct.pack("<I", len(records)))
        for rec in records:
            blob = json.dumps(rec.to_json_dict(include_embedding=False),
                              sort_keys=True, separators=(",", ":")).encode("utf-8")
            buf.write(struct.pack("<I", len(blob)))
            buf.write(blob)
            buf.write(rec.embedding.astype("<f8").tobytes())
        body = buf.getvalue()
        return body + struct.pack("<I", zlib.crc32(body))

    def snapshot(self, path: str) -> None:
        try:
            tmp = path + ".tmp"
            with open(tmp, "wb") as fh:
                fh.write(self.snapshot_bytes())
            os.replace(tmp, path)
        except OSError as exc:
            raise IoFailure(str(exc)) from exc

    @classmethod
    def load_bytes(cls, data: bytes, half_life_s: float = DEFAULT_HALF_LIFE_S,
                   weights: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> "VectorStore":
        if len(data) < 4 + 2 + 4 + 2 + 4 + 4:
            raise ChecksumMismatch("snapshot truncated")
        body, crc_bytes = data[:-4], data[-4:]
        if zlib.crc32(body) != struct.unpack("<I", crc_bytes)[0]:
            raise ChecksumMismatch("snapshot checksum mismatch")
        buf = io.BytesIO(body)
        if buf.read(4) != SNAPSHOT_MAGIC:
            raise VersionMismatch("not a store snapshot")
        (version,) = struct.unpack("<H", buf.read(2))
        if version != SNAPSHOT_VERSION:
            raise VersionMismatch(f"snapshot version {version}, expected {SNAPSHOT_VERSION}")
        (dims,) = struct.unpack("<I", buf.read(4))
        (uid_len,) = struct.unpack("<H", buf.read(2))
        user_id = buf.read(uid_len).decode("utf-8")
        store = cls(user_id, dims, half_life_s, weights)
        (count,) = struct.unpack("<I", buf.read(4))
        for _ in range(count):
            (blob_len,) = struct.unpack("<I", buf.read(4))
            fields = json.loads(buf.read(blob_len).decode("utf-8"))
            embedding = np.frombuffer(buf.read(dims * 8), dtype="<f8").copy()
            record = MemoryRecord(
                id=fields["id"],
                collection=Collection(fields["collection"]),
                text=fields["text"],
                embedding=embedding,
                index_keys=fields["index_keys"],
                importance=fields["importance"],
                created_at=fields["created_at"],
                updated_at=fields["updated_at"],
                user_id=fields["user_id"],
                meta=fields.get("meta", {}),
            )
            store._records[record.id] = record
        return store

    @classmethod
    def load(cls, path: str, half_life_s: float = DEFAULT_HALF_LIFE_S,
             weights: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> "VectorStore":
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        return cls.load_bytes(data, half_life_s, weights)

    def export_jsonl(self) -> str:
        lines = [
            json.dumps(rec.to_json_dict(include_embedding=True), sort_keys=True)
            for rec in self.records()
        ]
        return "\n".join(lines) + ("\n" if lines else "")
