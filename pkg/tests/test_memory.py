import random
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from companion.capture import RealTimeContext
from companion.memory import (
    CommitCounts,
    DialogueTurn,
    Speaker,
    cluster_events,
    commit_day,
    importance_score,
    index_keys,
    segment_sessions,
    summarize_event,
    summarize_session,
)
from companion.providers import reference_bundle
from companion.providers.embedding import cosine, embed_text
from companion.vecstore import Collection, VectorStore

BUNDLE = reference_bundle()

# five location/activity symbols with deliberate token overlap so random
# sequences exercise partial similarities, not just 0 and 1
ALPHABET = [
    ("office", "working"),
    ("office", "meeting"),
    ("home", "working"),
    ("gym", "playing badminton"),
    ("park", "having a picnic"),
]


def ctx(location, activity, tick=0, ts=None, user="u1"):
    return RealTimeContext(
        tick=tick, timestamp=ts if ts is not None else float(tick),
        caption="", utterance="", location=location, activity=activity,
        user_id=user)


def make_sequence(symbols, base_ts=0.0):
    return [ctx(loc, act, tick=i, ts=base_ts + i * 10.0)
            for i, (loc, act) in enumerate(symbols)]


def brute_force_clusters(contexts, theta):
    """Longest-window oracle: at each position take the longest contiguous
    window whose pairwise cosines all clear the threshold, checked by an
    explicit all-pairs double loop."""
    embs = [embed_text(f"{c.location} {c.activity}") for c in contexts]
    clusters = []
    i = 0
    while i < len(embs):
        j = i
        while j + 1 < len(embs):
            window = embs[i:j + 2]
            ok = all(
                cosine(window[a], window[b]) >= theta
                for a in range(len(window)) for b in range(a + 1, len(window))
            )
            if not ok:
                break
            j += 1
        clusters.append(list(range(i, j + 1)))
        i = j + 1
    return clusters


def check_conditions(clusters, contexts, theta):
    """Assert the three clustering conditions plus the partition property."""
    embs = [embed_text(f"{c.location} {c.activity}") for c in contexts]
    flat = [c.tick for cluster in clusters for c in cluster]
    assert flat == [c.tick for c in contexts], "clusters must partition the input in order"
    bounds = []
    pos = 0
    for cluster in clusters:
        idx = list(range(pos, pos + len(cluster)))
        pos += len(cluster)
        bounds.append(idx)
        # condition (2): all pairs within the cluster clear the threshold
        for a in idx:
            for b in idx:
                if a < b:
                    assert cosine(embs[a], embs[b]) >= theta
    # conditions (1)/(3): the first element of each cluster cannot extend the
    # previous cluster
    for prev, nxt in zip(bounds, bounds[1:]):
        first = nxt[0]
        assert any(cosine(embs[first], embs[m]) < theta for m in prev)


class TestClustering:
    def test_office_office_gym(self):
        contexts = make_sequence([ALPHABET[0], ALPHABET[0], ALPHABET[3]])
        clusters = cluster_events(contexts, BUNDLE, 0.8)
        assert [[c.tick for c in cl] for cl in clusters] == [[0, 1], [2]]

    def test_singleton(self):
        contexts = make_sequence([ALPHABET[0]])
        assert len(cluster_events(contexts, BUNDLE, 0.8)) == 1

    def test_identical_collapse(self):
        contexts = make_sequence([ALPHABET[1]] * 7)
        clusters = cluster_events(contexts, BUNDLE, 0.8)
        assert len(clusters) == 1
        assert len(clusters[0]) == 7

    def test_all_orthogonal(self):
        contexts = make_sequence([ALPHABET[0], ALPHABET[3], ALPHABET[4]])
        assert len(cluster_events(contexts, BUNDLE, 0.8)) == 3

    def test_empty_input(self):
        assert cluster_events([], BUNDLE, 0.8) == []

    def test_matches_brute_force_random(self):
        rng = random.Random(1234)
        for _ in range(200):
            length = rng.randint(1, 12)
            symbols = [rng.choice(ALPHABET) for _ in range(length)]
            theta = rng.choice([0.3, 0.45, 0.7, 0.85])
            contexts = make_sequence(symbols)
            got = cluster_events(contexts, BUNDLE, theta)
            got_idx = [[c.tick for c in cl] for cl in got]
            assert got_idx == brute_force_clusters(contexts, theta)
            check_conditions(got, contexts, theta)

    def test_cluster_count_bounds(self):
        rng = random.Random(9)
        for _ in range(50):
            symbols = [rng.choice(ALPHABET) for _ in range(rng.randint(1, 10))]
            contexts = make_sequence(symbols)
            p = len(cluster_events(contexts, BUNDLE, 0.8))
            assert 1 <= p <= len(contexts)


class TestEventSummary:
    def test_gym_triplet(self):
        base = datetime(2023, 11, 1, 16, 0, 0, tzinfo=timezone.utc).timestamp()
        contexts = [
            ctx("gym", "playing badminton", tick=0, ts=base),
            ctx("gym", "playing badminton", tick=1, ts=base + 3600),
        ]
        event = summarize_event(contexts, BUNDLE)
        assert event.triplet() == ("<2023-11-01 16:00:00 - 2023-11-01 17:00:00, "
                                   "at the gym, playing badminton>")
        assert "From 2023-11-01 16:00:00 to 2023-11-01 17:00:00" in event.summary

    def test_singleton_span(self):
        event = summarize_event([ctx("office", "working", ts=50.0)], BUNDLE)
        assert event.start == event.end == 50.0

    def test_modal_location(self):
        contexts = [
            ctx("office", "working", 0, 0.0),
            ctx("hallway", "working", 1, 10.0),
            ctx("office", "working", 2, 20.0),
        ]
        event = summarize_event(contexts, BUNDLE)
        assert event.location == "office"

    def test_modal_tie_earliest(self):
        contexts = [ctx("hallway", "working", 0, 0.0), ctx("office", "working", 1, 10.0)]
        assert summarize_event(contexts, BUNDLE).location == "hallway"


class TestSessions:
    def test_split_at_gap(self):
        turns = [
            DialogueTurn(Speaker.USER, "a", 0.0),
            DialogueTurn(Speaker.SYSTEM, "b", 5 * 60.0),
            DialogueTurn(Speaker.USER, "c", 20 * 60.0),
        ]
        sessions = segment_sessions(turns, 10 * 60.0)
        assert [len(s.turns) for s in sessions] == [2, 1]

    def test_gap_exactly_threshold_stays(self):
        turns = [DialogueTurn(Speaker.USER, "a", 0.0),
                 DialogueTurn(Speaker.USER, "b", 10 * 60.0)]
        assert len(segment_sessions(turns, 10 * 60.0)) == 1

    def test_one_turn(self):
        assert len(segment_sessions([DialogueTurn(Speaker.USER, "a", 0.0)])) == 1

    def test_empty(self):
        assert segment_sessions([]) == []

    @given(gaps=st.lists(st.floats(0, 40 * 60), max_size=25))
    @settings(max_examples=200, deadline=None)
    def test_segmentation_properties(self, gaps):
        ts = 0.0
        turns = [DialogueTurn(Speaker.USER, "x", 0.0)]
        for gap in gaps:
            ts += gap
            turns.append(DialogueTurn(Speaker.USER, "x", ts))
        sessions = segment_sessions(turns, 10 * 60.0)
        # concatenation identity
        flat = [t for s in sessions for t in s.turns]
        assert flat == turns
        # intra-session gaps <= threshold, boundary gaps > threshold
        for s in sessions:
            for a, b in zip(s.turns, s.turns[1:]):
                assert b.timestamp - a.timestamp <= 10 * 60.0
        for s1, s2 in zip(sessions, sessions[1:]):
            assert s2.turns[0].timestamp - s1.turns[-1].timestamp > 10 * 60.0


class TestSessionSummary:
    def test_paper_writing_session(self):
        session = segment_sessions([
            DialogueTurn(Speaker.USER, "I am writing a paper", 0.0),
            DialogueTurn(Speaker.SYSTEM, "Nice, what is it about?", 30.0),
            DialogueTurn(Speaker.USER, "I want to ask for tips on how to write it well", 60.0),
        ])[0]
        summary = summarize_session(session, BUNDLE)
        assert "writing a paper and asks for tips" in summary.topics_and_details

    def test_system_only_session(self):
        session = segment_sessions([DialogueTurn(Speaker.SYSTEM, "hello!", 0.0)])[0]
        assert "(system only)" in summarize_session(session, BUNDLE).topics_and_details

    def test_deterministic(self):
        session = segment_sessions([DialogueTurn(Speaker.USER, "I am cooking pasta", 0.0)])[0]
        assert (summarize_session(session, BUNDLE).topics_and_details
                == summarize_session(session, BUNDLE).topics_and_details)


class TestIndexing:
    def test_picnic_keys(self):
        keys = index_keys(BUNDLE, "I plan to have a picnic in the park this weekend")
        assert keys == ["weekend plan", "in the park", "have a picnic"]

    def test_unknown_location_omitted(self):
        keys = index_keys(BUNDLE, "working quietly", location="unknown")
        assert not any(k.startswith("at the") for k in keys)

    def test_keys_deduplicated(self):
        keys = index_keys(BUNDLE, "park park park", location="park")
        assert len(keys) == len(set(keys))

    def test_importance_neutral(self):
        assert importance_score(BUNDLE, "bought groceries") == 3

    def test_importance_clamped(self):
        text = "thrilled excited amazing horrible terrified"
        assert importance_score(BUNDLE, text) == 10

    def test_importance_parse_failure_defaults(self):
        broken = reference_bundle()
        object.__setattr__(broken, "completer_base",
                           lambda tag, inputs, seed: "very important")
        assert importance_score(broken, "whatever") == 5


class TestCommitDay:
    def day_fixture(self):
        base = datetime(2023, 11, 1, 9, 0, 0, tzinfo=timezone.utc).timestamp()
        symbols = [ALPHABET[0]] * 3 + [ALPHABET[3]] * 2 + [ALPHABET[4]] * 3
        contexts = make_sequence(symbols, base_ts=base)
        turns = [
            DialogueTurn(Speaker.USER, "I am writing a paper", base),
            DialogueTurn(Speaker.SYSTEM, "good luck!", base + 60),
            DialogueTurn(Speaker.USER, "I never drink coffee", base + 3600),
            DialogueTurn(Speaker.SYSTEM, "noted", base + 3660),
        ]
        return contexts, turns

    def test_counts_and_records(self):
        store = VectorStore("u1", 256)
        contexts, turns = self.day_fixture()
        counts = commit_day(store, BUNDLE, "u1", "2023-11-01", contexts, turns)
        assert counts == CommitCounts(events=3, summaries=2)
        assert len(store.records(Collection.EVENTS)) == 3
        assert len(store.records(Collection.SUMMARIES)) == 2
        assert len(store) == 5

    def test_empty_day(self):
        store = VectorStore("u1", 256)
        counts = commit_day(store, BUNDLE, "u1", "2023-11-01", [], [])
        assert counts == CommitCounts(0, 0)
        assert len(store) == 0

    def test_recommit_idempotent_bytes(self):
        store = VectorStore("u1", 256)
        contexts, turns = self.day_fixture()
        commit_day(store, BUNDLE, "u1", "2023-11-01", contexts, turns)
        first = store.snapshot_bytes()
        commit_day(store, BUNDLE, "u1", "2023-11-01", contexts, turns)
        assert store.snapshot_bytes() == first

    def test_counts_match_module_oracles(self):
        store = VectorStore("u1", 256)
        contexts, turns = self.day_fixture()
        counts = commit_day(store, BUNDLE, "u1", "2023-11-01", contexts, turns)
        assert counts.events == len(brute_force_clusters(contexts, 0.8))
        assert counts.summaries == len(segment_sessions(turns))
