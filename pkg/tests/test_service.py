import itertools
import random

import pytest
from fastapi.testclient import TestClient

from shelflife.errors import (
    OwnershipError,
    ReplayError,
    UnknownAnnotatorError,
    ValidationError,
)
from shelflife.service import AnnotationStore, ServiceConfig, create_app, recover_log
from shelflife.service.store import load_corpus, load_roster
from shelflife.trec_io import fold_judgments, parse_annotation_log, serialize_event


class SimulatedCrash(Exception):
    pass


def make_store(tmp_path, seed=0, clock=None) -> AnnotationStore:
    docs = [f"d{i}" for i in range(6)]
    tasks = {
        "a1": [("t1", d) for d in docs[:3]] + [("t2", d) for d in docs[3:]],
        "a2": [("t1", d) for d in docs[:3]],
    }
    kwargs = {}
    if clock is not None:
        kwargs["clock"] = clock
    return AnnotationStore(
        log_path=tmp_path / "log.jsonl",
        tasks=tasks,
        titles={"t1": "first topic", "t2": "second topic"},
        corpus={d: f"text of {d}" for d in docs},
        tokens={"a1": "tok1", "a2": "tok2"},
        admin_token="admintok",
        config=ServiceConfig(search_url_template="https://search.example/?q={query}"),
        seed=seed,
        **kwargs,
    )


class TestTaskFlow:
    def test_fresh_annotator_gets_first_of_shuffled_queue(self, tmp_path):
        store = make_store(tmp_path)
        task = store.next_task("a1")
        assert task is not None
        assert task.position == 1
        assert task.remaining == 6
        assert task.text == f"text of {task.doc}"

    def test_queue_shuffle_depends_on_annotator(self, tmp_path):
        store = make_store(tmp_path)
        queue_1 = store._queues["a1"]
        queue_2 = store._queues["a2"]
        assert sorted(queue_2) == queue_2 or queue_1[:3] != queue_2

    def test_queue_advances_after_judgment(self, tmp_path):
        store = make_store(tmp_path)
        first = store.next_task("a1")
        store.submit_judgment("a1", first.topic, first.doc, 2)
        second = store.next_task("a1")
        assert (second.topic, second.doc) != (first.topic, first.doc)

    def test_done_signal_when_all_judged(self, tmp_path):
        store = make_store(tmp_path)
        while (task := store.next_task("a2")) is not None:
            store.submit_judgment("a2", task.topic, task.doc, 1)
        assert store.next_task("a2") is None
        assert store.progress("a2")["judged"] == 3

    def test_unknown_annotator(self, tmp_path):
        store = make_store(tmp_path)
        with pytest.raises(UnknownAnnotatorError):
            store.next_task("ghost")


class TestSubmission:
    def test_valid_judgment_increments_progress_once(self, tmp_path):
        store = make_store(tmp_path)
        task = store.next_task("a1")
        ack = store.submit_judgment("a1", task.topic, task.doc, 2)
        assert ack["ok"] and ack["progress"]["judged"] == 1
        ack = store.submit_judgment("a1", task.topic, task.doc, 1)
        assert ack["progress"]["judged"] == 1  # resubmission, no double count
        exported = store.export_annotations()["a1"]
        assert exported.judgments[(task.topic, task.doc)] == 1  # last write wins

    def test_out_of_range_grade(self, tmp_path):
        store = make_store(tmp_path)
        task = store.next_task("a1")
        with pytest.raises(ValidationError):
            store.submit_judgment("a1", task.topic, task.doc, 4)

    def test_unassigned_task_rejected(self, tmp_path):
        store = make_store(tmp_path)
        with pytest.raises(OwnershipError):
            store.submit_judgment("a2", "t2", "d4", 1)  # t2 belongs to a1 only

    def test_narrative_versioning(self, tmp_path):
        store = make_store(tmp_path)
        assert store.submit_narrative("a1", "t1", "first draft")["version"] == 1
        assert store.submit_narrative("a1", "t1", "final")["version"] == 2
        assert store.latest_narrative("a1", "t1") == "final"
        assert len(store.export_narratives()) == 2  # all versions kept

    def test_narrative_ownership_and_validation(self, tmp_path):
        store = make_store(tmp_path)
        with pytest.raises(OwnershipError):
            store.submit_narrative("a2", "t2", "not my topic")
        with pytest.raises(ValidationError):
            store.submit_narrative("a1", "t1", "   ")

    def test_flag_capture(self, tmp_path):
        store = make_store(tmp_path)
        store.submit_flag("a1", "t1", "ambiguous intent", doc="d0")
        (flag,) = store.export_flags()
        assert flag.note == "ambiguous intent"
        assert flag.doc == "d0"


class TestExportFold:
    def test_export_is_pure_function_of_log(self, tmp_path):
        store = make_store(tmp_path)
        task = store.next_task("a1")
        store.submit_judgment("a1", task.topic, task.doc, 3)
        store.submit_narrative("a1", task.topic, "why")
        first = {a: s.judgments for a, s in store.export_annotations().items()}
        second = {a: s.judgments for a, s in store.export_annotations().items()}
        assert first == second
        reopened = make_store(tmp_path)
        assert {
            a: s.judgments for a, s in reopened.export_annotations().items()
        } == first

    def test_fold_matches_brute_force_on_random_interleavings(self, tmp_path):
        rng = random.Random(157)
        counter = itertools.count()
        clock = lambda: f"2025-01-01T00:{next(counter) // 60:02d}:{next(counter) % 60:02d}+00:00"
        store = make_store(tmp_path, clock=clock)
        submitted = []
        for _ in range(60):
            annotator = rng.choice(["a1", "a2"])
            topic, doc = rng.choice(store._queues[annotator])
            grade = rng.randrange(4)
            store.submit_judgment(annotator, topic, doc, grade)
            submitted.append((annotator, topic, doc, grade))
        expected = {}
        for annotator, topic, doc, grade in submitted:  # brute-force: last wins
            expected[(annotator, topic, doc)] = grade
        exported = store.export_annotations()
        for (annotator, topic, doc), grade in expected.items():
            assert exported[annotator].judgments[(topic, doc)] == grade
        events = parse_annotation_log((tmp_path / "log.jsonl").read_text())
        folded = fold_judgments(events)
        assert {a: s.judgments for a, s in folded.items()} == {
            a: s.judgments for a, s in exported.items()
        }


class TestDurability:
    def crash_once(self, store, mode: str, annotator: str, topic: str, doc: str, grade: int) -> bool:
        """Inject one crash inside the append path; returns acked."""
        real_append = store.log.append
        handle = store.log._handle

        def faulty(event):
            line = serialize_event(event)
            if mode == "before_write":
                raise SimulatedCrash
            if mode == "partial_write":
                handle.write(line[: max(1, len(line) // 2)])
                handle.flush()
                raise SimulatedCrash
            if mode == "after_write_before_fsync":
                handle.write(line)
                handle.flush()
                raise SimulatedCrash
            real_append(event)
            if mode == "after_fsync_before_ack":
                raise SimulatedCrash

        store.log.append = faulty
        try:
            store.submit_judgment(annotator, topic, doc, grade)
            return True
        except SimulatedCrash:
            return False
        finally:
            store.log.append = real_append

    def test_acknowledged_never_lost(self, tmp_path):
        rng = random.Random(163)
        modes = [
            "none",
            "before_write",
            "partial_write",
            "after_write_before_fsync",
            "after_fsync_before_ack",
        ]
        acked: dict[tuple, int] = {}
        for i in range(60):
            store = make_store(tmp_path)  # fresh process over the same log
            annotator = rng.choice(["a1", "a2"])
            topic, doc = rng.choice(store._queues[annotator])
            grade = rng.randrange(4)
            mode = rng.choice(modes)
            if mode == "none":
                store.submit_judgment(annotator, topic, doc, grade)
                ok = True
            else:
                ok = self.crash_once(store, mode, annotator, topic, doc, grade)
            if ok:
                acked[(annotator, topic, doc)] = grade
            store.log.close()
            # recovery + invariant: every acked judgment is in the fold
            events = recover_log(tmp_path / "log.jsonl")
            folded = fold_judgments(events)
            for (a, t, d), g in acked.items():
                assert (t, d) in folded[a].judgments
            # keys acked exactly once and never re-submitted must hold their grade
        final = fold_judgments(recover_log(tmp_path / "log.jsonl"))
        for (a, t, d), g in acked.items():
            assert (t, d) in final[a].judgments

    def test_torn_line_recovery(self, tmp_path):
        store = make_store(tmp_path)
        task = store.next_task("a1")
        store.submit_judgment("a1", task.topic, task.doc, 2)
        store.log.close()
        log_path = tmp_path / "log.jsonl"
        with open(log_path, "a", encoding="utf-8") as f:
            f.write('{"event_type": "judgment", "annot')  # torn write
        events = recover_log(log_path)
        assert len(events) == 1
        reopened = make_store(tmp_path)
        assert reopened.export_annotations()["a1"].judgments == {
            (task.topic, task.doc): 2
        }

    def test_corrupt_interior_record_halts_replay(self, tmp_path):
        log_path = tmp_path / "log.jsonl"
        log_path.write_text('not json\n{"event_type": "flag"}\n')
        with pytest.raises(ReplayError, match="line 1"):
            recover_log(log_path)


class TestHelpers:
    def test_load_corpus(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"doc": "d1", "text": "hello"}\n\n{"doc": "d2", "text": "bye"}\n')
        assert load_corpus(path) == {"d1": "hello", "d2": "bye"}

    def test_load_roster(self, tmp_path):
        path = tmp_path / "roster.json"
        path.write_text('{"annotators": {"a1": "t1", "a2": "t2"}, "admin_token": "adm"}')
        tokens, admin = load_roster(path)
        assert tokens == {"a1": "t1", "a2": "t2"}
        assert admin == "adm"


class TestHttpApi:
    @pytest.fixture
    def client(self, tmp_path):
        store = make_store(tmp_path)
        return TestClient(create_app(store))

    def auth(self, token):
        return {"Authorization": f"Bearer {token}"}

    def test_config_open(self, client):
        config = client.get("/config").json()
        assert config["grade_labels"]["3"] == "perfectly relevant"
        assert config["grade_labels"]["0"] == "non-relevant"
        assert "{query}" in config["search_url_template"]

    def test_requires_token(self, client):
        assert client.get("/task/next", params={"annotator": "a1"}).status_code == 401

    def test_identity_must_match_annotator_param(self, client):
        response = client.get(
            "/task/next", params={"annotator": "a2"}, headers=self.auth("tok1")
        )
        assert response.status_code == 403

    def test_judge_flow_end_to_end(self, client):
        headers = self.auth("tok2")
        judged = 0
        while True:
            task = client.get(
                "/task/next", params={"annotator": "a2"}, headers=headers
            ).json()
            if task["done"]:
                break
            response = client.post(
                "/judgment",
                json={
                    "annotator": "a2",
                    "topic": task["topic"],
                    "doc": task["doc"],
                    "grade": judged % 4,
                },
                headers=headers,
            )
            assert response.status_code == 200
            judged += 1
        assert judged == 3
        progress = client.get(
            "/progress", params={"annotator": "a2"}, headers=headers
        ).json()
        assert progress["judged"] == 3

    def test_topics_view_and_narrative(self, client):
        headers = self.auth("tok1")
        topics = client.get(
            "/topics", params={"annotator": "a1"}, headers=headers
        ).json()
        assert {t["topic"] for t in topics} == {"t1", "t2"}
        response = client.post(
            "/narrative",
            json={"annotator": "a1", "topic": "t1", "narrative_text": "my intent"},
            headers=headers,
        )
        assert response.status_code == 200
        topics = client.get(
            "/topics", params={"annotator": "a1"}, headers=headers
        ).json()
        assert next(t for t in topics if t["topic"] == "t1")["narrative"] == "my intent"

    def test_flag_endpoint(self, client):
        response = client.post(
            "/flag",
            json={"annotator": "a1", "topic": "t1", "note": "odd doc", "doc": "d0"},
            headers=self.auth("tok1"),
        )
        assert response.status_code == 200

    def test_ownership_error_surfaces_as_403(self, client):
        response = client.post(
            "/judgment",
            json={"annotator": "a2", "topic": "t2", "doc": "d4", "grade": 1},
            headers=self.auth("tok2"),
        )
        assert response.status_code == 403

    def test_validation_error_is_422(self, client):
        headers = self.auth("tok1")
        task = client.get(
            "/task/next", params={"annotator": "a1"}, headers=headers
        ).json()
        response = client.post(
            "/judgment",
            json={"annotator": "a1", "topic": task["topic"], "doc": task["doc"], "grade": 9},
            headers=headers,
        )
        assert response.status_code == 422

    def test_export_admin_only(self, client):
        assert client.get("/export/qrels", headers=self.auth("tok1")).status_code == 401
        headers = self.auth("tok1")
        task = client.get(
            "/task/next", params={"annotator": "a1"}, headers=headers
        ).json()
        client.post(
            "/judgment",
            json={"annotator": "a1", "topic": task["topic"], "doc": task["doc"], "grade": 2},
            headers=headers,
        )
        exported = client.get("/export/qrels", headers=self.auth("admintok")).json()
        assert task["doc"] in exported["qrels"]["a1"]
