import json
import random

import pytest

from shelflife.cli import csv_to_markdown, main, parse_manifest


@pytest.fixture
def workspace(tmp_path):
    rng = random.Random(211)
    topics = [f"t{i}" for i in range(3)]
    docs = [f"d{i}" for i in range(10)]
    primary_lines = []
    for t in topics:
        for d in docs:
            primary_lines.append(f"{t} 0 {d} {rng.randrange(4)}")
    (tmp_path / "primary.qrels").write_text("\n".join(primary_lines) + "\n")
    for name in ("alice", "bob"):
        lines = []
        for t in topics:
            for d in docs:
                if rng.random() < 0.8:
                    lines.append(f"{t} 0 {d} {rng.randrange(4)}")
        (tmp_path / f"{name}.qrels").write_text("\n".join(lines) + "\n")
    for i, tag in enumerate(("sysA", "sysB", "sysC")):
        lines = []
        for t in topics:
            order = list(docs)
            rng.shuffle(order)
            for rank, d in enumerate(order, start=1):
                lines.append(f"{t} Q0 {d} {rank} {float(len(docs) - rank)} {tag}")
        (tmp_path / f"{tag}.run").write_text("\n".join(lines) + "\n")
    manifest = "\n".join(
        [
            "sysA.run,,lexical",
            "sysB.run,,neural",
            "sysC.run,,llm",
        ]
    )
    (tmp_path / "manifest.csv").write_text(manifest + "\n")
    return tmp_path


def run_cli(args) -> int:
    return main([str(a) for a in args])


class TestManifest:
    def test_parse(self, workspace):
        rows = parse_manifest(str(workspace / "manifest.csv"))
        assert [r[2] for r in rows] == ["lexical", "neural", "llm"]

    def test_bad_category(self, tmp_path):
        bad = tmp_path / "m.csv"
        bad.write_text("x.run,,quantum\n")
        from shelflife.errors import FormatError

        with pytest.raises(FormatError):
            parse_manifest(str(bad))

    def test_markdown_rendering(self):
        table = csv_to_markdown("a,b\n1,2\n")
        assert table.splitlines()[0] == "| a | b |"
        assert table.splitlines()[2] == "| 1 | 2 |"


class TestPipelineCommands:
    def test_pool_then_assign(self, workspace):
        out = workspace / "out"
        assert run_cli([
            "pool", "--qrels", workspace / "primary.qrels",
            "--nonrel-sample", "3", "--seed", "5", "--out", out,
        ]) == 0
        pools = json.loads((out / "pools.json").read_text())
        assert set(pools) == {"t0", "t1", "t2"}
        assert run_cli([
            "assign", "--pools", out / "pools.json",
            "--annotators", "a1,a2,a3,a4", "--seed", "5", "--out", out,
        ]) == 0
        assert (out / "assignment.csv").exists()
        assert (out / "tasks" / "a1.csv").exists()

    def test_evaluate(self, workspace):
        out = workspace / "out"
        assert run_cli([
            "evaluate", "--manifest", workspace / "manifest.csv",
            "--qrels", workspace / "primary.qrels",
            "--metrics", "ndcg@10,p@10", "--out", out,
        ]) == 0
        text = (out / "metrics.csv").read_text()
        assert text.startswith("tag,metric,topic,value")
        assert ",ALL," in text

    def test_agreement_ratios_transitions(self, workspace):
        out = workspace / "out"
        base = [
            "--primary", workspace / "primary.qrels",
            "--secondary", workspace / "alice.qrels", workspace / "bob.qrels",
            "--out", out,
        ]
        assert run_cli(["agreement", *base]) == 0
        agreement_lines = (out / "agreement.csv").read_text().strip().splitlines()
        assert len(agreement_lines) == 3  # header + primary+group + group
        assert run_cli(["ratios", "--qrels", workspace / "primary.qrels",
                        workspace / "alice.qrels", "--out", out]) == 0
        assert run_cli(["transitions", *base]) == 0
        assert len((out / "transitions.csv").read_text().strip().splitlines()) == 5

    def test_aggregate_writes_fractional_qrels(self, workspace):
        out = workspace / "out"
        assert run_cli([
            "aggregate", "--secondary", workspace / "alice.qrels",
            workspace / "bob.qrels", "--op", "mean", "--out", out,
        ]) == 0
        content = (out / "aggregate_mean.qrels").read_text()
        assert ".5" in content  # fractional means present

    def test_combos_swap_correlate_rankdelta_oracle(self, workspace):
        out = workspace / "out"
        common = [
            "--primary", workspace / "primary.qrels",
            "--secondary", workspace / "alice.qrels", workspace / "bob.qrels",
        ]
        assert run_cli(["combos", *common, "--s", "5", "--seed", "3", "--out", out]) == 0
        assert (out / "combinations.csv").exists()
        assert run_cli([
            "swap", "--manifest", workspace / "manifest.csv", *common,
            "--metric", "ndcg@10", "--s", "20", "--seed", "3", "--out", out,
        ]) == 0
        scatter = (out / "swap_scatter.csv").read_text()
        assert "swap_probability" in scatter.splitlines()[0]
        assert run_cli([
            "correlate", "--manifest", workspace / "manifest.csv", *common,
            "--metric", "ndcg@10", "--mode", "both", "--s", "20", "--seed", "3",
            "--out", out,
        ]) == 0
        correlation = (out / "correlation.csv").read_text().strip().splitlines()
        assert correlation[0] == "mode,tau,rho,rbo"
        assert len(correlation) == 3
        assert run_cli([
            "rankdelta", "--manifest", workspace / "manifest.csv", *common,
            "--metric", "ndcg@10", "--s", "20", "--seed", "3", "--out", out,
        ]) == 0
        assert (out / "rank_delta.csv").exists()
        assert run_cli([
            "oracle", "--manifest", workspace / "manifest.csv", *common,
            "--metrics", "ndcg@10,p@10", "--export-runs", "--out", out,
        ]) == 0
        table = (out / "oracle_table.csv").read_text()
        assert "aggregate,Mean," in table
        assert (out / "oracle_mean.run").exists()

    def test_byte_determinism_of_seeded_commands(self, workspace):
        out_a = workspace / "outA"
        out_b = workspace / "outB"
        for out in (out_a, out_b):
            assert run_cli([
                "swap", "--manifest", workspace / "manifest.csv",
                "--primary", workspace / "primary.qrels",
                "--secondary", workspace / "alice.qrels", workspace / "bob.qrels",
                "--metric", "ndcg@10", "--s", "30", "--seed", "7", "--out", out,
            ]) == 0
        assert (out_a / "swap_scatter.csv").read_bytes() == (
            out_b / "swap_scatter.csv"
        ).read_bytes()
        assert (out_a / "swap_counts.csv").read_bytes() == (
            out_b / "swap_counts.csv"
        ).read_bytes()

    def test_missing_file_is_reported_nonzero(self, workspace, capsys):
        code = run_cli([
            "evaluate", "--runs", workspace / "nope.run",
            "--qrels", workspace / "primary.qrels", "--out", workspace / "out",
        ])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_parse_failure_is_reported_nonzero(self, workspace, capsys):
        bad = workspace / "bad.qrels"
        bad.write_text("only two fields\n")
        code = run_cli([
            "ratios", "--qrels", bad, "--out", workspace / "out",
        ])
        assert code == 1
        err = capsys.readouterr().err
        assert "error:" in err and "line 1" in err


class TestServeWiring:
    def test_pipeline_pool_assign_store_and_http_flow(self, workspace):
        import argparse
        import json as json_mod

        from fastapi.testclient import TestClient

        from shelflife.cli import build_store_from_files
        from shelflife.service import create_app
        from shelflife.trec_io import parse_qrels

        out = workspace / "out"
        assert run_cli([
            "pool", "--qrels", workspace / "primary.qrels",
            "--nonrel-sample", "2", "--seed", "1", "--out", out,
        ]) == 0
        assert run_cli([
            "assign", "--pools", out / "pools.json",
            "--annotators", "a1,a2", "--seed", "1", "--out", out,
        ]) == 0

        pools = json_mod.loads((out / "pools.json").read_text())
        docs = sorted(
            {d for entry in pools.values() for d in entry["core"]}
            | {d for entry in pools.values() for s in entry["samples"] for d in s}
        )
        corpus = out / "corpus.jsonl"
        corpus.write_text(
            "\n".join(json_mod.dumps({"doc": d, "text": f"passage {d}"}) for d in docs)
            + "\n"
        )
        topics_file = out / "topics.tsv"
        topics_file.write_text("".join(f"{t}\ttitle {t}\n" for t in sorted(pools)))
        roster = out / "roster.json"
        roster.write_text(json_mod.dumps(
            {"annotators": {"a1": "tok1", "a2": "tok2"}, "admin_token": "adm"}
        ))

        args = argparse.Namespace(
            pools=str(out / "pools.json"),
            assignment=str(out / "assignment.csv"),
            corpus=str(corpus),
            topics=str(topics_file),
            roster=str(roster),
            log=str(out / "log.jsonl"),
            search_url="https://search.example/?q={query}",
            seed=1,
        )
        store = build_store_from_files(args)
        client = TestClient(create_app(store))
        headers = {"Authorization": "Bearer tok1"}
        for grade in (3, 1, 2):
            task = client.get(
                "/task/next", params={"annotator": "a1"}, headers=headers
            ).json()
            assert not task["done"]
            assert task["text"].startswith("passage ")
            response = client.post(
                "/judgment",
                json={"annotator": "a1", "topic": task["topic"],
                      "doc": task["doc"], "grade": grade},
                headers=headers,
            )
            assert response.status_code == 200
        exported = client.get(
            "/export/qrels", headers={"Authorization": "Bearer adm"}
        ).json()
        parsed = parse_qrels(exported["qrels"]["a1"], annotator="a1")
        assert len(parsed.judgments) == 3
