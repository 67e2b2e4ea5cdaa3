"""Command-line entry point for the re-annotation workbench.

Subcommands cover the full pipeline: pool construction and topic
assignment, the annotation service, agreement and grade analyses,
judgment aggregation, combination sampling, and the system-order
stability reports. Every report is written as CSV plus a markdown
rendering; outputs are byte-deterministic given inputs, flags, and seeds.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import agreement as agreement_mod
from . import stability
from .aggregation import AggregateOp, aggregate_judgments
from .combinations import (
    CombinationSpec,
    SampleConfig,
    available_sets_per_topic,
    count_combinations,
    enumerate_combinations,
    sample_combinations,
    specs_to_csv,
)
from .errors import ConfigurationError, FormatError, ShelflifeError
from .metrics import MetricId, MetricOptions, compute_metric, evaluate_systems, reports_to_csv
from .oracle import build_oracle_run, oracle_comparison_table, oracle_table_csv
from .pooling import PoolConfig, Assignment, assign_topics, assignment_csv, build_secondary_pool, pool_sizes, task_lists
from .trec_io import (
    AnnotationSet,
    Run,
    RunEntry,
    export_fractional_qrels,
    export_run,
    parse_qrels,
    parse_run,
)

ADMIN_TOKEN_ENV = "SHELFLIFE_ADMIN_TOKEN"
RUN_CATEGORIES = ("lexical", "neural", "llm")


# ---------------------------------------------------------------------------
# shared input/output helpers


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_qrels(path: str, provenance: str = "primary") -> AnnotationSet:
    return parse_qrels(_read(path), annotator=Path(path).stem, provenance=provenance)


def _load_secondaries(paths: list[str]) -> list[AnnotationSet]:
    return [_load_qrels(p, provenance="secondary") for p in paths]


def parse_manifest(path: str) -> list[tuple[str, str | None, str]]:
    """Run manifest rows: run path, optional tag override, category."""
    rows = []
    tags_seen = set()
    base = Path(path).parent
    for line_no, line in enumerate(_read(path).splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise FormatError(
                f"{path}:{line_no}: expected 'path,tag,category', got {line!r}"
            )
        run_path, tag, category = parts
        if category not in RUN_CATEGORIES:
            raise FormatError(
                f"{path}:{line_no}: category {category!r} not in {RUN_CATEGORIES}"
            )
        if tag and tag in tags_seen:
            raise FormatError(f"{path}:{line_no}: duplicate tag {tag!r}")
        if tag:
            tags_seen.add(tag)
        rows.append((str((base / run_path)) if not Path(run_path).is_absolute() else run_path, tag or None, category))
    if not rows:
        raise FormatError(f"manifest {path} lists no runs")
    return rows


def _retag(run: Run, tag: str) -> Run:
    by_topic = {
        topic: [
            RunEntry(topic=e.topic, doc=e.doc, rank=e.rank, score=e.score, tag=tag)
            for e in entries
        ]
        for topic, entries in run.by_topic.items()
    }
    return Run(tag=tag, by_topic=by_topic)


def _load_runs_from_manifest(path: str) -> tuple[list[Run], dict[str, str]]:
    runs = []
    categories = {}
    tags = set()
    for run_path, tag, category in parse_manifest(path):
        run = parse_run(_read(run_path))
        if tag:
            run = _retag(run, tag)
        if run.tag in tags:
            raise FormatError(f"duplicate run tag {run.tag!r} in manifest")
        tags.add(run.tag)
        runs.append(run)
        categories[run.tag] = category
    return runs, categories


def _load_runs(args) -> tuple[list[Run], dict[str, str]]:
    if getattr(args, "manifest", None):
        return _load_runs_from_manifest(args.manifest)
    if getattr(args, "runs", None):
        runs = [parse_run(_read(p)) for p in args.runs]
        return runs, {r.tag: "unknown" for r in runs}
    raise ConfigurationError("provide --manifest or --runs")


def _metric_options(args) -> MetricOptions:
    gain = {"linear": "linear", "exp": "exponential"}[getattr(args, "gain", "linear")]
    return MetricOptions(
        gain=gain,
        binary_threshold=getattr(args, "binary_threshold", 2.0),
        judged_only=getattr(args, "judged_only", False),
    )


def csv_to_markdown(csv_text: str) -> str:
    rows = [line.split(",") for line in csv_text.strip().split("\n")]
    if not rows:
        return ""
    header, body = rows[0], rows[1:]
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    for row in body:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def write_report(out_dir: str, name: str, csv_text: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.csv").write_text(csv_text, encoding="utf-8")
    (out / f"{name}.md").write_text(csv_to_markdown(csv_text), encoding="utf-8")
    print(f"wrote {out / (name + '.csv')}")


def _sets_per_topic(args, primary: AnnotationSet, secondaries: list[AnnotationSet]):
    mode = args.mode.replace("-", "_")
    sets_per_topic = available_sets_per_topic(primary, secondaries, mode=mode)
    dropped = set(primary.topics()) - set(sets_per_topic)
    if dropped:
        print(
            f"note: {len(dropped)} topics have no candidate sets in mode "
            f"{args.mode} and were dropped",
            file=sys.stderr,
        )
    return sets_per_topic


def _specs_for(args, sets_per_topic, enumerate_limit: int | None = None) -> list[CombinationSpec]:
    topics = sorted(sets_per_topic)
    counts = {t: len(sets_per_topic[t]) for t in topics}
    if enumerate_limit is not None and count_combinations(counts) <= enumerate_limit:
        return list(enumerate_combinations(topics, counts))
    cfg = SampleConfig(s=args.s, seed=args.seed, mode=args.mode.replace("-", "_"))
    return sample_combinations(cfg, topics, counts)


# ---------------------------------------------------------------------------
# subcommands


def cmd_pool(args) -> int:
    primary = _load_qrels(args.qrels)
    cfg = PoolConfig(
        nonrel_sample_per_annotator=args.nonrel_sample,
        seed=args.seed,
        min_grade_included=args.min_grade,
    )
    pools = build_secondary_pool(primary, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        topic: {"core": pool.core, "samples": [pool.samples[0], pool.samples[1]]}
        for topic, pool in sorted(pools.items())
    }
    (out / "pools.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")
    lines = ["topic,core_size,sample_size,per_annotator_size"]
    for topic, pool in sorted(pools.items()):
        lines.append(
            f"{topic},{len(pool.core)},{len(pool.samples[0])},{pool.per_annotator_size()}"
        )
    write_report(args.out, "pool_summary", "\n".join(lines) + "\n")
    print(f"wrote {out / 'pools.json'}")
    return 0


def _load_pools(path: str):
    from .pooling import TopicPool

    payload = json.loads(_read(path))
    return {
        topic: TopicPool(
            topic=topic,
            core=list(entry["core"]),
            samples=(list(entry["samples"][0]), list(entry["samples"][1])),
        )
        for topic, entry in payload.items()
    }


def cmd_assign(args) -> int:
    pools = _load_pools(args.pools)
    annotators = [a.strip() for a in args.annotators.split(",") if a.strip()]
    assignment = assign_topics(
        pool_sizes(pools), annotators, seed=args.seed, pairing=args.pairing
    )
    write_report(args.out, "assignment", assignment_csv(pools, assignment))
    loads = ["annotator,load"] + [
        f"{a},{load}" for a, load in sorted(assignment.loads.items())
    ]
    write_report(args.out, "loads", "\n".join(loads) + "\n")
    tasks = task_lists(pools, assignment)
    tasks_dir = Path(args.out) / "tasks"
    tasks_dir.mkdir(parents=True, exist_ok=True)
    for annotator, items in sorted(tasks.items()):
        text = "topic,doc\n" + "\n".join(f"{t},{d}" for t, d in items) + "\n"
        (tasks_dir / f"{annotator}.csv").write_text(text, encoding="utf-8")
    print(f"wrote task lists for {len(tasks)} annotators under {tasks_dir}")
    return 0


def _load_assignment(path: str) -> Assignment:
    lines = _read(path).strip().split("\n")
    by_topic = {}
    pairs = []
    for line in lines[1:]:
        topic, a, b, *_ = line.split(",")
        by_topic[topic] = (a, b)
        if (a, b) not in pairs:
            pairs.append((a, b))
    return Assignment(pairs=pairs, by_topic=by_topic)


def build_store_from_files(args):
    """Assemble the annotation store from the serve command's input files."""
    from .service import AnnotationStore, ServiceConfig, load_corpus, load_roster

    pools = _load_pools(args.pools)
    assignment = _load_assignment(args.assignment)
    tasks = task_lists(pools, assignment)
    titles = {}
    for line in _read(args.topics).splitlines():
        if line.strip():
            topic, _, title = line.partition("\t")
            titles[topic.strip()] = title.strip() or topic.strip()
    tokens, admin_token = load_roster(args.roster)
    admin_token = os.environ.get(ADMIN_TOKEN_ENV, admin_token)
    return AnnotationStore(
        log_path=args.log,
        tasks=tasks,
        titles=titles,
        corpus=load_corpus(args.corpus),
        tokens=tokens,
        admin_token=admin_token,
        assignment_by_topic=assignment.by_topic,
        config=ServiceConfig(search_url_template=args.search_url),
        seed=args.seed,
    )


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    store = build_store_from_files(args)
    uvicorn.run(create_app(store), host=args.host, port=args.port)
    return 0


def cmd_agreement(args) -> int:
    primary = _load_qrels(args.primary)
    secondaries = _load_secondaries(args.secondary)
    label = args.label or "+".join(s.annotator for s in secondaries)
    reports = [
        agreement_mod.agreement_report(
            [primary, *secondaries], f"primary+{label}", args.agreement_threshold
        ),
        agreement_mod.agreement_report(secondaries, label, args.agreement_threshold),
    ]
    write_report(args.out, "agreement", agreement_mod.agreement_table_csv(reports))
    return 0


def cmd_ratios(args) -> int:
    rows = []
    for path in args.qrels:
        annotation_set = _load_qrels(path)
        rows.append((annotation_set.annotator, agreement_mod.grade_ratios(annotation_set)))
    write_report(args.out, "grade_ratios", agreement_mod.grade_ratio_csv(rows))
    return 0


def cmd_transitions(args) -> int:
    primary = _load_qrels(args.primary)
    secondaries = _load_secondaries(args.secondary)
    matrix = agreement_mod.transition_matrix(primary, secondaries)
    write_report(args.out, "transitions", agreement_mod.transition_csv(matrix))
    return 0


def cmd_aggregate(args) -> int:
    sets = _load_secondaries(args.secondary)
    if args.include_primary:
        sets = [_load_qrels(args.include_primary)] + sets
    op = {"min": AggregateOp.MINIMUM, "mean": AggregateOp.MEAN, "max": AggregateOp.MAXIMUM}[args.op]
    aggregate = aggregate_judgments(sets, op)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"aggregate_{args.op}.qrels"
    target.write_text(export_fractional_qrels(aggregate), encoding="utf-8")
    print(f"wrote {target}")
    return 0


def cmd_combos(args) -> int:
    primary = _load_qrels(args.primary)
    secondaries = _load_secondaries(args.secondary)
    sets_per_topic = _sets_per_topic(args, primary, secondaries)
    specs = _specs_for(args, sets_per_topic)
    write_report(args.out, "combinations", specs_to_csv(specs, sets_per_topic))
    return 0


def cmd_swap(args) -> int:
    runs, categories = _load_runs(args)
    primary = _load_qrels(args.primary)
    secondaries = _load_secondaries(args.secondary)
    opts = _metric_options(args)
    metric = MetricId.parse(args.metric)
    sets_per_topic = _sets_per_topic(args, primary, secondaries)
    specs = _specs_for(args, sets_per_topic)
    table = stability.per_topic_table(runs, sets_per_topic, metric, opts)
    means = [stability.means_for_spec(table, spec) for spec in specs]
    matrix = stability.swap_matrix_from_means([r.tag for r in runs], means)
    write_report(args.out, "swap_scatter", stability.swap_scatter_csv(matrix, categories))
    lines = ["system," + ",".join(matrix.systems)]
    for i, tag in enumerate(matrix.systems):
        lines.append(tag + "," + ",".join(str(c) for c in matrix.counts[i]))
    write_report(args.out, "swap_counts", "\n".join(lines) + "\n")
    return 0


def cmd_correlate(args) -> int:
    runs, _ = _load_runs(args)
    primary = _load_qrels(args.primary)
    secondaries = _load_secondaries(args.secondary)
    opts = _metric_options(args)
    metric = MetricId.parse(args.metric)
    official_means = {
        run.tag: compute_metric(run, primary, metric, opts).mean for run in runs
    }
    official = stability.SystemOrdering.from_means(official_means)
    modes = ["in-sample", "natural"] if args.mode == "both" else [args.mode]
    rows = []
    for mode in modes:
        mode_args = argparse.Namespace(**{**vars(args), "mode": mode})
        sets_per_topic = _sets_per_topic(mode_args, primary, secondaries)
        # in-sample combinations are sampled by definition; natural ones are
        # enumerated exhaustively while the count stays small
        limit = args.enumerate_limit if mode == "natural" else None
        specs = _specs_for(mode_args, sets_per_topic, enumerate_limit=limit)
        table = stability.per_topic_table(runs, sets_per_topic, metric, opts)
        taus, rhos, rbos = [], [], []
        for spec in specs:
            ordering = stability.SystemOrdering.from_means(
                stability.means_for_spec(table, spec)
            )
            result = stability.rank_correlations(ordering, official, rbo_p=args.rbo_p)
            taus.append(result.tau)
            rhos.append(result.rho)
            rbos.append(result.rbo)
        rows.append(
            (
                mode,
                stability.CorrelationResult(
                    tau=sum(taus) / len(taus),
                    rho=sum(rhos) / len(rhos),
                    rbo=sum(rbos) / len(rbos),
                ),
            )
        )
    write_report(args.out, "correlation", stability.correlation_summary_csv(rows))
    return 0


def cmd_rankdelta(args) -> int:
    runs, _ = _load_runs(args)
    primary = _load_qrels(args.primary)
    secondaries = _load_secondaries(args.secondary)
    opts = _metric_options(args)
    metric = MetricId.parse(args.metric)
    sets_per_topic = _sets_per_topic(args, primary, secondaries)
    specs = _specs_for(args, sets_per_topic, enumerate_limit=args.enumerate_limit)
    report = stability.rank_delta(runs, specs, sets_per_topic, primary, metric, opts)
    write_report(args.out, "rank_delta", stability.rank_delta_csv(report))
    return 0


def cmd_oracle(args) -> int:
    runs, _ = _load_runs(args)
    primary = _load_qrels(args.primary)
    secondaries = _load_secondaries(args.secondary)
    sets = list(secondaries)
    if args.include_primary_in_aggregates:
        sets = [primary] + sets
    aggregates = [
        ("Minimum", aggregate_judgments(sets, AggregateOp.MINIMUM)),
        ("Mean", aggregate_judgments(sets, AggregateOp.MEAN)),
        ("Maximum", aggregate_judgments(sets, AggregateOp.MAXIMUM)),
    ]
    metrics = [MetricId.parse(m) for m in args.metrics.split(",")]
    rows = oracle_comparison_table(
        runs, aggregates, primary, metrics, _metric_options(args), seed=args.seed
    )
    write_report(args.out, "oracle_table", oracle_table_csv(rows))
    if args.export_runs:
        out = Path(args.out)
        for label, aggregate in aggregates:
            run = build_oracle_run(aggregate, tag=f"oracle-{label}", seed=args.seed)
            (out / f"oracle_{label.lower()}.run").write_text(
                export_run(run), encoding="utf-8"
            )
    return 0


def cmd_evaluate(args) -> int:
    runs, _ = _load_runs(args)
    judgments = _load_qrels(args.qrels)
    metrics = [MetricId.parse(m) for m in args.metrics.split(",")]
    reports = evaluate_systems(runs, judgments, metrics, _metric_options(args))
    write_report(args.out, "metrics", reports_to_csv(reports))
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_metric_flags(parser, single_metric=True):
    if single_metric:
        parser.add_argument("--metric", default="ndcg@10", help="ndcg@10|p@10|mrr@10|r@100")
    else:
        parser.add_argument(
            "--metrics",
            default="ndcg@10,p@10,mrr@10,r@100",
            help="comma-separated metric ids",
        )
    parser.add_argument("--gain", choices=["linear", "exp"], default="linear")
    parser.add_argument("--binary-threshold", type=float, default=2.0, dest="binary_threshold")
    parser.add_argument("--judged-only", action="store_true", dest="judged_only")


def _add_combination_flags(parser):
    parser.add_argument("--mode", choices=["in-sample", "natural"], default="in-sample")
    parser.add_argument("--s", type=int, default=10000, help="number of sampled combinations")
    parser.add_argument("--seed", type=int, default=0)


def _add_run_inputs(parser):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--manifest", help="CSV manifest: path,tag,category per line")
    group.add_argument("--runs", nargs="+", help="TREC run files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shelflife",
        description="Re-annotation workbench for IR test collections",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", help="build the secondary annotation pool")
    p.add_argument("--qrels", required=True, help="primary qrels file")
    p.add_argument("--nonrel-sample", type=int, default=100, dest="nonrel_sample")
    p.add_argument("--min-grade", type=int, default=1, dest="min_grade")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("assign", help="assign topics to annotator pairs")
    p.add_argument("--pools", required=True, help="pools.json from the pool step")
    p.add_argument("--annotators", required=True, help="comma-separated annotator ids")
    p.add_argument("--pairing", choices=["fixed", "rotating"], default="fixed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--pools", required=True)
    p.add_argument("--assignment", required=True, help="assignment.csv from assign")
    p.add_argument("--corpus", required=True, help="JSONL {doc, text} records")
    p.add_argument("--topics", required=True, help="TSV topic<TAB>title")
    p.add_argument("--roster", required=True, help="JSON roster with tokens")
    p.add_argument("--log", required=True, help="annotation event log path")
    p.add_argument("--search-url", default=None, dest="search_url",
                   help="external search template with {query} placeholder")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("agreement", help="inter-annotator agreement table")
    p.add_argument("--primary", required=True)
    p.add_argument("--secondary", nargs="+", required=True)
    p.add_argument("--label", default=None)
    p.add_argument("--agreement-threshold", type=float, default=1.0,
                   dest="agreement_threshold",
                   help="binarization threshold for the 2-grade columns")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("ratios", help="grade-ratio table")
    p.add_argument("--qrels", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ratios)

    p = sub.add_parser("transitions", help="primary-to-secondary grade transitions")
    p.add_argument("--primary", required=True)
    p.add_argument("--secondary", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transitions)

    p = sub.add_parser("aggregate", help="min/mean/max judgment aggregation")
    p.add_argument("--secondary", nargs="+", required=True)
    p.add_argument("--include-primary", default=None, dest="include_primary")
    p.add_argument("--op", choices=["min", "mean", "max"], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("combos", help="sample combination specs for audit")
    p.add_argument("--primary", required=True)
    p.add_argument("--secondary", nargs="+", required=True)
    _add_combination_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_combos)

    p = sub.add_parser("swap", help="swap-probability analysis")
    _add_run_inputs(p)
    p.add_argument("--primary", required=True)
    p.add_argument("--secondary", nargs="+", required=True)
    _add_metric_flags(p)
    _add_combination_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_swap)

    p = sub.add_parser("correlate", help="system-order correlation summary")
    _add_run_inputs(p)
    p.add_argument("--primary", required=True)
    p.add_argument("--secondary", nargs="+", required=True)
    _add_metric_flags(p)
    p.add_argument("--mode", choices=["in-sample", "natural", "both"], default="both")
    p.add_argument("--s", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rbo-p", type=float, default=0.9, dest="rbo_p")
    p.add_argument("--enumerate-limit", type=int, default=10000, dest="enumerate_limit",
                   help="enumerate natural combinations exhaustively up to this count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("rankdelta", help="aggregated system rank changes")
    _add_run_inputs(p)
    p.add_argument("--primary", required=True)
    p.add_argument("--secondary", nargs="+", required=True)
    _add_metric_flags(p)
    p.add_argument("--mode", choices=["in-sample", "natural"], default="natural")
    p.add_argument("--s", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--enumerate-limit", type=int, default=10000, dest="enumerate_limit")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rankdelta)

    p = sub.add_parser("oracle", help="systems vs aggregate-annotator oracles")
    _add_run_inputs(p)
    p.add_argument("--primary", required=True)
    p.add_argument("--secondary", nargs="+", required=True)
    _add_metric_flags(p, single_metric=False)
    p.add_argument("--include-primary-in-aggregates", action="store_true",
                   dest="include_primary_in_aggregates")
    p.add_argument("--export-runs", action="store_true", dest="export_runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("evaluate", help="plain effectiveness evaluation")
    _add_run_inputs(p)
    p.add_argument("--qrels", required=True)
    _add_metric_flags(p, single_metric=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ShelflifeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
