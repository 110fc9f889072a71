"""Command-line entry point: ``viewkeeper <command> ...``.

Exit status: 0 success, 1 oracle mismatch, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import corpus
from .avderive import derive_av_set, tuple_count_report
from .datagen import GenParams, gen_dataset, random_batch, random_university_batch
from .errors import ViewkeeperError
from .gluing import fold_av_sets, separate_plan
from .maintenance import ViewDelta, apply_batch, init_state, oracle_mismatches
from .relstore import dump_csv, insert_batch, load_csv
from .reports import decisions_tsv, merged_counts_tsv
from .sqlparse import parse_schema, parse_view
from .storage import format_batches, format_delta, load_state, parse_batches, save_state

log = logging.getLogger("viewkeeper")

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 1, 2
DEFAULT_VIEWS = ("results_IT.sql", "results_BBA.sql")


def _seed(args_seed: int) -> int:
    env = os.environ.get("VIEWKEEPER_SEED")
    if env is None:
        return args_seed
    try:
        return int(env)
    except ValueError:
        raise ViewkeeperError(f"VIEWKEEPER_SEED must be an integer, got {env!r}") from None


def _read(path: str | None, default: str) -> tuple[str, str]:
    if path is None:
        return corpus.read(default), default
    try:
        return Path(path).read_text(encoding="utf-8"), path
    except OSError as exc:
        raise ViewkeeperError(f"cannot read {path}: {exc.strerror}") from None


def _load_defs(schema_path: str | None, view_paths: Sequence[str] | None):
    schema_text, schema_src = _read(schema_path, "university.sql")
    catalog = parse_schema(schema_text, schema_src)
    texts, views = [], []
    for p in view_paths or [None] * len(DEFAULT_VIEWS):
        default = DEFAULT_VIEWS[len(texts)] if p is None else ""
        text, src = _read(p, default)
        texts.append(text)
        views.append(parse_view(text, catalog, src))
    return catalog, schema_text, views, texts


def _write(path: str | os.PathLike, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    seed = _seed(args.seed)
    params = GenParams(
        sessions_it=args.sessions_it, sessions_bba=args.sessions_bba, seed=seed, scale=args.scale
    )
    db = gen_dataset(params)
    dump_csv(db, args.out)
    log.info("wrote %s rows to %s", sum(db.counts().values()), args.out)
    if args.batches:
        rng = random.Random(seed)
        work = db.copy()
        batches = []
        for _ in range(args.batches):
            b = random_university_batch(work, rng)
            insert_batch(work, b)
            batches.append(b)
        _write(args.batch_out or Path(args.out) / "batches.txt", format_batches(batches, db.catalog))
    return EXIT_OK


def cmd_derive(args) -> int:
    catalog, _, views, _ = _load_defs(args.schema, [args.view])
    view = views[0]
    avset = derive_av_set(catalog, view, ri_pruning=not args.no_ri_pruning)
    for av in avset:
        print(av.sql())
    if avset.pruned:
        print(f"-- no auxiliary view needed for: {', '.join(avset.pruned)}")
    if args.data:
        db = load_csv(catalog, args.data)
        report = tuple_count_report(db, view, avset)
        if args.report:
            _write(args.report, report.to_tsv())
        else:
            sys.stdout.write(report.to_tsv())
    return EXIT_OK


def _plan(db, catalog, views, *, ri_pruning: bool, gluing: bool, policy: str):
    avsets = [derive_av_set(catalog, v, ri_pruning=ri_pruning) for v in views]
    if gluing and len(avsets) > 1:
        if len(avsets) > 2:
            log.info("folding %d views pairwise in input order (extension)", len(avsets))
        return fold_av_sets(db, avsets, policy=policy)
    return separate_plan(catalog, avsets)


def cmd_glue(args) -> int:
    catalog, schema_text, views, texts = _load_defs(args.schema, args.view)
    db = load_csv(catalog, args.data)
    plan = _plan(db, catalog, views, ri_pruning=not args.no_ri_pruning, gluing=True, policy=args.policy)
    _write(args.plan_out, json.dumps(plan.to_json(), indent=1, sort_keys=True) + "\n")
    decisions = decisions_tsv(plan.decisions)
    if args.decisions:
        _write(args.decisions, decisions)
    else:
        sys.stdout.write(decisions)
    for unit in plan.stored():
        log.info("%s", unit.sql())
    if args.state:
        state = init_state(db, views, plan)
        save_state(state, args.state, schema_text, texts)
    return EXIT_OK


def cmd_apply(args) -> int:
    state, schema_text, view_texts = load_state(args.state)
    text, src = _read(args.batch, "")
    batches = parse_batches(text, state.catalog, src)
    db = load_csv(state.catalog, args.data) if args.data else None
    total = ViewDelta()
    status = EXIT_OK
    for i, batch in enumerate(batches, start=1):
        try:
            if db is not None:
                staged = db.copy()
                insert_batch(staged, batch)
            total.merge(apply_batch(state, batch))
        except ViewkeeperError as exc:
            print(f"error: {src}: batch {i}: {exc}", file=sys.stderr)
            status = EXIT_INPUT
            break
        if db is not None:
            db = staged
    save_state(state, args.state, schema_text, view_texts)
    if db is not None:
        dump_csv(db, args.data)
    out = format_delta(total)
    if args.delta_out:
        _write(args.delta_out, out)
    else:
        sys.stdout.write(out)
    return status


def cmd_check(args) -> int:
    state, _, _ = load_state(args.state)
    db = load_csv(state.catalog, args.data)
    problems = oracle_mismatches(state, db)
    for p in problems:
        print(f"MISMATCH {p}")
    if not problems:
        print("ok: every view and auxiliary view matches a full recompute")
    return EXIT_MISMATCH if problems else EXIT_OK


def cmd_report(args) -> int:
    state, _, _ = load_state(args.state)
    db = load_csv(state.catalog, args.data)
    out = Path(args.out)
    ri = all(s.ri_pruning for s in state.plan.avsets)
    for view in state.views.values():
        report = tuple_count_report(db, view, state.plan.avset(view.name))
        _write(out / f"counts_{view.name}.tsv", report.to_tsv())
    _write(out / "decisions.tsv", decisions_tsv(state.plan.decisions))
    _write(out / "merged.tsv", merged_counts_tsv(state.plan, ri_pruning=ri))
    print(f"reports written to {out}")
    return EXIT_OK


@dataclass
class ScenarioConfig:
    schema: str | None = None
    views: list[str] = field(default_factory=list)
    data: str | None = None
    batch: str | None = None
    report_dir: str = "reports"
    ri_pruning: bool = True
    gluing: bool = True
    policy: str = "cost"
    random_batches: int = 100
    seed: int = 0


def run_scenario(config: ScenarioConfig) -> int:
    """Load, derive, glue, maintain through every batch, check, and report.

    Returns 1 if any view or auxiliary view ever disagrees with a full
    recompute over the sources, else 0.
    """
    catalog, _, views, _ = _load_defs(config.schema, config.views or None)
    if config.data:
        db = load_csv(catalog, config.data)
    else:
        db = gen_dataset(GenParams(seed=config.seed))
        if db.catalog != catalog:
            raise ViewkeeperError("generated data needs the built-in schema; pass --data")
    out = Path(config.report_dir)
    out.mkdir(parents=True, exist_ok=True)

    for view in views:
        avset = derive_av_set(catalog, view, ri_pruning=config.ri_pruning)
        _write(out / f"counts_{view.name}.tsv", tuple_count_report(db, view, avset).to_tsv())
    plan = _plan(
        db, catalog, views, ri_pruning=config.ri_pruning, gluing=config.gluing, policy=config.policy
    )
    _write(out / "decisions.tsv", decisions_tsv(plan.decisions))
    if plan.decisions:
        _write(out / "merged.tsv", merged_counts_tsv(plan, config.ri_pruning))
    _write(out / "plan.sql", "\n\n".join(u.sql() for u in plan.stored()) + "\n")

    state = init_state(db, views, plan)
    if config.batch:
        text, src = _read(config.batch, "")
        batches = parse_batches(text, catalog, src)
    else:
        batches = None
    rng = random.Random(config.seed)
    n = len(batches) if batches is not None else config.random_batches
    university = db.catalog == parse_schema(corpus.read("university.sql"))
    failures = []
    deltas = []
    for i in range(n):
        if batches is not None:
            batch = batches[i]
        elif university:
            batch = random_university_batch(db, rng)
        else:
            batch = random_batch(db, rng)
        insert_batch(db, batch)
        delta = apply_batch(state, batch)
        deltas.append(format_delta(delta))
        for p in oracle_mismatches(state, db):
            failures.append(f"batch {i + 1}: {p}")
    _write(out / "deltas.txt", "\n".join(deltas))
    lines = [f"batches\t{n}", f"mismatches\t{len(failures)}", *failures]
    for (view, kind), count in sorted(state.stats.items()):
        lines.append(f"{view}\t{kind}\t{count}")
    _write(out / "oracle.tsv", "\n".join(lines) + "\n")
    for f in failures:
        log.error("%s", f)
    return EXIT_MISMATCH if failures else EXIT_OK


def cmd_run(args) -> int:
    config = ScenarioConfig(
        schema=args.schema,
        views=args.view or [],
        data=args.data,
        batch=args.batch,
        report_dir=args.report_dir,
        ri_pruning=not args.no_ri_pruning,
        gluing=not args.no_gluing,
        policy=args.policy,
        random_batches=args.random_batches,
        seed=_seed(args.seed),
    )
    status = run_scenario(config)
    print(f"{'ok' if status == EXIT_OK else 'ORACLE MISMATCH'}: reports in {config.report_dir}")
    return status


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="viewkeeper", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write the generated university dataset as CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0, help="overridden by $VIEWKEEPER_SEED")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--sessions-it", type=int, default=50)
    p.add_argument("--sessions-bba", type=int, default=100)
    p.add_argument("--batches", type=int, default=0, help="also write N random insertion batches")
    p.add_argument("--batch-out")
    p.set_defaults(func=cmd_gen)

    def defs(p, multi: bool):
        p.add_argument("--schema", help="DDL file (default: built-in university schema)")
        if multi:
            p.add_argument("--view", action="append", help="view file; repeat (default: built-in pair)")
        else:
            p.add_argument("--view", required=True)
        p.add_argument("--no-ri-pruning", action="store_true", help="ignore key/RI constraints")

    p = sub.add_parser("derive", help="print auxiliary views for one view and count them")
    defs(p, multi=False)
    p.add_argument("--data")
    p.add_argument("--report")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("glue", help="merge auxiliary views of several views")
    defs(p, multi=True)
    p.add_argument("--data", required=True)
    p.add_argument("--plan-out", required=True)
    p.add_argument("--decisions")
    p.add_argument("--policy", choices=("cost", "always", "never"), default="cost")
    p.add_argument("--state", help="also materialize the warehouse into this directory")
    p.set_defaults(func=cmd_glue)

    p = sub.add_parser("apply", help="apply insertion batches to a warehouse state")
    p.add_argument("--state", required=True)
    p.add_argument("--batch", required=True)
    p.add_argument("--data", help="source CSV directory to keep in step (RI enforced)")
    p.add_argument("--delta-out")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("check", help="compare warehouse state with a recompute over sources")
    p.add_argument("--state", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("report", help="write count, decision and merged-count reports")
    p.add_argument("--state", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="end-to-end scenario with oracle checks")
    defs(p, multi=True)
    p.add_argument("--data", help="source CSVs (default: generate the university dataset)")
    p.add_argument("--batch", help="batch file (default: random batches)")
    p.add_argument("--random-batches", type=int, default=100)
    p.add_argument("--report-dir", default="reports")
    p.add_argument("--no-gluing", action="store_true")
    p.add_argument("--policy", choices=("cost", "always", "never"), default="cost")
    p.add_argument("--seed", type=int, default=0, help="overridden by $VIEWKEEPER_SEED")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    try:
        return args.func(args)
    except ViewkeeperError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
