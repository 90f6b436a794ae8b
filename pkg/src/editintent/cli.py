"""Command-line pipeline: ingest -> label -> negatives -> corpus -> sample ->
serve -> evaluate -> train-baseline -> predict.

``label`` and ``corpus`` read and write streams ('-' is stdin/stdout) so the
stages compose in shell pipelines; ``--jobs`` parallelizes per page and the
output is ordered by page_id regardless of worker count, so runs are
byte-identical across job counts.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence

from . import baseline as baseline_mod
from . import corpus as corpus_mod
from . import evaluation as eval_mod
from . import service as service_mod
from .diffing import diff_to_payload
from .revisions import (
    DumpParseError,
    JsonlParseError,
    ParseStats,
    Revision,
    parse_dump,
    parse_jsonl,
)
from .rules import Category
from .store import RevisionStore, StoreError
from .wikitext import DEFAULT, STRICT


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = 1):
        super().__init__(message)
        self.exit_code = exit_code


def _open_in(path: str) -> IO[str]:
    if path == "-":
        return sys.stdin
    p = Path(path)
    if not p.exists():
        raise CliError(f"input file not found: {path}")
    return p.open(encoding="utf-8")


def _open_out(path: str) -> IO[str]:
    if path == "-":
        return sys.stdout
    return Path(path).open("w", encoding="utf-8")


def _read_revisions(path: str) -> list[Revision]:
    """JSONL or export XML, decided by content sniffing."""
    if path != "-" and not Path(path).exists():
        raise CliError(f"input file not found: {path}")
    if path == "-":
        return list(parse_jsonl(sys.stdin))
    with open(path, "rb") as probe:
        head = probe.read(64).lstrip()
    if head.startswith(b"<"):
        with open(path, "rb") as fp:
            return list(parse_dump(fp))
    with open(path, encoding="utf-8") as fp:
        return list(parse_jsonl(fp))


def _group_by_page(revisions: Iterable[Revision]) -> dict[int, list[Revision]]:
    pages: dict[int, list[Revision]] = {}
    for rev in revisions:
        pages.setdefault(rev.page_id, []).append(rev)
    return pages


def _category_arg(value: str) -> Category:
    aliases = {"pov": Category.POINT_OF_VIEW}
    try:
        return aliases.get(value, Category(value))
    except ValueError:
        raise CliError(
            f"unknown category {value!r} (choose citation, point_of_view or clarification)", 2
        ) from None


# --- per-page labeling workers -------------------------------------------------


def _label_page(
    revisions: list[Revision],
    mode: str,
    keep_reverts: bool,
    output: str,
    explain: bool,
    category: Optional[Category],
) -> list[str]:
    lines: list[str] = []
    if output == "positives":
        for record in corpus_mod.extract_positive_sentences(
            revisions, mode=mode, filter_reverts=not keep_reverts
        ):
            if category is not None and record.category is not category:
                continue
            lines.append(json.dumps(corpus_mod.record_to_json(record, "unsplit"), sort_keys=True, ensure_ascii=False))
        return lines
    for diff, verdict in corpus_mod.iter_page_verdicts(
        revisions, mode=mode, filter_reverts=not keep_reverts
    ):
        if category is not None and category not in verdict.labels:
            continue
        obj = {
            "diff_id": verdict.diff_ref,
            "page_id": revisions[0].page_id,
            "old_rev_id": diff.old_rev_id,
            "new_rev_id": diff.new_rev_id,
            "rule_labels": sorted(c.value for c in verdict.labels),
            "diff": diff_to_payload(diff),
        }
        if explain:
            obj["trace"] = [[name, ok] for name, ok in verdict.trace]
            obj["positives"] = [
                {"category": cat.value, "original": s.original, "revised": s.revised}
                for s, cat in verdict.positive_sentences
            ]
        lines.append(json.dumps(obj, sort_keys=True, ensure_ascii=False))
    return lines


def _label_page_from_store(args: tuple) -> tuple[int, list[str]]:
    store_root, page_id, mode, keep_reverts, output, explain, category = args
    store = RevisionStore(store_root, create=False)
    revisions = store.scan(page_id)
    return page_id, _label_page(revisions, mode, keep_reverts, output, explain, category)


def _label_page_inline(args: tuple) -> tuple[int, list[str]]:
    page_id, revisions, mode, keep_reverts, output, explain, category = args
    return page_id, _label_page(revisions, mode, keep_reverts, output, explain, category)


# --- subcommands ------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    stats = ParseStats()
    store = RevisionStore(args.store)
    if args.dump:
        if not Path(args.dump).exists():
            raise CliError(f"input file not found: {args.dump}")
        with open(args.dump, "rb") as fp:
            added = store.put_many(parse_dump(fp, stats))
    else:
        with _open_in(args.input) as fp:
            added = store.put_many(parse_jsonl(fp, stats))
    if args.assessments:
        if not Path(args.assessments).exists():
            raise CliError(f"input file not found: {args.assessments}")
        store.load_assessments(args.assessments)
    store.close()
    print(
        f"ingested {added} revisions across {stats.pages} pages"
        f" (skipped: {stats.skipped_missing_text} missing text,"
        f" {stats.skipped_incomplete} incomplete)",
        file=sys.stderr,
    )
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    mode = STRICT if args.strict else DEFAULT
    category = _category_arg(args.category) if args.category else None
    output = "verdicts" if args.verdicts or args.explain else "positives"
    results: dict[int, list[str]] = {}
    if args.store:
        store = RevisionStore(args.store, create=False)
        page_ids = store.page_ids()
        if args.jobs > 1:
            work = [
                (args.store, pid, mode, args.keep_reverts, output, args.explain, category)
                for pid in page_ids
            ]
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                for pid, lines in pool.map(_label_page_from_store, work, chunksize=8):
                    results[pid] = lines
        else:
            for pid in page_ids:
                results[pid] = _label_page(
                    store.scan(pid), mode, args.keep_reverts, output, args.explain, category
                )
    else:
        pages = _group_by_page(_read_revisions(args.input))
        if args.jobs > 1:
            work = [
                (pid, revs, mode, args.keep_reverts, output, args.explain, category)
                for pid, revs in sorted(pages.items())
            ]
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                for pid, lines in pool.map(_label_page_inline, work, chunksize=8):
                    results[pid] = lines
        else:
            for pid, revs in sorted(pages.items()):
                results[pid] = _label_page(revs, mode, args.keep_reverts, output, args.explain, category)
    out = _open_out(args.out)
    try:
        for pid in sorted(results):
            for line in results[pid]:
                out.write(line + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_negatives(args: argparse.Namespace) -> int:
    category = _category_arg(args.category)
    out = _open_out(args.out)
    count = 0
    try:
        if args.store:
            store = RevisionStore(args.store, create=False)
            revisions = []
            for pid in store.page_ids():
                revs = store.scan(pid)
                if revs and revs[-1].quality_class == "FA":
                    revisions.append(revs[-1])
        else:
            revisions = [
                r for r in _read_revisions(args.input) if r.quality_class == "FA"
            ]
            latest: dict[int, Revision] = {}
            for rev in revisions:
                cur = latest.get(rev.page_id)
                if cur is None or rev.sort_key > cur.sort_key:
                    latest[rev.page_id] = rev
            revisions = [latest[pid] for pid in sorted(latest)]
        for rev in revisions:
            for record in corpus_mod.extract_negative_sentences(rev, category):
                out.write(
                    json.dumps(corpus_mod.record_to_json(record, "unsplit"), sort_keys=True, ensure_ascii=False)
                    + "\n"
                )
                count += 1
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"extracted {count} negative sentences", file=sys.stderr)
    return 0


def _read_labeled(path: str, category: Optional[Category]) -> list[corpus_mod.LabeledSentence]:
    records = []
    with _open_in(path) as fp:
        for line_no, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "magic" in obj:
                continue
            record = corpus_mod.record_from_json(obj)
            if category is None or record.category is category:
                records.append(record)
    return records


def cmd_corpus(args: argparse.Namespace) -> int:
    category = _category_arg(args.category) if args.category else None
    positives = _read_labeled(args.positives, category)
    negatives = _read_labeled(args.negatives, category)
    stats = corpus_mod.ExtractionStats()
    try:
        split = corpus_mod.build_splits(positives, negatives, seed=args.seed, stats=stats)
    except corpus_mod.CorpusError as exc:
        raise CliError(str(exc)) from exc
    corpus_mod.export_corpus(split, args.out)
    print(
        f"corpus: train={len(split.train)} validation={len(split.validation)}"
        f" test={len(split.test)} (dropped {stats.dropped_conflicts} polarity conflicts)",
        file=sys.stderr,
    )
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    pool: dict[str, dict] = {}
    with _open_in(args.pool) as fp:
        for line in fp:
            if not line.strip():
                continue
            obj = json.loads(line)
            pool[obj["diff_id"]] = obj
    labels = {d: frozenset(Category(c) for c in obj.get("rule_labels", [])) for d, obj in pool.items()}
    quotas = {
        Category.POINT_OF_VIEW: args.pov_quota,
        Category.CLARIFICATION: args.clarification_quota,
    }
    try:
        result = eval_mod.stratified_sample(
            labels, quotas, remainder=args.remainder, seed=args.seed, backfill=args.backfill
        )
    except eval_mod.StratificationError as exc:
        raise CliError(str(exc)) from exc
    entries = []
    for diff_id in result.diff_ids:
        obj = pool[diff_id]
        entries.append(
            {
                "diff_id": diff_id,
                "rule_labels": obj.get("rule_labels", []),
                "diff": obj["diff"],
            }
        )
    service_mod.write_sample_file(args.out, entries, seed=args.seed)
    composition = {name: len(ids) for name, ids in result.strata.items()}
    print(f"sampled {len(result.diff_ids)} diffs: {composition}", file=sys.stderr)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import os

    config_path = args.config or os.environ.get("EDITINTENT_CONFIG")
    if not config_path:
        raise CliError("serve needs --config or EDITINTENT_CONFIG")
    if not Path(config_path).exists():
        raise CliError(f"input file not found: {config_path}")
    config = service_mod.load_config(config_path)
    entries = service_mod.load_sample_file(config.sample_path)
    practice = (
        service_mod.load_practice_entry(config.practice_path)
        if config.practice_path
        else service_mod.default_practice_entry()
    )
    svc = service_mod.AnnotationService(
        entries, practice, config.log_path, cap=config.cap, seed=config.seed
    )
    app = service_mod.create_app(svc, static_dir=config.static_dir or None)
    import uvicorn

    uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="warning")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    if not Path(args.sample).exists():
        raise CliError(f"input file not found: {args.sample}")
    if not Path(args.log).exists():
        raise CliError(f"input file not found: {args.log}")
    entries = service_mod.load_sample_file(args.sample)
    verdicts = {e.diff_id: set(e.rule_labels) for e in entries}
    records = []
    with open(args.log, encoding="utf-8") as fp:
        for line in fp:
            if line.strip():
                records.append(eval_mod.record_from_json(json.loads(line)))
    report = eval_mod.metrics_report(records, verdicts, pool_size=len(entries))
    if args.table:
        print(eval_mod.format_metrics_table(report))
    else:
        print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def cmd_train_baseline(args: argparse.Namespace) -> int:
    if not Path(args.corpus).exists():
        raise CliError(f"input file not found: {args.corpus}")
    split = corpus_mod.import_corpus(args.corpus)
    category = _category_arg(args.category) if args.category else None
    if category is not None:
        split = corpus_mod.CorpusSplit(
            train=[r for r in split.train if r.category is category],
            validation=[r for r in split.validation if r.category is category],
            test=[r for r in split.test if r.category is category],
            seed=split.seed,
        )
    try:
        model = baseline_mod.train(
            split,
            epochs=args.epochs,
            learning_rate=args.learning_rate,
            seed=args.seed,
            category=category.value if category else None,
        )
    except baseline_mod.BaselineError as exc:
        raise CliError(str(exc)) from exc
    baseline_mod.save_model(model, args.out)
    report = {
        "train_loss": model.metadata["train_loss"],
        "validation_loss": model.metadata["validation_loss"],
    }
    if split.test:
        report["test"] = baseline_mod.evaluate_model(model, split.test, threshold=args.threshold)
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    if not Path(args.model).exists():
        raise CliError(f"input file not found: {args.model}")
    model = baseline_mod.load_model(args.model)
    with _open_in(args.input) as fp:
        for line in fp:
            sentence = line.rstrip("\n")
            if not sentence.strip():
                continue
            print(f"{baseline_mod.predict(model, sentence):.6f}\t{sentence}")
    return 0


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="editintent",
        description="Label the semantic intent of wiki edit diffs and build sentence-quality corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load revisions into a page-indexed store")
    p.add_argument("--in", dest="input", default="-", help="JSONL revisions file ('-' for stdin)")
    p.add_argument("--dump", help="MediaWiki export XML dump")
    p.add_argument("--store", required=True, help="store directory")
    p.add_argument("--assessments", help="page-assessment sidecar JSONL")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="run the intent rules over revision histories")
    p.add_argument("--in", dest="input", default="-", help="revisions (JSONL or XML, '-' for stdin)")
    p.add_argument("--store", help="read revisions from a store instead")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--category", help="only emit this category")
    p.add_argument("--verdicts", action="store_true", help="emit per-diff verdicts instead of positives")
    p.add_argument("--explain", action="store_true", help="verdicts with full rule traces")
    p.add_argument("--strict", action="store_true", help="use the strict audit regex mode")
    p.add_argument("--keep-reverts", action="store_true", help="do not filter reverted edits")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (per page)")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("negatives", help="extract negatives from Featured Articles")
    p.add_argument("--in", dest="input", default="-", help="revisions (JSONL or XML, '-' for stdin)")
    p.add_argument("--store", help="read latest FA revisions from a store")
    p.add_argument("--out", default="-")
    p.add_argument("--category", required=True)
    p.set_defaults(func=cmd_negatives)

    p = sub.add_parser("corpus", help="build balanced page-disjoint splits")
    p.add_argument("--positives", required=True, help="positives JSONL ('-' for stdin)")
    p.add_argument("--negatives", required=True, help="negatives JSONL")
    p.add_argument("--category", help="restrict to one category")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="corpus JSONL path")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("sample", help="stratified annotation sample from a verdict pool")
    p.add_argument("--pool", required=True, help="verdicts JSONL from 'label --verdicts'")
    p.add_argument("--out", required=True, help="sample JSON path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pov-quota", type=int, default=100)
    p.add_argument("--clarification-quota", type=int, default=100)
    p.add_argument("--remainder", type=int, default=800)
    p.add_argument("--backfill", action="store_true", help="fill stratum shortfalls from the remainder")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--config", help="key=value config file (or EDITINTENT_CONFIG)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("evaluate", help="agreement and rule precision/recall from a label log")
    p.add_argument("--log", required=True, help="annotation log JSONL")
    p.add_argument("--sample", required=True, help="sample JSON served to annotators")
    p.add_argument("--table", action="store_true", help="human-readable table instead of JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train-baseline", help="train the hashed n-gram logistic baseline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--category")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file path")
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("predict", help="score sentences with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", default="-", help="one sentence per line ('-' for stdin)")
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"editintent: {exc}", file=sys.stderr)
        return exc.exit_code
    except (DumpParseError, JsonlParseError, StoreError) as exc:
        print(f"editintent: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"editintent: input file not found: {exc.filename}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
