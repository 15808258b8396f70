"""Command-line front end."""
from __future__ import annotations

import argparse
import sys

from ..errors import WorkbenchError
from . import taskfile as tf


def _document(args) -> tf.TaskDocument:
    if getattr(args, "example", None):
        return tf.load_example(args.example)
    if not getattr(args, "file", None):
        raise tf.TaskValidationError("<arguments>", "give a task FILE or --example NAME")
    return tf.load(args.file)


def _only(doc: tf.TaskDocument, kind: str, overrides: dict) -> tf.TaskDocument:
    """The document's tasks of one kind (or a default one), with CLI overrides applied."""
    tasks = [dict(t) for t in doc.tasks if t["kind"] == kind] or [{"kind": kind}]
    for t in tasks:
        t.update({k: v for k, v in overrides.items() if v is not None})
    doc.tasks = tasks
    return tf.validate(doc)


def _emit(report, args) -> int:
    print(tf.dumps_report(report, timing=not args.no_timing))
    return tf.exit_status(report)


def _parse_samples(text: str):
    return [[x for x in part.replace(",", " ").split()] for part in text.split(";") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cce-workbench", description="Exact checks for conformally compact Einstein metrics.")
    p.add_argument("--no-timing", action="store_true", help="omit wall-time fields from the report")
    p.add_argument("--decimal", action="store_true", help="add decimal renderings of constant residuals")
    p.add_argument("--jobs", type=int, default=1, help="run tasks in parallel processes")
    sub = p.add_subparsers(dest="command", required=True)

    def with_input(sp):
        sp.add_argument("file", nargs="?", help="task file (YAML)")
        sp.add_argument("--example", help="use a built-in example instead of a file")
        return sp

    with_input(sub.add_parser("check-einstein", help="Ric + (n-1) g and S + n(n-1)"))
    sp = with_input(sub.add_parser("fg-expand", help="expansion coefficients of the geodesic series"))
    sp.add_argument("--order", type=int, required=True)
    sp = with_input(sub.add_parser("obstruction", help="Bach tensor or the leading obstruction"))
    sp.add_argument("--leading", action="store_true")
    sp = with_input(sub.add_parser("bvp-verify", help="boundary value problem identities"))
    sp.add_argument("--scalar-constant", help="declared scalar curvature constant c")
    sp = with_input(sub.add_parser("adn-check", help="ellipticity and complementing condition"))
    sp.add_argument("--samples", help="tangential covectors, e.g. '3,4,0;1,2,2'")
    sp.add_argument("--symbolic-xi", action="store_true")
    sp.add_argument("--n", type=int, help="dimension of the built-in system when no file is given")
    sp = sub.add_parser("run", help="run every task of a task file")
    sp.add_argument("file")
    sp = sub.add_parser("examples", help="list built-in examples, or print / run one")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--run", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run = dict(jobs=args.jobs, decimals=args.decimal)
    try:
        if args.command == "examples":
            if args.name is None:
                for name in tf.list_examples():
                    print(name)
                return 0
            doc = tf.load_example(args.name)
            if not args.run:
                print(doc.dumps(), end="")
                return 0
            return _emit(tf.run_document(doc, **run), args)
        if args.command == "run":
            return _emit(tf.run_task_file(args.file, **run), args)
        if args.command == "adn-check" and not args.file and not args.example:
            n = args.n or 4
            doc = tf.TaskDocument(n=n, coords=[f"x{k}" for k in range(n)], tasks=[{"kind": "adn-check"}],
                                  name=f"gauge_system_n{n}")
        else:
            doc = _document(args)
        if args.command == "check-einstein":
            doc = _only(doc, "check-einstein", {})
        elif args.command == "fg-expand":
            doc = _only(doc, "fg-expand", {"order": args.order})
        elif args.command == "obstruction":
            doc = _only(doc, "obstruction", {"leading": args.leading or None})
        elif args.command == "bvp-verify":
            doc = _only(doc, "bvp-verify", {"scalar_constant": args.scalar_constant})
        elif args.command == "adn-check":
            over = {"symbolic_xi": args.symbolic_xi or None}
            if args.samples:
                over["samples"] = _parse_samples(args.samples)
            doc = _only(doc, "adn-check", over)
        return _emit(tf.run_document(doc, **run), args)
    except (tf.TaskValidationError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
