"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 input-validation failure,
3 verification failure.  Every run emits a manifest (next to --out, or on
stderr when writing to stdout) recording the full configuration and the
digests of everything written, so a run can be replayed bit-exactly.
All randomness flows from --seed; --threads (default RTCN_THREADS) only
budgets the Monte Carlo scheduling and never changes results.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__, conjecture, networks, patterns, verify

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID_INPUT = 2
EXIT_VERIFY_FAILED = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def _emit(payload: str, out: str | None, manifest: dict) -> None:
    outputs = {}
    if out:
        Path(out).write_text(payload, encoding="utf-8")
        outputs[out] = _digest(payload.encode())
    else:
        sys.stdout.write(payload)
        outputs["<stdout>"] = _digest(payload.encode())
    manifest["outputs"] = outputs
    text = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out + ".manifest.json").write_text(text, encoding="utf-8")
    else:
        sys.stderr.write(text)


def _manifest(subcommand: str, config: dict) -> dict:
    return {
        "tool": "rtcnlab",
        "version": __version__,
        "subcommand": subcommand,
        "seed": config.get("seed"),
        "config": {k: v for k, v in sorted(config.items())},
    }


def _json_dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def cmd_generate(args) -> int:
    if args.leaves < 2:
        raise UsageError("--leaves must be at least 2")
    net = networks.generate(args.leaves, args.seed)
    violations = networks.validate(net)
    if violations:
        sys.stderr.write("generated network failed validation:\n")
        for v in violations:
            sys.stderr.write(f"  {v}\n")
        return EXIT_INVALID_INPUT
    payload = networks.serialize(net) if args.format == "events" \
        else networks.to_dot(net)
    cfg = {"leaves": args.leaves, "seed": args.seed, "format": args.format,
           "out": args.out}
    _emit(payload, args.out, _manifest("generate", cfg))
    return EXIT_OK


def cmd_count(args) -> int:
    if args.pattern not in patterns.catalog():
        raise UsageError(f"unknown pattern id {args.pattern!r}")
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        sys.stderr.write(f"cannot read {args.input}: {exc}\n")
        return EXIT_INVALID_INPUT
    try:
        net = networks.parse(text)
    except networks.ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_INVALID_INPUT
    count = patterns.count_occurrences(net, args.pattern)
    payload = _json_dump({"pattern": args.pattern, "count": count,
                          "leaves": net.n_leaves})
    cfg = {"input": args.input, "pattern": args.pattern, "seed": None,
           "out": args.out}
    _emit(payload, args.out, _manifest("count", cfg))
    return EXIT_OK


def cmd_verify(args) -> int:
    opts = {"seed": args.seed, "threads": args.threads}
    if args.reps is not None:
        opts["reps"] = args.reps
    if args.leaves is not None:
        opts["n"] = args.leaves
    if args.sigma_file is not None:
        opts["sigma_file"] = args.sigma_file
    try:
        report = verify.run_suite(args.suite, opts)
    except KeyError:
        raise UsageError(f"unknown suite {args.suite!r}") from None
    payload = _json_dump(report.to_dict())
    cfg = {"suite": args.suite, "seed": args.seed, "threads": args.threads,
           "reps": args.reps, "leaves": args.leaves,
           "sigma_file": args.sigma_file, "out": args.out}
    _emit(payload, args.out, _manifest("verify", cfg))
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def cmd_classify(args) -> int:
    if (args.pattern is None) == (args.pattern_file is None):
        raise UsageError("give exactly one of --pattern or --pattern-file")
    if args.pattern is not None:
        if args.pattern not in patterns.catalog():
            raise UsageError(f"unknown pattern id {args.pattern!r}")
        spec = patterns.catalog()[args.pattern]
    else:
        try:
            spec = patterns.load_pattern_file(args.pattern_file)
        except (OSError, ValueError, KeyError) as exc:
            sys.stderr.write(f"cannot load pattern: {exc}\n")
            return EXIT_INVALID_INPUT
    try:
        result = conjecture.classify(spec, args.base_mode)
    except patterns.PatternError as exc:
        sys.stderr.write(f"invalid pattern: {exc}\n")
        return EXIT_INVALID_INPUT
    payload = _json_dump({
        "label": result.label.value,
        "conjectural": result.conjectural,
        "consistent": result.consistent,
        "choices": [{"event": e, "label": lab.value}
                    for e, lab in result.by_choice],
    })
    cfg = {"pattern": args.pattern, "pattern_file": args.pattern_file,
           "base_mode": args.base_mode, "seed": None, "out": args.out}
    _emit(payload, args.out, _manifest("classify", cfg))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="rtcnlab",
                     description="ranked tree-child network pattern lab")
    default_threads = int(os.environ.get("RTCN_THREADS", "1"))
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a network")
    g.add_argument("--leaves", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=("events", "dot"), default="events")
    g.add_argument("--out")
    g.set_defaults(fn=cmd_generate)

    c = sub.add_parser("count", help="count a pattern in a network file")
    c.add_argument("--input", required=True)
    c.add_argument("--pattern", required=True)
    c.add_argument("--out")
    c.set_defaults(fn=cmd_count)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", required=True,
                   choices=sorted(verify.SUITES))
    v.add_argument("--seed", type=int, default=verify.DEFAULTS["seed"])
    v.add_argument("--reps", type=int, default=None)
    v.add_argument("--leaves", type=int, default=None,
                   help="override the suite's leaf count")
    v.add_argument("--threads", type=int, default=default_threads)
    v.add_argument("--sigma-file", default=None,
                   help="override the covariance matrix data file")
    v.add_argument("--out")
    v.set_defaults(fn=cmd_verify)

    k = sub.add_parser("classify", help="limit-law class of a pattern")
    k.add_argument("--pattern", default=None, help="catalog id")
    k.add_argument("--pattern-file", default=None, help="pattern JSON file")
    k.add_argument("--base-mode", choices=conjecture.BASE_MODES,
                   default="trivial-normal")
    k.add_argument("--out")
    k.set_defaults(fn=cmd_classify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
