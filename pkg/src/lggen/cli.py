"""Command-line entry point: ``lggen {validate,count,compile,generate}``.

Exit codes: 0 success, 1 domain error (diagnostics, cycles, intent or
morphology errors), 2 environment error (I/O, unparsable files).
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .core import (
    DuplicateGraphError,
    GrammarError,
    Honorific,
    Part,
    RequestType,
    SentenceType,
    UnknownModuleError,
    submodule_closure,
    validate_bundle,
)
from .dsl import ParseError, bundle_hash, load_bundle
from .emitter import Dataset, build_example, deduplicate, emit_jsonl, emit_yaml
from .generator import (
    GenerationConfig,
    Mode,
    enumerate_patterns,
    pattern_weight,
    sample_uniform,
    select_top,
    syl_max_of,
)
from .morphology import realize
from .rtn import CycleError, ExpansionConfig, count_module, count_paths, dump_flat, expand, find_cycles, load_flat, read_flat_header

EXIT_OK, EXIT_DOMAIN, EXIT_ENV = 0, 1, 2

_PART_ORDER = {p: i for i, p in enumerate(
    [Part.LINK, Part.TOPIC_ENTITY, Part.TOPIC_FEATURE, Part.EVENT, Part.DISCOURSE_MARKER])}


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def sample_pack_dir() -> Path:
    return Path(str(resources.files("lggen") / "packs" / "sample"))


def _split(values: Optional[Sequence[str]]) -> list[str]:
    out: list[str] = []
    for v in values or ():
        out.extend(x for x in v.split(",") if x)
    return out


def _enum_values(enum, values, flag):
    try:
        return frozenset(enum(v) for v in _split(values))
    except ValueError as exc:
        choices = ", ".join(e.value for e in enum)
        raise _Fail(EXIT_DOMAIN, f"{flag}: {exc}; choose from {choices}") from None


def _err(msg: str):
    print(f"lggen: {msg}", file=sys.stderr)


def _load(args):
    directory = Path(args.grammar_dir) if args.grammar_dir else sample_pack_dir()
    try:
        return load_bundle(directory, main=args.main)
    except ParseError as exc:
        raise _Fail(EXIT_ENV, f"parse error: {exc}") from None
    except (OSError, UnicodeError) as exc:
        raise _Fail(EXIT_ENV, f"cannot read grammar directory {directory}: {exc}") from None
    except (DuplicateGraphError, GrammarError) as exc:
        raise _Fail(EXIT_DOMAIN, str(exc)) from None


def _expansion(args) -> ExpansionConfig:
    try:
        return ExpansionConfig(args.depth_limit)
    except ValueError as exc:
        raise _Fail(EXIT_DOMAIN, str(exc)) from None


def _write_text(text: str, out: Optional[str]):
    data = text.encode("utf-8")
    if out in (None, "-"):
        buf = getattr(sys.stdout, "buffer", None)
        if buf is not None:
            sys.stdout.flush()
            buf.write(data)
            buf.flush()
        else:
            sys.stdout.write(text)
        return
    try:
        Path(out).write_bytes(data)
    except OSError as exc:
        raise _Fail(EXIT_ENV, f"cannot write {out}: {exc}") from None


def _report(args, payload: dict, lines: list[str], stream=None):
    stream = stream or sys.stdout
    if args.report == "json":
        print(json.dumps(payload, ensure_ascii=False, sort_keys=True), file=stream)
    else:
        for line in lines:
            print(line, file=stream)


def _checked_bundle(args):
    bundle = _load(args)
    diags = validate_bundle(bundle)
    if diags:
        for d in diags:
            _err(str(d))
        raise _Fail(EXIT_DOMAIN, f"{len(diags)} diagnostics")
    return bundle


def cmd_validate(args) -> int:
    bundle = _load(args)
    diags = [str(d) for d in validate_bundle(bundle)]
    if not diags:
        diags = [f"CycleError [{' -> '.join(e.chain)}] {e.reason}" for e in find_cycles(bundle, _expansion(args))]
    payload = {"graphs": len(bundle.graphs), "main": bundle.main, "diagnostics": diags}
    _report(args, payload, diags + [f"{len(diags)} diagnostics"])
    return EXIT_DOMAIN if diags else EXIT_OK


def cmd_count(args) -> int:
    bundle = _checked_bundle(args)
    config = _expansion(args)
    names = sorted(bundle.graphs, key=lambda n: (_PART_ORDER[bundle.graphs[n].tags.part], n))
    wanted = _split(args.module)
    if wanted:
        keep = set()
        for m in wanted:
            keep |= submodule_closure(bundle, m)
        names = [n for n in names if n in keep]
    rows = []
    for name in names:
        tag = bundle.graphs[name].tags
        rows.append({"module": name, "part": tag.part.value, "category": tag.category,
                     "parent": tag.parent, "count": count_module(bundle, name, config).exact})
    total = count_paths(expand(bundle, config)).exact
    width = max([len(r["module"]) for r in rows] + [6])
    lines = [f"{'module':<{width}}  {'part':<16}  {'submodule of':<16}  patterns"]
    for r in rows:
        lines.append(f"{r['module']:<{width}}  {r['part']:<16}  {r['parent'] or '-':<16}  {r['count']:,}")
    lines.append(f"total ({bundle.main}): {total:,}")
    _report(args, {"main": bundle.main, "total": total, "modules": rows}, lines)
    if args.figure:
        from .report import plot_module_counts

        plot_module_counts(rows, args.figure)
    return EXIT_OK


def _cache_digest(bundle, config: ExpansionConfig) -> str:
    return bundle_hash(bundle, f"depth_limit={config.depth_limit}")


def _cached_flat(path: Path, bundle, config: ExpansionConfig):
    """Return (flat, status) where status is 'hit', 'stale' or 'missing'."""
    digest = _cache_digest(bundle, config)
    if path.exists():
        try:
            text = path.read_text(encoding="utf-8")
            if read_flat_header(text).get("hash") == digest:
                return load_flat(text), "hit"
        except (OSError, ValueError, KeyError):
            pass
        status = "stale"
    else:
        status = "missing"
    flat = expand(bundle, config)
    _write_text(dump_flat(flat, digest), str(path))
    return flat, status


def cmd_compile(args) -> int:
    bundle = _checked_bundle(args)
    config = _expansion(args)
    out = Path(args.out or f"{bundle.main}.flat")
    flat, status = _cached_flat(out, bundle, config)
    if status == "stale":
        _err(f"warning: stale cache {out} (bundle hash mismatch); regenerated")
    paths = count_paths(flat).exact
    payload = {"cache": str(out), "status": status, "states": flat.num_states,
               "transitions": len(flat.transitions), "paths": paths}
    lines = [f"cache: {out} ({'up to date' if status == 'hit' else 'written'})",
             f"states: {flat.num_states}", f"transitions: {len(flat.transitions)}", f"paths: {paths:,}"]
    _report(args, payload, lines)
    return EXIT_OK


def _generation_config(args) -> GenerationConfig:
    if args.size is not None and args.size < 1:
        raise _Fail(EXIT_DOMAIN, "--size must be >= 1")
    return GenerationConfig(
        target_size=args.size or 1000,
        honorific_filter=_enum_values(Honorific, args.honorific, "--honorific"),
        sentence_filter=_enum_values(SentenceType, args.sentence, "--sentence"),
        request_filter=_enum_values(RequestType, args.request, "--request"),
        module_include=tuple(_split(args.include_module)),
        module_exclude=tuple(_split(args.exclude_module)),
        mode=Mode.EXHAUSTIVE if args.exhaustive else Mode.TOP_WEIGHT,
    )


def cmd_generate(args) -> int:
    t0 = time.perf_counter()
    bundle = _checked_bundle(args)
    config = _expansion(args)
    gconf = _generation_config(args)
    if args.cache:
        flat, status = _cached_flat(Path(args.cache), bundle, config)
        if status == "stale":
            _err(f"warning: stale cache {args.cache} (bundle hash mismatch); regenerated")
    else:
        flat = expand(bundle, config)
    patterns = list(enumerate_patterns(flat, gconf))
    ctx = syl_max_of(patterns)
    table = bundle.conjugation
    if gconf.mode is Mode.EXHAUSTIVE:
        chosen = patterns
    elif args.sample_uniform:
        chosen = sample_uniform(patterns, gconf.target_size, args.seed)
    else:
        chosen = select_top(patterns, ctx, gconf.target_size, table)
    examples = [build_example(p, realize(p.tokens, table), pattern_weight(p, ctx)) for p in chosen]
    unique = deduplicate(examples)
    dataset = Dataset(unique, {
        "bundle_hash": bundle_hash(bundle),
        "tool_version": __version__,
        "config": {
            "size": gconf.target_size, "mode": gconf.mode.value,
            "honorific": sorted(h.value for h in gconf.honorific_filter),
            "sentence": sorted(s.value for s in gconf.sentence_filter),
            "request": sorted(r.value for r in gconf.request_filter),
            "include_module": list(gconf.module_include), "exclude_module": list(gconf.module_exclude),
            "depth_limit": config.depth_limit, "sample_uniform": bool(args.sample_uniform), "seed": args.seed,
        },
    })
    buf = io.StringIO()
    (emit_yaml if args.format == "yaml" else emit_jsonl)(dataset, buf)
    _write_text(buf.getvalue(), args.out)
    if args.figure:
        from .report import plot_selection

        plot_selection(unique, args.figure)
    elapsed = time.perf_counter() - t0
    if len(unique) < len(examples):
        _err(f"warning: {len(examples) - len(unique)} duplicate (text, intent) pairs removed")
    payload = {"requested": gconf.target_size, "candidates": len(patterns), "selected": len(chosen),
               "emitted": len(unique), "syl_max": ctx.syl_max, "elapsed_s": round(elapsed, 3),
               "metadata": dataset.metadata}
    lines = [f"requested: {gconf.target_size}", f"candidates: {len(patterns)}",
             f"emitted: {len(unique)} (after dedup)", f"syl_max: {ctx.syl_max}", f"elapsed: {elapsed:.2f}s"]
    _report(args, payload, lines, stream=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lggen", description="Generate annotated NLU data from local grammar graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("grammar_dir", nargs="?", help="directory scanned recursively for *.lgg and *.conj "
                                                       "(default: the bundled sample pack)")
    common.add_argument("--main", help="name of the linking graph (default: the unique root LINK graph)")
    common.add_argument("--depth-limit", type=int, default=16, help="maximum subgraph call depth")
    common.add_argument("--report", choices=("text", "json"), default="text")

    sub.add_parser("validate", parents=[common], help="check graphs, references and cycles")

    p = sub.add_parser("count", parents=[common], help="path counts per module")
    p.add_argument("--module", action="append", help="restrict the table to this module's closure")
    p.add_argument("--figure", help="also render a bar chart to this image file")

    p = sub.add_parser("compile", parents=[common], help="write the flattened graph cache")
    p.add_argument("--out", help="cache file (default: <main>.flat)")

    p = sub.add_parser(
        "generate", parents=[common], help="generate training data",
        description="Filters combine by intersection across dimensions and union within one "
                    "(e.g. --honorific Basic,Polite --sentence Imperative).")
    p.add_argument("--size", type=int, default=1000, help="number of utterances to select")
    p.add_argument("--honorific", action="append", help="Raising, Lowering, Polite, Basic (repeatable or comma list)")
    p.add_argument("--sentence", action="append", help="Declarative, Imperative, Interrogative, Suggestive")
    p.add_argument("--request", action="append", help="one of the 11 request types, e.g. Method, Demand")
    p.add_argument("--include-module", action="append", help="keep only paths through this module or its submodules")
    p.add_argument("--exclude-module", action="append", help="drop paths through this module or its submodules")
    p.add_argument("--format", choices=("jsonl", "yaml"), default="jsonl")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--sample-uniform", action="store_true", help="uniform random subset instead of top weight")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exhaustive", action="store_true", help="emit every surviving path, ignoring --size")
    p.add_argument("--cache", help="reuse or refresh a compiled flat-graph cache at this path")
    p.add_argument("--figure", help="also render a weight / honorific chart to this image file")
    return parser


COMMANDS = {"validate": cmd_validate, "count": cmd_count, "compile": cmd_compile, "generate": cmd_generate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except _Fail as exc:
        _err(str(exc))
        return exc.code
    except CycleError as exc:
        _err(f"cycle: {exc}")
        return EXIT_DOMAIN
    except UnknownModuleError as exc:
        _err(str(exc))
        return EXIT_DOMAIN
    except GrammarError as exc:
        _err(str(exc))
        return EXIT_DOMAIN
    except OSError as exc:
        _err(str(exc))
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
