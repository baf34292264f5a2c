"""Command-line interface: ``nlsat <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 resource or time
budget exhausted. Logs go to stderr, data to files or stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import datagen, phasemap
from .grammar import FRAGMENTS, ParseError, Vocabulary, parse, split_sentences
from .logic.formula import render_fol
from .logic.smtlib import to_smtlib
from .logic.translate import translate
from .solver.api import DEFAULT_MAX_NODES, DEFAULT_WALL_SECONDS, MixedFragment, solve

log = logging.getLogger("nlsat")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class BudgetExhausted(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _range(text: str) -> tuple[int, int]:
    parts = [int(p) for p in text.split(":")]
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2 or parts[0] > parts[1]:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
    return parts[0], parts[1]


def _fragment(text: str) -> str:
    if text not in FRAGMENTS:
        raise argparse.ArgumentTypeError(f"fragment must be one of {', '.join(FRAGMENTS)}")
    return text


def _budget_flags(p):
    p.add_argument("--wall-seconds", type=float, default=DEFAULT_WALL_SECONDS,
                   help="per-instance wall-clock budget (default %(default)s)")
    p.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES,
                   help="per-instance search budget (default %(default)s)")


def _sampling_flags(p):
    p.add_argument("--distinct-slots", action="store_true",
                   help="fill the slots of one sentence without repetition")
    p.add_argument("--template-law", choices=("expanded", "base"), default="expanded",
                   help="uniform over expanded templates or over base forms (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="nlsat", description="Satisfiability of controlled-English sentence sets.")
    top.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"),
                     help="stderr log level (default %(default)s)")
    sub = top.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", type=Path, help="key = value file (or a .meta.json); flags override it")
        return p

    p = cmd("phase-map", "estimate the probability of satisfiability over a grid")
    p.add_argument("--fragment", type=_fragment, required=True, help="one of S, W, V, Z, A")
    p.add_argument("--n1", type=_range, help="noun-count range lo:hi (default by fragment)")
    p.add_argument("--n2", type=_range, help="verb-count range lo:hi (default by fragment)")
    p.add_argument("--alpha", help="alpha axis lo:hi[:step] (default 0.25:8 or 0.25:6)")
    p.add_argument("--beta", help="beta axis lo:hi[:step] (fragments with verbs; default as alpha)")
    p.add_argument("--step", type=float, default=0.25, help="default axis step (default %(default)s)")
    p.add_argument("--samples", type=int, default=200, help="samples per cell (default %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default %(default)s)")
    p.add_argument("--out", type=Path, required=True, help="grid CSV")
    p.add_argument("--long-out", type=Path, help="optional long-format CSV for plotting")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default %(default)s)")
    _sampling_flags(p)
    _budget_flags(p)

    p = cmd("region", "select the mid-probability cells of a grid")
    p.add_argument("--grid", type=Path, required=True, help="grid CSV written by phase-map")
    p.add_argument("--lo", type=float, default=0.35, help="lowest estimate kept (default %(default)s)")
    p.add_argument("--hi", type=float, default=0.65, help="highest estimate kept (default %(default)s)")
    p.add_argument("--out", type=Path, required=True, help="region CSV")

    p = cmd("gen", "generate a balanced labeled dataset from a region")
    p.add_argument("--fragment", type=_fragment, required=True, help="one of S, W, V, Z, A")
    p.add_argument("--region", type=Path, required=True, help="region CSV written by the region command")
    p.add_argument("--train", type=int, default=0, help="training instances (default %(default)s)")
    p.add_argument("--eval", type=int, default=0, help="evaluation instances (default %(default)s)")
    p.add_argument("--test", type=int, default=0, help="test instances (default %(default)s)")
    p.add_argument("--zero-shot", action="store_true",
                   help="also write zeroshot.jsonl: 100 per label for each n1+n2 in the zero-shot ranges")
    p.add_argument("--n1", type=_range, help="noun-count range lo:hi (default by fragment)")
    p.add_argument("--n2", type=_range, help="verb-count range lo:hi (default by fragment)")
    p.add_argument("--n1-law", choices=("uniform", "normal"),
                   help="law of the noun count (default normal for S and W, uniform otherwise)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default %(default)s)")
    p.add_argument("--out-dir", type=Path, required=True, help="directory for the JSONL splits and manifest")
    p.add_argument("--emit-model", action="store_true", help="store certificates of sat instances")
    p.add_argument("--record-time", action="store_true", help="store solver times (output no longer reproducible)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default %(default)s)")
    _sampling_flags(p)
    _budget_flags(p)

    p = cmd("solve", "decide sentence sets")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input", type=Path, help="JSONL records or text, one sentence per line")
    src.add_argument("--text", help="sentences separated by full stops")
    p.add_argument("--fragment", type=_fragment, help="required for text input")
    p.add_argument("--emit-model", action="store_true", help="print the model of sat instances as JSON")
    _budget_flags(p)

    p = cmd("translate", "print formulas for sentence sets")
    p.add_argument("--in", dest="input", type=Path, required=True,
                   help="JSONL records or text, one sentence per line")
    p.add_argument("--fragment", type=_fragment, help="required for text input")
    p.add_argument("--to", choices=("fol", "smtlib"), default="fol", help="output format (default %(default)s)")
    p.add_argument("--out", type=Path, help="output file (default stdout)")

    p = cmd("prompt", "render zero-shot prompts for a dataset")
    p.add_argument("--in", dest="input", type=Path, required=True, help="JSONL dataset")
    p.add_argument("--style", choices=datagen.STYLES, default="satisfiable",
                   help="prompt template (default %(default)s)")
    p.add_argument("--example-id", help="id of the one-shot example (truefalse; default first record)")
    p.add_argument("--out", type=Path, required=True, help="prompt text; answers go to OUT.answers.jsonl")

    p = cmd("stats", "dataset statistics")
    p.add_argument("--in", dest="input", type=Path, nargs="+", required=True, help="JSONL splits")
    p.add_argument("--out", type=Path, help="CSV table; histograms go to OUT.hist.json")

    p = cmd("ksat", "random k-SAT satisfiability curve")
    p.add_argument("--k", type=int, default=3, help="literals per clause (default %(default)s)")
    p.add_argument("--n", type=int, required=True, help="number of variables")
    p.add_argument("--ratios", default="3.5:5.0:0.1", help="lo:hi:step or a comma list (default %(default)s)")
    p.add_argument("--samples", type=int, default=500, help="formulas per ratio (default %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default %(default)s)")
    p.add_argument("--out", type=Path, help="curve CSV (default stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default %(default)s)")
    return top


# ---------------------------------------------------------------------------
# config files

def read_config(path: Path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment. A .json file's ``args`` are used as is."""
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        data = json.loads(text)
        return dict(data.get("args", data))
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _subparser(top: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for a in top._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[name]
    raise KeyError(name)


def _config_location(argv: Sequence[str]) -> tuple[str | None, Path | None]:
    command = next((a for a in argv if a in COMMANDS), None)
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = Path(argv[i + 1])
        elif a.startswith("--config="):
            path = Path(a.split("=", 1)[1])
    return command, path


def _apply_config(top, command: str, path: Path):
    """Install the file's values as defaults of the subcommand's parser."""
    sp = _subparser(top, command)
    try:
        values = read_config(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in values.items():
        a = actions.get(key)
        if a is None or key in ("help", "config"):
            raise UsageError(f"{path}: unknown key {key!r} for {command}")
        if value is None or not isinstance(value, str):
            defaults[key] = tuple(value) if key in ("n1", "n2") and value else value
            if a.nargs == "+" and isinstance(value, list):
                defaults[key] = [a.type(v) for v in value]
        elif isinstance(a, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes")
        else:
            try:
                defaults[key] = a.type(value) if a.type is not None else value
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{path}: {key}: {exc}") from exc
            if a.nargs == "+":
                defaults[key] = [defaults[key]]
            if a.choices is not None and defaults[key] not in a.choices:
                raise UsageError(f"{path}: {key}: invalid choice {value!r}")
    for a in sp._actions:
        if a.dest in defaults:
            a.required = False
    for g in sp._mutually_exclusive_groups:
        if any(a.dest in defaults and defaults[a.dest] is not None for a in g._group_actions):
            g.required = False
    sp.set_defaults(**defaults)


def resolved_args(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("config", "log_level", "command", "func", "jobs"):
            continue
        if isinstance(v, Path):
            v = str(v)
        elif isinstance(v, tuple):
            v = list(v)
        elif isinstance(v, list):
            v = [str(x) if isinstance(x, Path) else x for x in v]
        out[k] = v
    return out


def _add_args_to_meta(path: Path, args):
    meta_file = phasemap.meta_path(path)
    meta = json.loads(meta_file.read_text(encoding="utf-8"))
    meta["command"] = args.command
    meta["args"] = resolved_args(args)
    meta_file.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class _Outputs:
    """Tracks files written by a command so a failure removes them."""

    def __init__(self):
        self.paths: list[Path] = []

    def add(self, *paths):
        self.paths.extend(Path(p) for p in paths if p is not None)

    def cleanup(self):
        for p in self.paths:
            for q in (p, phasemap.meta_path(p), p.with_name(p.name + ".tmp")):
                if q.exists() and q.is_file():
                    q.unlink()


def _write_text(path: Path | None, text: str):
    if path is None:
        sys.stdout.write(text)
        return
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _progress(label):
    def report(done, total):
        if done == total or done % max(1, total // 20) == 0:
            log.info("%s: %d/%d", label, done, total)
    return report


# ---------------------------------------------------------------------------
# commands

def _options(args) -> phasemap.SampleOptions:
    return phasemap.SampleOptions(distinct_slots=args.distinct_slots, law=args.template_law,
                                  wall_seconds=args.wall_seconds, max_nodes=args.max_nodes)


def cmd_phase_map(args, outputs):
    fr = args.fragment
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    default_hi = 8.0 if fr in ("S", "W") else 6.0
    alpha = phasemap.Axis.parse(args.alpha or f"0.25:{default_hi}", args.step)
    beta = None
    if phasemap.has_verbs(fr):
        beta = phasemap.Axis.parse(args.beta, args.step) if args.beta else alpha
    outputs.add(args.out, args.long_out)
    grid = phasemap.map_region(fr, alpha, beta, args.samples, args.seed, n1_range=args.n1,
                               n2_range=args.n2, options=_options(args), jobs=args.jobs,
                               progress=_progress("cells"))
    phasemap.save_grid(grid, args.out, args.long_out)
    _add_args_to_meta(args.out, args)
    unreliable = [c for c in grid.cells if c.estimate.unreliable]
    for c in unreliable:
        log.warning("cell alpha=%s beta=%s is unreliable (%d timeouts)", c.alpha, c.beta, c.estimate.timeouts)
    log.info("wrote %d cells to %s", len(grid.cells), args.out)
    return EXIT_OK


def cmd_region(args, outputs):
    if not args.lo < args.hi:
        raise UsageError(f"--lo must be below --hi (got {args.lo}, {args.hi})")
    try:
        grid = phasemap.load_grid(args.grid)
    except (OSError, KeyError, ValueError) as exc:
        raise datagen.DataError(f"cannot read grid {args.grid}: {exc}") from exc
    import warnings
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        region = phasemap.extract_region(grid, args.lo, args.hi)
    for w in caught:
        log.warning("%s", w.message)
    outputs.add(args.out)
    phasemap.save_region(region, args.out, source=str(args.grid))
    _add_args_to_meta(args.out, args)
    log.info("region has %d cells", len(region.cells))
    return EXIT_OK


def _load_region(path: Path) -> phasemap.PhaseRegion:
    try:
        return phasemap.load_region(path)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise datagen.DataError(f"cannot read region {path}: {exc}") from exc


def cmd_gen(args, outputs):
    region = _load_region(args.region)
    if not region.cells:
        raise datagen.RegionEmpty(f"region {args.region} is empty")
    config = datagen.GenConfig(
        args.fragment, args.train, args.eval, args.test, n1_range=args.n1, n2_range=args.n2,
        seed=args.seed, distinct_slots=args.distinct_slots, template_law=args.template_law,
        n1_law=args.n1_law, wall_seconds=args.wall_seconds, max_nodes=args.max_nodes,
        emit_model=args.emit_model, record_time=args.record_time)
    if config.total == 0 and not args.zero_shot:
        raise UsageError("nothing to generate: give --train/--eval/--test or --zero-shot")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    stats = datagen.GenStats()
    counts = {}
    if config.total:
        instances = datagen.generate_dataset(config, region, jobs=args.jobs, stats=stats,
                                             progress=_progress("accepted"))
        splits = datagen.split_dataset(instances, config.sizes(), args.seed)
        for name, part in splits.items():
            if config.sizes()[name]:
                path = args.out_dir / f"{name}.jsonl"
                outputs.add(path)
                datagen.emit_jsonl(part, path)
                counts[name] = {"total": len(part), "sat": sum(x.label == datagen.SAT for x in part)}
    if args.zero_shot:
        zs = datagen.zero_shot_dataset(
            args.fragment, region, args.seed, jobs=args.jobs, stats=stats,
            distinct_slots=args.distinct_slots, template_law=args.template_law,
            wall_seconds=args.wall_seconds, max_nodes=args.max_nodes, emit_model=args.emit_model,
            record_time=args.record_time)
        path = args.out_dir / "zeroshot.jsonl"
        outputs.add(path)
        datagen.emit_jsonl(zs, path)
        counts["zeroshot"] = {"total": len(zs), "sat": sum(x.label == datagen.SAT for x in zs)}
    outputs.add(args.out_dir / "manifest.json")
    datagen.write_manifest(args.out_dir, config, stats, counts, str(args.region),
                           {"command": "gen", "args": resolved_args(args)})
    log.info("candidates %d, timeouts %d, duplicates %d", stats.candidates, stats.timeouts, stats.duplicates)
    return EXIT_OK


def _read_instances(args, vocab) -> list[tuple[str, str, list]]:
    """``(name, fragment, sentences)`` from --text or --in."""
    if getattr(args, "text", None) is not None:
        if not args.fragment:
            raise UsageError("--fragment is required with --text")
        texts = split_sentences(args.text)
        return [("text", args.fragment, [parse(t, args.fragment, vocab) for t in texts])]
    path = args.input
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise datagen.DataError(str(exc)) from exc
    first = raw.lstrip()[:1]
    out = []
    if first == "{":
        for inst in datagen.load_jsonl(path):
            fr = args.fragment or inst.fragment
            out.append((inst.id, fr, [parse(s, fr, vocab) for s in inst.sentences]))
        return out
    if not args.fragment:
        raise UsageError("--fragment is required for text input")
    for k, block in enumerate(raw.replace("\r\n", "\n").split("\n\n")):
        lines = [ln.strip() for ln in block.splitlines() if ln.strip()]
        if lines:
            out.append((f"{path.name}#{k}", args.fragment, [parse(ln, args.fragment, vocab) for ln in lines]))
    return out


def cmd_solve(args, outputs):
    vocab = Vocabulary.default()
    timeouts = 0
    for name, fr, sents in _read_instances(args, vocab):
        v = solve(sents, fr, vocab=vocab, wall_seconds=args.wall_seconds, max_nodes=args.max_nodes)
        print(v.status, flush=True)
        if args.emit_model and v.is_sat:
            print(json.dumps(v.certificate.to_json()), flush=True)
        timeouts += v.is_timeout
    if timeouts:
        raise BudgetExhausted(f"{timeouts} instance(s) ran out of budget")
    return EXIT_OK


def cmd_translate(args, outputs):
    vocab = Vocabulary.default()
    chunks = []
    for name, fr, sents in _read_instances(args, vocab):
        formulas = [translate(s, vocab) for s in sents]
        if args.to == "fol":
            chunks.append("\n".join(render_fol(f) for f in formulas) + "\n")
        else:
            chunks.append(f"; {name}\n" + to_smtlib(formulas))
    outputs.add(args.out)
    _write_text(args.out, "\n".join(chunks))
    return EXIT_OK


def cmd_prompt(args, outputs):
    instances = datagen.load_jsonl(args.input)
    example = None
    if args.style == "truefalse":
        if not instances:
            raise datagen.DataError("no instances")
        if args.example_id is None:
            example = instances[0]
        else:
            found = [x for x in instances if x.id == args.example_id]
            if not found:
                raise datagen.DataError(f"no instance with id {args.example_id!r}")
            example = found[0]
        instances = [x for x in instances if x is not example]
    records = [datagen.zero_shot_prompt(x, args.style, example) for x in instances]
    outputs.add(args.out)
    datagen.write_prompts(records, args.out)
    answers = args.out.with_name(args.out.name + ".answers.jsonl")
    outputs.add(answers)
    _write_text(answers, "".join(json.dumps({"id": r.instance_id, "style": r.style, "answer": r.answer}) + "\n"
                                 for r in records))
    return EXIT_OK


def cmd_stats(args, outputs):
    reports = {}
    for path in args.input:
        reports[path.stem] = datagen.dataset_report(datagen.load_jsonl(path))
    rows = datagen.report_rows(reports)
    sys.stdout.write(datagen.format_table(rows))
    if args.out:
        outputs.add(args.out, args.out.with_name(args.out.name + ".hist.json"))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(datagen.REPORT_COLUMNS), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _write_text(args.out, buf.getvalue())
        hists = {k: {h: r[h] for h in ("alpha_beta_hist", "subject_ratio_hist", "object_ratio_hist")}
                 for k, r in reports.items()}
        _write_text(args.out.with_name(args.out.name + ".hist.json"),
                    json.dumps(hists, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


KSAT_COLUMNS = ["k", "n", "ratio", "m", "samples", "sat", "phat", "ci_lo", "ci_hi"]


def cmd_ksat(args, outputs):
    if args.samples < 1 or args.k < 2 or args.n < args.k:
        raise UsageError("need samples >= 1, k >= 2 and n >= k")
    try:
        ratios = phasemap.parse_ratios(args.ratios)
    except ValueError as exc:
        raise UsageError(f"--ratios: {exc}") from exc
    points = phasemap.ksat_psat(args.k, args.n, ratios, args.samples, args.seed, jobs=args.jobs)
    rows = [{"k": args.k, "n": args.n, "ratio": round(p.ratio, 6), "m": p.m, "samples": p.samples,
             "sat": p.sat, "phat": round(p.phat, 6), "ci_lo": round(p.ci[0], 6), "ci_hi": round(p.ci[1], 6)}
            for p in points]
    if args.out:
        outputs.add(args.out)
        phasemap.write_rows(args.out, KSAT_COLUMNS, rows)
        config = {**resolved_args(args), "ratios": ratios}
        phasemap.write_meta(args.out, "ksat-curve", config)
        _add_args_to_meta(args.out, args)
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=KSAT_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    x = phasemap.crossing(points)
    log.info("p = 0.5 crossing at ratio %s", "none" if x is None else f"{x:.3f}")
    return EXIT_OK


COMMANDS = {"phase-map": cmd_phase_map, "region": cmd_region, "gen": cmd_gen, "solve": cmd_solve,
            "translate": cmd_translate, "prompt": cmd_prompt, "stats": cmd_stats, "ksat": cmd_ksat}


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    top = build_parser()
    outputs = _Outputs()
    handler = None
    try:
        command, config = _config_location(argv)
        if command is not None and config is not None:
            _apply_config(top, command, config)
        try:
            args = top.parse_args(argv)
        except SystemExit as exc:  # --help
            return EXIT_OK if not exc.code else EXIT_USAGE
        handler = _setup_logging(args.log_level)
        if hasattr(args, "jobs") and args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        return COMMANDS[args.command](args, outputs)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (datagen.DataError, ParseError, MixedFragment, json.JSONDecodeError, OSError) as exc:
        outputs.cleanup()
        print(f"nlsat: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BudgetExhausted, datagen.QuotaUnreachable) as exc:
        outputs.cleanup()
        print(f"nlsat: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except BaseException:
        outputs.cleanup()
        raise
    finally:
        if handler is not None:
            logging.getLogger("nlsat").removeHandler(handler)


def _setup_logging(level: str) -> logging.Handler:
    root = logging.getLogger("nlsat")
    h = logging.StreamHandler(sys.stderr)
    h.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(h)
    root.setLevel(level)
    return h


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
