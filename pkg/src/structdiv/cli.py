"""Command-line interface.

Every command writing results takes ``--out DIR`` and leaves a
``manifest.json`` there recording argv, resolved config, seeds and the
digests of inputs and outputs; ``structdiv reproduce DIR/manifest.json``
re-runs it and compares digests.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, _backend
from .analysis import coverage_buckets, geometric_edges, pairwise_mi, stats
from .config import Profile, load_profile, load_profile_file
from .dataset import filter_frequency_cap, ingest, write_pool
from .errors import StructDivError
from .grammar import ToyGrammar, bundled_grammar, gen_pool
from .index import build_index
from .manifest import read_manifest, write_manifest
from .sampler import PRESET_NAMES, STRATEGIES, preset, sample_diverse, sample_random
from .splits import SplitKind, SplitSpec, check_solvable, make_split
from .substructures import Kind

log = logging.getLogger("structdiv")


class CommandError(StructDivError):
    pass


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("data", help="pool file, one JSON object per line")
    p.add_argument("--profile", default="covr", help="lexer profile name (default: covr)")
    p.add_argument("--config", help="profile YAML file; overrides --profile")
    p.add_argument("--lenient", action="store_true", help="skip malformed or unparsable records")
    p.add_argument("--frequency-cap", type=float, default=None, metavar="P",
                   help="drop instances whose program occurs in more than P of the pool")


def _add_out(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--out", default=default, help=f"output directory (default: {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="structdiv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"structdiv {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="parse a pool and report problems")
    _add_data_args(p)

    p = sub.add_parser("stats", help="count instances, bigrams, subtrees and templates")
    _add_data_args(p)
    p.add_argument("--d", type=int, default=None, help="max subtree size (default: profile)")
    _add_out(p, "out/stats")

    p = sub.add_parser("sample", help="draw a diverse or random subsample")
    _add_data_args(p)
    p.add_argument("--preset", required=True, choices=PRESET_NAMES)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--d", type=int, default=None, help="max subtree size (default: profile)")
    p.add_argument("--strategy", choices=STRATEGIES, default="auto",
                   help="greedy implementation; all give identical results")
    _add_out(p, "out/sample")

    p = sub.add_parser("split", help="split a dataset into pool and test ids")
    _add_data_args(p)
    p.add_argument("--kind", required=True, choices=[k.value for k in SplitKind])
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--test-size", type=int)
    size.add_argument("--test-fraction", type=float)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-repair-rounds", type=int, default=50)
    p.add_argument("--d", type=int, default=None)
    _add_out(p, "out/split")

    p = sub.add_parser("check-solvable", help="check test tokens all occur in the pool")
    _add_data_args(p)
    p.add_argument("--split", required=True, help="directory with pool_ids.txt and test_ids.txt")
    _add_out(p, "out/check-solvable")

    for name, helptext in (("analyze-coverage", "coverage of pool substructures by rank bucket"),
                           ("analyze-ami", "average mutual information of subsamples")):
        p = sub.add_parser(name, help=helptext)
        _add_data_args(p)
        p.add_argument("--sample", action="append", required=True, metavar="NAME=IDS",
                       help="named id list file (one id per line); repeatable")
        p.add_argument("--kind", choices=[k.value for k in Kind], default="subtree")
        p.add_argument("--d", type=int, default=None)
        if name == "analyze-coverage":
            p.add_argument("--edges", help="comma-separated rank bucket edges (default: 1,2,4,...)")
            _add_out(p, "out/coverage")
        else:
            p.add_argument("--no-diagonal", action="store_true", help="exclude i == j terms")
            p.add_argument("--top-k", type=int, default=0, help="also report the top-k MI pairs")
            _add_out(p, "out/ami")

    p = sub.add_parser("gen-pool", help="generate a synthetic pool from a toy grammar")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--grammar", default="covr_zipf", help="bundled grammar name or JSON path")
    _add_out(p, "out/pool")

    p = sub.add_parser("reproduce", help="re-run a manifest and compare output digests")
    p.add_argument("manifest")
    return parser


def _profile(args) -> Profile:
    return load_profile_file(args.config) if args.config else load_profile(args.profile)


def _load(args, kind: Kind = Kind.SUBTREE):
    profile = _profile(args)
    d = getattr(args, "d", None) or profile.d
    cfg = profile.substructure(kind)
    if d != cfg.d:
        from .substructures import SubstructureConfig
        cfg = SubstructureConfig(kind, d, profile.n_max)
    pool, report = ingest(args.data, profile.lexer, cfg, strict=not args.lenient)
    if args.frequency_cap is not None:
        before = len(pool)
        pool = filter_frequency_cap(pool, args.frequency_cap)
        log.info("frequency cap removed %d instances", before - len(pool))
    return profile, cfg, pool, report


def _base_config(args, profile: Profile) -> dict:
    return {"profile": profile.to_dict(), "lenient": args.lenient,
            "frequency_cap": args.frequency_cap}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _argv_without_out(argv: Sequence[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
        elif a == "--out":
            skip = True
        elif not a.startswith("--out="):
            out.append(a)
    return out


def _read_ids(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _write_ids(path: Path, ids: Sequence[str]) -> None:
    path.write_text("".join(f"{i}\n" for i in ids), encoding="utf-8")


def _inputs(args) -> list[str]:
    paths = [args.data]
    if getattr(args, "config", None):
        paths.append(args.config)
    return paths


def cmd_ingest_check(args, argv) -> int:
    profile = _profile(args)
    pool, report = ingest(args.data, profile.lexer, profile.substructure(Kind.TEMPLATE), strict=False)
    print(f"records: {len(pool)}")
    print(f"malformed lines: {len(report.malformed)}")
    for err in report.malformed[:20]:
        print(f"  {err}")
    print(f"parse failures: {len(report.parse_failures)}")
    for err in report.parse_failures[:20]:
        print(f"  {err}")
    ids = [r.id for r in pool]
    return 0 if report.ok and len(set(ids)) == len(ids) else 1


def cmd_stats(args, argv) -> int:
    profile = _profile(args)
    pool, _ = ingest(args.data, profile.lexer, profile.substructure(Kind.TEMPLATE),
                     strict=not args.lenient)
    if args.frequency_cap is not None:
        pool = filter_frequency_cap(pool, args.frequency_cap)
    d = args.d or profile.d
    result = stats(pool, profile.lexer, d=d)
    counts = result.as_dict()
    for name, value in counts.items():
        print(f"{name}: {value}")
    out = _out_dir(args)
    (out / "stats.json").write_text(json.dumps(counts, indent=2) + "\n", encoding="utf-8")
    config = _base_config(args, profile) | {"d": d}
    write_manifest(out, "stats", _argv_without_out(argv), config, {}, _inputs(args), ["stats.json"])
    return 0


def cmd_sample(args, argv) -> int:
    if args.budget < 0:
        raise CommandError("--budget must be >= 0")
    if args.preset == "random":
        profile, _, pool, _ = _load(args, Kind.TEMPLATE)
        result = sample_random(pool, args.budget, args.seed)
        sampler_cfg = {"preset": "random", "budget": args.budget, "seed": args.seed}
    else:
        kind = preset(args.preset, 0).substructure.kind
        profile, sub_cfg, pool, _ = _load(args, kind)
        cfg = preset(args.preset, args.budget, args.seed, d=sub_cfg.d)
        result = sample_diverse(build_index(pool), cfg, strategy=args.strategy)
        sampler_cfg = {"preset": args.preset} | cfg.to_dict()
    out = _out_dir(args)
    _write_ids(out / "ids.txt", result.ids)
    with open(out / "trace.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "substructure", "instance_id"])
        for it, key, rid in result.picks:
            writer.writerow([it, key or "", rid])
    print(f"sampled {len(result.ids)} of {len(pool)} instances -> {out}")
    config = _base_config(args, profile) | {"sampler": sampler_cfg}
    write_manifest(out, "sample", _argv_without_out(argv), config, {"sample": args.seed},
                   _inputs(args), ["ids.txt", "trace.csv"])
    return 0


def cmd_split(args, argv) -> int:
    profile, _, pool, _ = _load(args, Kind.SUBTREE if args.kind == "subtree" else Kind.TEMPLATE)
    spec = SplitSpec(SplitKind(args.kind), args.test_size, args.test_fraction, args.seed,
                     args.max_repair_rounds, args.d or profile.d)
    split = make_split(pool, spec, profile.lexer)
    out = _out_dir(args)
    _write_ids(out / "pool_ids.txt", split.pool)
    _write_ids(out / "test_ids.txt", split.test)
    print(f"{args.kind} split: pool {len(split.pool)}, test {len(split.test)} -> {out}")
    config = _base_config(args, profile) | {"split": spec.to_dict(), "provenance": split.provenance}
    write_manifest(out, "split", _argv_without_out(argv), config, {"split": args.seed},
                   _inputs(args), ["pool_ids.txt", "test_ids.txt"])
    return 0


def cmd_check_solvable(args, argv) -> int:
    from .splits import Split
    profile, _, pool, _ = _load(args, Kind.TEMPLATE)
    split_dir = Path(args.split)
    split = Split(tuple(_read_ids(split_dir / "pool_ids.txt")),
                  tuple(_read_ids(split_dir / "test_ids.txt")))
    known = {r.id for r in pool}
    unknown = [i for i in split.pool + split.test if i not in known]
    if unknown:
        raise CommandError(f"split mentions {len(unknown)} ids missing from the data, e.g. {unknown[0]!r}")
    report = check_solvable(split, pool)
    print(f"solvable: {'true' if report.ok else 'false'}")
    for tok, ids in sorted(report.missing.items()):
        print(f"  missing token {tok!r} in {len(ids)} test instances (e.g. {ids[0]})")
    out = _out_dir(args)
    result = {"solvable": report.ok, "missing": {tok: ids for tok, ids in sorted(report.missing.items())}}
    (out / "solvable.json").write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    write_manifest(out, "check-solvable", _argv_without_out(argv), _base_config(args, profile), {},
                   _inputs(args) + [split_dir / "pool_ids.txt", split_dir / "test_ids.txt"],
                   ["solvable.json"])
    return 0 if report.ok else 1


def _samples(args) -> dict[str, list[str]]:
    samples = {}
    for spec in args.sample:
        name, sep, path = spec.partition("=")
        if not sep or not name:
            raise CommandError(f"--sample expects NAME=PATH, got {spec!r}")
        samples[name] = _read_ids(path)
    return samples


def _sample_paths(args) -> list[str]:
    return [s.partition("=")[2] for s in args.sample]


def cmd_analyze_coverage(args, argv) -> int:
    kind = Kind(args.kind)
    profile, cfg, pool, _ = _load(args, kind)
    samples = _samples(args)
    edges = [float(x) for x in args.edges.split(",")] if args.edges else None
    report = coverage_buckets(samples, pool, edges=edges)
    out = _out_dir(args)
    (out / "coverage.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "coverage.json").write_text(json.dumps(report.summary(), indent=2) + "\n", encoding="utf-8")
    for name, total in report.totals.items():
        print(f"{name}: {total} of {report.pool_total} unique {kind.value} keys")
    config = _base_config(args, profile) | {"substructure": cfg.to_dict(), "edges": report.edges}
    write_manifest(out, "analyze-coverage", _argv_without_out(argv), config, {},
                   _inputs(args) + _sample_paths(args), ["coverage.csv", "coverage.json"])
    return 0


def cmd_analyze_ami(args, argv) -> int:
    kind = Kind(args.kind)
    profile, cfg, pool, _ = _load(args, kind)
    by_id = {r.id: r for r in pool}
    out = _out_dir(args)
    rows, summary, pair_rows = [], {}, []
    for name, ids in _samples(args).items():
        missing = [i for i in ids if i not in by_id]
        if missing:
            raise CommandError(f"sample {name!r} has ids not in the data, e.g. {missing[0]!r}")
        rep = pairwise_mi([by_id[i] for i in ids], include_diagonal=not args.no_diagonal,
                          top_k=args.top_k)
        rows.append([name, rep.n, len(rep.keys), repr(rep.ami)])
        summary[name] = {"instances": rep.n, "keys": len(rep.keys), "ami": rep.ami}
        pair_rows.extend([name, a, b, repr(v)] for a, b, v in rep.top_pairs)
        print(f"{name}: AMI {rep.ami:.6g} over {len(rep.keys)} keys, {rep.n} instances")
    with open(out / "ami.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample", "instances", "keys", "ami"])
        writer.writerows(rows)
    outputs = ["ami.csv", "ami.json"]
    if args.top_k:
        with open(out / "top_pairs.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["sample", "key_a", "key_b", "mi"])
            writer.writerows(pair_rows)
        outputs.append("top_pairs.csv")
    (out / "ami.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    config = _base_config(args, profile) | {"substructure": cfg.to_dict(),
                                            "include_diagonal": not args.no_diagonal}
    write_manifest(out, "analyze-ami", _argv_without_out(argv), config, {},
                   _inputs(args) + _sample_paths(args), outputs)
    return 0


def cmd_gen_pool(args, argv) -> int:
    if args.n < 0:
        raise CommandError("--n must be >= 0")
    if Path(args.grammar).is_file():
        grammar, inputs = ToyGrammar.load(args.grammar), [args.grammar]
    else:
        grammar, inputs = bundled_grammar(args.grammar), []
    rows = gen_pool(grammar, args.n, args.seed)
    out = _out_dir(args)
    write_pool(out / "pool.jsonl", rows)
    print(f"wrote {len(rows)} instances -> {out / 'pool.jsonl'}")
    write_manifest(out, "gen-pool", _argv_without_out(argv), {"grammar": args.grammar, "n": args.n},
                   {"gen-pool": args.seed}, inputs, ["pool.jsonl"])
    return 0


def cmd_reproduce(args, argv) -> int:
    manifest = read_manifest(args.manifest)
    for path, digest in manifest["inputs"].items():
        from .manifest import file_digest
        if file_digest(path) != digest:
            print(f"input changed since the run: {path}")
            return 1
    with tempfile.TemporaryDirectory() as tmp:
        status = main(manifest["argv"] + ["--out", tmp])
        if status != 0:
            return status
        fresh = read_manifest(Path(tmp) / "manifest.json")
    same = fresh["outputs"] == manifest["outputs"]
    for name, digest in manifest["outputs"].items():
        mark = "ok" if fresh["outputs"].get(name) == digest else "DIFFERS"
        print(f"{name}: {mark}")
    return 0 if same else 1


COMMANDS = {
    "ingest-check": cmd_ingest_check,
    "stats": cmd_stats,
    "sample": cmd_sample,
    "split": cmd_split,
    "check-solvable": cmd_check_solvable,
    "analyze-coverage": cmd_analyze_coverage,
    "analyze-ami": cmd_analyze_ami,
    "gen-pool": cmd_gen_pool,
    "reproduce": cmd_reproduce,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernels: %s", _backend.NAME)
    try:
        return COMMANDS[args.command](args, argv)
    except (StructDivError, OSError) as exc:
        print(f"structdiv: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
