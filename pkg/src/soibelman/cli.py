"""Command-line frontend: ``artifact {weyl,module,rep,verify,scan-q,report}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

from . import cache, report
from .config import EXAMPLE_YAML, ConfigError, RunConfig, load_config, parse_tolerance
from .qmodule import ModuleBuildError, build_module, relation_residuals
from .reps import SoibelmanRep, fundamental_coefficient
from .verify import DEFAULT_TOLERANCES, SELECTORS, continuity_scan, overall_exit, plan_jobs, run_jobs
from .weyl import RootSystemError, load_group

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tolerance_help() -> str:
    return "; ".join(f"{k}={v:g}" for k, v in DEFAULT_TOLERANCES.items())


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run configuration (see `artifact verify --help`)")
    p.add_argument("--group", help="Cartan type such as A2, B2, G2 (default A2)")
    p.add_argument("--q", action="append", help="deformation parameter(s) in (0,1); repeat or comma-separate (default 0.5)")
    p.add_argument("--cutoff", type=int, help="Fock cutoff N per factor, >= 8 (default 24)")
    p.add_argument("--tolerance", action="append", default=[], metavar="NAME=VAL",
                   help="override a tolerance; defaults: " + _tolerance_help())
    p.add_argument("--jobs", type=int, default=1, help="parallel verifier processes (default 1)")
    p.add_argument("--output", help="report directory (default reports)")
    p.add_argument("--cache", help="module cache root (default $ARTIFACT_CACHE_DIR or ~/.cache/artifact)")
    p.add_argument("--seed", type=int, help="seed for sampled elements (default 0)")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format (default json)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="artifact", description="Truncated Soibelman representations and their numerical checks.",
                     epilog="Config file template:\n" + EXAMPLE_YAML, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("weyl", help="Weyl group tables: elements, lengths, Bruhat order, covers, paths, tori")
    _common(p)

    p = sub.add_parser("module", help="build V_λ^q and report weights and relation residuals")
    _common(p)
    p.add_argument("--weight", required=True, help="highest weight in fundamental-weight coordinates, e.g. 1,1")

    p = sub.add_parser("rep", help="describe π_w and the norms of fundamental coefficient images")
    _common(p)
    p.add_argument("--word", required=True, help="reduced word with 1-based simple reflections, e.g. 1,2,1")

    p = sub.add_parser("verify", help="run verifier checks; exit 0 pass, 1 fail, 2 inconclusive, 64 usage",
                       epilog="Config file template:\n" + EXAMPLE_YAML, formatter_class=argparse.RawDescriptionHelpFormatter)
    _common(p)
    p.add_argument("selector", nargs="?", default="all", choices=("all",) + SELECTORS)

    p = sub.add_parser("scan-q", help="continuity scan of a fixed-label coefficient over a q grid")
    _common(p)
    p.add_argument("--weight", default=None, help="highest weight (default ω1)")
    p.add_argument("--word", default=None, help="1-based reduced word (default longest element)")
    p.add_argument("--labels", default="0,0", help="weight-basis labels a,b of C_{e_a,e_b} (default 0,0)")
    p.add_argument("--grid", default="0.2:0.8:0.05", help="start:stop:step or comma list (default 0.2:0.8:0.05)")
    p.add_argument("--refine", action="store_true", help="also scan at half step and attach the refinement ratio")

    p = sub.add_parser("report", help="summarize or convert a JSON-lines report")
    _common(p)
    p.add_argument("input", help="path to a .jsonl report")
    return parser


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _grid(text: str) -> list[float]:
    try:
        if ":" in text:
            a, b, h = (float(x) for x in text.split(":"))
            n = int(round((b - a) / h))
            return [round(a + k * h, 10) for k in range(n + 1)]
        return [float(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}") from exc


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    qs = None
    if args.q:
        qs = tuple(float(x) for item in args.q for x in item.split(",") if x.strip())
        if not qs:
            raise ConfigError("q_values must be non-empty")
    tolerances = dict(parse_tolerance(t) for t in args.tolerance) or None
    return cfg.with_overrides(group=args.group, q_values=qs, cutoff=args.cutoff, output_dir=args.output,
                              cache_dir=args.cache, seed=args.seed, tolerances=tolerances)


def _emit(data, fmt: str, rows=None) -> None:
    if fmt == "csv" and rows is not None:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_weyl(cfg: RunConfig, fmt: str) -> int:
    G = load_group(cfg.group_spec)
    tables = G.tables()
    labels = [g.label for g in G]
    rows = [["v\\w"] + labels] + [[v] + [int(x) for x in row] for v, row in zip(labels, G.bruhat_matrix())]
    _emit(tables, fmt, rows)
    return EXIT_PASS


def cmd_module(cfg: RunConfig, weight: str, fmt: str) -> int:
    G = load_group(cfg.group_spec)
    out, rows = [], [["q", "dimension", "relation", "residual"]]
    for q in cfg.q_values:
        m = build_module(G.rs, q, _ints(weight))
        res = relation_residuals(m)
        out.append({"q": q, "label": m.label, "dimension": m.dimension,
                    "multiplicities": {",".join(map(str, k)): v for k, v in sorted(m.multiplicities().items())},
                    "relation_residuals": res})
        rows += [[q, m.dimension, k, repr(v)] for k, v in res.items()]
    _emit(out, fmt, rows)
    return EXIT_PASS


def cmd_rep(cfg: RunConfig, word: str, fmt: str) -> int:
    G = load_group(cfg.group_spec)
    w = tuple(i - 1 for i in _ints(word))
    if any(i < 0 or i >= G.rs.rank for i in w):
        raise UsageError(f"word letters must lie in 1..{G.rs.rank}")
    rep = SoibelmanRep(G, w, cfg.cutoff)
    out, rows = [], [["q", "module", "a", "b", "norm"]]
    for q in cfg.q_values:
        norms = {}
        for i in range(G.rs.rank):
            m = build_module(G.rs, q, tuple(int(i == j) for j in range(G.rs.rank)))
            for a in range(m.dimension):
                for b in range(m.dimension):
                    X = rep(fundamental_coefficient(m, a, b))
                    val = abs(complex(X.matrix[0, 0])) if X.factors == 0 else X.guard_norm()
                    norms[f"{m.label}[{a},{b}]"] = val
                    rows.append([q, m.label, a, b, repr(val)])
        out.append({"handle": rep.handle(q).to_json(), "element": rep.element.label,
                    "guard_band_norms": norms})
    _emit(out, fmt, rows)
    return EXIT_PASS


def cmd_verify(cfg: RunConfig, selector: str, jobs: int, fmt: str) -> int:
    all_jobs = []
    for q in cfg.q_values:
        planned = plan_jobs(selector, cfg.group_spec, q, cfg.cutoff, cfg.seed, cfg.tolerances)
        for j in planned:
            if len(cfg.q_values) > 1:
                object.__setattr__(j, "check_id", f"q={q}:{j.check_id}")
            all_jobs.append(j)
    reports = run_jobs(all_jobs, workers=max(1, jobs))
    jl, cs = report.write_reports(reports, cfg.output_dir)
    if fmt == "csv":
        sys.stdout.write(report.to_csv(reports))
    else:
        sys.stdout.write(report.summarize(report.read_jsonl(jl)) + "\n")
    return overall_exit(reports)


def cmd_scan_q(cfg: RunConfig, args) -> int:
    G = load_group(cfg.group_spec)
    grid = _grid(args.grid)
    if len(grid) < 3:
        raise UsageError("a continuity scan needs at least three grid points")
    if any(not 0 < q < 1 for q in grid):
        raise UsageError("grid points must lie in (0, 1)")
    lam = _ints(args.weight) if args.weight else tuple(int(i == 0) for i in range(G.rs.rank))
    word = tuple(i - 1 for i in _ints(args.word)) if args.word else G.longest.word
    labels = _ints(args.labels)
    rep = continuity_scan(cfg.group_spec, lam, word, labels, grid, N=cfg.cutoff,
                          refine=args.refine, tol=cfg.tolerances)
    report.write_reports([rep], cfg.output_dir, stem="scan-q")
    if args.format == "csv":
        rows = [["q_left", "q_right", "difference"]]
        rows += [[a, b, d] for a, b, d in zip(grid, grid[1:], rep.details["step_differences"])]
        _emit(None, "csv", rows)
    else:
        _emit(report.record(rep), "json")
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(rep.verdict, EXIT_INCONCLUSIVE)


def cmd_report(args) -> int:
    records = report.read_jsonl(args.input)
    if args.format == "csv":
        rows = [["check_id", "verdict", "residual", "value"]]
        for r in records:
            rows += [[r["check_id"], r["verdict"], k, v] for k, v in r["residuals"].items()]
        _emit(None, "csv", rows)
    else:
        sys.stdout.write(report.summarize(records) + "\n")
    verdicts = {r["verdict"] for r in records}
    return EXIT_FAIL if "fail" in verdicts else EXIT_INCONCLUSIVE if "inconclusive" in verdicts else EXIT_PASS


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args)
        cfg = resolve_config(args)
        load_group(cfg.group_spec)
        cache.enable(cfg.cache_root)
        if args.command == "weyl":
            return cmd_weyl(cfg, args.format)
        if args.command == "module":
            return cmd_module(cfg, args.weight, args.format)
        if args.command == "rep":
            return cmd_rep(cfg, args.word, args.format)
        if args.command == "verify":
            return cmd_verify(cfg, args.selector, args.jobs, args.format)
        if args.command == "scan-q":
            return cmd_scan_q(cfg, args)
    except (UsageError, ConfigError, RootSystemError, KeyError, FileNotFoundError) as exc:
        print(f"artifact: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModuleBuildError, ValueError) as exc:
        print(f"artifact: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        cache.disable()
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
