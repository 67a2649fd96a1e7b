"""Command-line interface.

Subcommands:
    render      classify a grid, write a PPM image plus a JSON report
    classify    classify a grid, write a JSON report
    components  classification plus connected-component analysis
    hyperbolic  post-singular cloud vs Julia pixel separation
    verify      run a named experiment suite, exit 0 iff all checks pass
    parse-check parse an expression and print its canonical form

Exit codes: 0 success, 1 verify check failure, 2 config/parse/IO error.
Worker count comes from the SEMIDYN_THREADS environment variable and
never changes results, only wall time.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import expr as ex
from .config import ConfigError, RunConfig, load_config, with_grid
from .escape import classify_grid, julia_pixels
from .experiments import EXPERIMENTS, run_experiment
from .reports import (
    build_report,
    classification_summary,
    components_section,
    hyperbolicity_section,
    write_ppm,
    write_report,
)
from .singular import hyperbolicity_check
from .topology import connected_components, unboundedness_report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semidyn",
        description="escaping-set and post-singular analysis for "
                    "finitely generated entire semigroups",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p: argparse.ArgumentParser, image: bool) -> None:
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--report", help="JSON report path (overrides config)")
        p.add_argument("--resolution", type=int,
                       help="override grid resolution (nx = ny = N)")
        if image:
            p.add_argument("--out", help="PPM image path (overrides config)")
            p.add_argument("--julia", choices=["none", "closure", "boundary"],
                           default="none", help="overlay a Julia pixel mask")

    add_run_flags(sub.add_parser("render", help="write image and report"), image=True)
    add_run_flags(sub.add_parser("classify", help="write report only"), image=False)
    add_run_flags(sub.add_parser("components",
                                 help="report with component analysis"), image=False)
    add_run_flags(sub.add_parser("hyperbolic",
                                 help="report with hyperbolicity verdict"), image=False)

    v = sub.add_parser("verify", help="run a named experiment suite")
    v.add_argument("experiment", choices=sorted(EXPERIMENTS))
    v.add_argument("--config", help="override the built-in experiment config")
    v.add_argument("--report", help="write the JSON report here")

    p = sub.add_parser("parse-check", help="parse and echo an expression")
    p.add_argument("expression")
    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "resolution", None):
        cfg = with_grid(cfg, args.resolution)
    return cfg


def _report_path(args: argparse.Namespace, cfg: RunConfig) -> str | None:
    if getattr(args, "report", None):
        return args.report
    return cfg.report_path


def _emit(report: dict, path: str | None, started: float) -> None:
    if path:
        write_report(path, report, started)
        print(f"report: {path}")


def _cmd_render(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg = _load(args)
    cls = classify_grid(cfg.semigroup(), cfg.grid, cfg.orbit,
                        cfg.max_word_length, cfg.word_cap)
    comps = connected_components(cls.escaping_mask(), connectivity=4)
    summary = unboundedness_report(comps, cls.grid)
    report = build_report(
        config=cfg.effective_dict(),
        classification=classification_summary(cls),
        components=components_section(comps, summary, connectivity=4),
    )
    image_path = args.out or cfg.image_path
    if not image_path:
        raise ConfigError("render needs --out or an [output] image path")
    mask = julia_pixels(cls, args.julia) if args.julia != "none" else None
    write_ppm(image_path, cls, mask)
    print(f"image: {image_path}")
    _emit(report, _report_path(args, cfg) or str(Path(image_path).with_suffix(".json")),
          started)
    print(f"pixels: {cls.stats['total']}, escaping: {cls.stats['escaping']}, "
          f"components: {summary.total_components}")
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg = _load(args)
    cls = classify_grid(cfg.semigroup(), cfg.grid, cfg.orbit,
                        cfg.max_word_length, cfg.word_cap)
    report = build_report(config=cfg.effective_dict(),
                          classification=classification_summary(cls))
    _emit(report, _report_path(args, cfg), started)
    c = cls.stats
    print(f"escaping: {c['escaping']}, non-escaping: {c['non_escaping']}, "
          f"indeterminate: {c['indeterminate']} of {c['total']}")
    return 0


def _cmd_components(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg = _load(args)
    cls = classify_grid(cfg.semigroup(), cfg.grid, cfg.orbit,
                        cfg.max_word_length, cfg.word_cap)
    comps = connected_components(cls.escaping_mask(), connectivity=4)
    summary = unboundedness_report(comps, cls.grid)
    report = build_report(
        config=cfg.effective_dict(),
        classification=classification_summary(cls),
        components=components_section(comps, summary, connectivity=4),
    )
    _emit(report, _report_path(args, cfg), started)
    print(f"components: {summary.total_components}, "
          f"frame-touching: {summary.frame_touching}, "
          f"interior: {summary.interior_count}")
    return 0


def _cmd_hyperbolic(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg = _load(args)
    rep = hyperbolicity_check(cfg.semigroup(), cfg.grid, cfg.orbit,
                              cfg.max_word_length,
                              separation_pixels=cfg.separation_pixels,
                              word_cap=cfg.word_cap)
    report = build_report(config=cfg.effective_dict(),
                          hyperbolicity=hyperbolicity_section(rep))
    _emit(report, _report_path(args, cfg), started)
    sep = "inf" if rep.separation is None or rep.separation == float("inf") \
        else f"{rep.separation:.6g}"
    print(f"verdict: {rep.verdict.value} "
          f"(separation {sep}, threshold {rep.threshold:.6g})")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg = load_config(args.config) if args.config else None
    result = run_experiment(args.experiment, cfg)
    for line in result.summary_lines():
        print(line)
    _emit(result.report, args.report, started)
    n = len(result.checks)
    n_pass = sum(c.passed for c in result.checks)
    print(f"{result.name}: {n_pass}/{n} checks passed")
    return 0 if result.passed else 1


def _cmd_parse_check(args: argparse.Namespace) -> int:
    parsed = ex.parse(args.expression)
    normalized = ex.normalize(parsed)
    print(f"canonical: {ex.format_expr(parsed)}")
    print(f"nodes: {ex.node_count(normalized)}")
    print(f"transcendental: {str(ex.is_transcendental(parsed)).lower()}")
    return 0


_COMMANDS = {
    "render": _cmd_render,
    "classify": _cmd_classify,
    "components": _cmd_components,
    "hyperbolic": _cmd_hyperbolic,
    "verify": _cmd_verify,
    "parse-check": _cmd_parse_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ex.ParseError as err:
        print(f"parse error at position {err.position}: {err}", file=sys.stderr)
        return 2
    except (ConfigError, ex.ExprError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
