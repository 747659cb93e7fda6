"""Command-line entry point: ``vvbmo <study> [options]``.

Exit status is 0 when every gate of the study passes, 1 when some gate
fails (the failing gate names are printed to stderr as JSON), and 2 for an
invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .config import STUDIES, ConfigError, StudyConfig, dumps
from .studies import _STUDY_DEFAULTS, run_study


def _floats(text: str) -> list[float]:
    return [float(x) if x.lower() not in ("inf", "infinity") else "inf" for x in text.split(",") if x]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _space(text: str) -> tuple[str, int]:
    try:
        p, d = text.split(",")
        return p, int(d)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--space expects 'p,d', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; command-line flags override its fields")
    common.add_argument("--out", help="write the JSON report here and the rows next to it as .csv")
    common.add_argument("--seed", type=int, help="base seed for corpus generation")
    common.add_argument("--grid-j", type=int, help="pole-grid depth (Möbius: radial panels)")
    common.add_argument("--grid-m", type=int, help="minimum angular nodes")
    common.add_argument("--depth", type=int, help="arc-grid depth")
    common.add_argument("--q", type=_floats, help="comma-separated exponents q")
    common.add_argument("--p", type=_floats, help="comma-separated L^p exponents (cotype study)")
    common.add_argument("--space", type=_space, help="target space as 'p,d', e.g. 'inf,4'")
    common.add_argument("--refine", type=int, help="number of resolution levels (>= 2)")
    common.add_argument("--count", type=int, help="corpus size per cell")
    common.add_argument("--degrees", type=_ints, help="comma-separated polynomial degrees")
    common.add_argument("--dims", type=_ints, help="comma-separated dimensions")
    common.add_argument("--quiet", action="store_true", help="print only the gate summary")

    parser = argparse.ArgumentParser(prog="vvbmo", description="Run a numerical study and check its gates.")
    sub = parser.add_subparsers(dest="study", required=True)
    for name in STUDIES:
        sub.add_parser(name, parents=[common], help=f"run the {name} study")
    return parser


def config_from_args(args: argparse.Namespace) -> StudyConfig:
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        doc.setdefault("study", args.study)
        if doc["study"] != args.study:
            raise ConfigError(f"config is for study {doc['study']!r}, not {args.study!r}")
    else:
        doc = {"study": args.study, **_STUDY_DEFAULTS.get(args.study, {})}
    simple = {"grid_j": args.grid_j, "grid_m": args.grid_m, "depth": args.depth, "refine": args.refine,
              "count": args.count, "degrees": args.degrees, "dims": args.dims, "q": args.q, "out": args.out,
              "p_exponents": args.p}
    doc.update({k: v for k, v in simple.items() if v is not None})
    if args.seed is not None:
        doc["seeds"] = [args.seed]
    if args.space is not None:
        doc["p"], doc["d"] = args.space
        if args.study == "moduli":
            doc["spaces"] = [[args.space[0], args.space[1]]]
    return StudyConfig.from_dict(doc)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        t0 = time.perf_counter()
        report = run_study(config)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 2
    elapsed = time.perf_counter() - t0
    if config.out:
        json_path, csv_path = report.write(config.out)
        print(f"wrote {json_path} and {csv_path}")
    if not args.quiet:
        print(dumps(report.summary))
    for g in report.gates:
        flag = " (flagged: verdict differs between resolutions)" if g.flagged else ""
        print(f"[{'PASS' if g.passed else 'FAIL'}] {g.name}: {g.value:.6g} {g.comparison} {g.threshold:g}{flag}")
    print(f"{config.study}: {'all gates passed' if report.passed else 'gates failed'} in {elapsed:.1f}s")
    if not report.passed:
        print(json.dumps({"failures": report.failures}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
