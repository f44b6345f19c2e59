"""Command line: render one figure, or everything a run directory holds.

    fel-figures fig2 --input fig2_q0_0.10.csv ... --output fig2.png
    fel-figures all --input <experiment outdir> --output <image dir>

Exit codes: 0 on success, 1 on schema violations or unreadable inputs,
2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FORMATS, FigureJob, render
from .schemas import FIGURES, SchemaError

# Filename patterns emitted by the engine's experiment scenarios.
_DIRECTORY_PATTERNS = (
    ("fig2", "fig2_q0_*.csv"),
    ("fig3", "fig3_stable_relative_utilities.csv"),
    ("fig4", "fig4_stable_by_q0.csv"),
    ("fig5", "fig5_q0_*.csv"),
    ("fig6", "fig6_*.csv"),
    ("fig7", "fig7_coop_by_chi.csv"),
    ("fig8", "fig8_chi*.csv"),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fel-figures",
        description="Render simulation CSVs into the evaluation figures.",
    )
    parser.add_argument("figure", choices=sorted(FIGURES) + ["all"],
                        help="figure id, or 'all' to scan a run directory")
    parser.add_argument("--input", nargs="+", required=True,
                        help="input CSV file(s); a directory for 'all'")
    parser.add_argument("--output", required=True,
                        help="output image path; a directory for 'all'")
    parser.add_argument("--format", choices=FORMATS, default=None,
                        help="default: from the output suffix, else png")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--title", default=None)
    return parser


def _render_directory(args) -> int:
    if len(args.input) != 1:
        raise SchemaError("'all' takes exactly one input directory")
    indir = Path(args.input[0])
    if not indir.is_dir():
        raise SchemaError(f"{indir} is not a directory")
    outdir = Path(args.output)
    fmt = args.format or "png"
    rendered = 0
    for figure, pattern in _DIRECTORY_PATTERNS:
        inputs = sorted(indir.glob(pattern))
        if not inputs:
            continue
        job = FigureJob(figure=figure,
                        inputs=tuple(str(p) for p in inputs[:4]),
                        output=outdir / f"{figure}.{fmt}",
                        fmt=fmt, dpi=args.dpi)
        print(render(job))
        rendered += 1
    if rendered == 0:
        raise SchemaError(f"no renderable CSVs found in {indir}")
    return 0


def cli_dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        if args.figure == "all":
            return _render_directory(args)
        job = FigureJob(figure=args.figure, inputs=tuple(args.input),
                        output=args.output, fmt=args.format, dpi=args.dpi,
                        title=args.title)
        print(render(job))
        return 0
    except (SchemaError, FileNotFoundError, OSError) as exc:
        print(f"fel-figures: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
