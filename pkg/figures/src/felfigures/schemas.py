"""Documented CSV schemas of the simulation harness, mirrored here.

This package talks to the engine only through its files, so the expected
headers are restated rather than imported.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path


class SchemaError(Exception):
    """The CSV does not match the documented schema for the figure."""


STRATEGY_LABELS = {
    "ce": "CE",
    "allc": "ALLC",
    "alld": "ALLD",
    "tft": "TFT",
    "wsls": "WSLS",
}

# figure id -> (exact header or None for the chi-sweep check,
#               min inputs, max inputs)
FIGURES = {
    "fig2": (["round", "ce", "allc", "alld", "tft", "wsls"], 1, 4),
    "fig3": (["strategy", "server", "device"], 1, 1),
    "fig4": (["q0", "server", "device"], 1, 1),
    "fig5": (["round", "server", "device"], 1, 4),
    "fig6": (["round", "server", "device"], 1, 4),
    "fig7": (None, 1, 1),
    "fig8": (["round", "server", "device"], 1, 4),
}


@dataclass(frozen=True)
class Table:
    """One parsed CSV: header plus float columns (strings for fig3)."""

    path: Path
    header: list[str]
    columns: dict[str, list]


def _validate_header(figure: str, header: list[str]) -> None:
    expected, _, _ = FIGURES[figure]
    if expected is not None:
        if header != expected:
            raise SchemaError(
                f"{figure} expects columns {expected}, got {header}"
            )
        return
    # fig7: a round column followed by one series per extortion factor.
    if len(header) < 2 or header[0] != "round" \
            or not all(c.startswith("chi") and len(c) > 3 for c in header[1:]):
        raise SchemaError(
            f"fig7 expects columns ['round', 'chi<value>', ...], got {header}"
        )


def load_table(figure: str, path) -> Table:
    """Parse and validate one input CSV for the given figure id."""
    if figure not in FIGURES:
        raise SchemaError(f"unknown figure id {figure!r}; "
                          f"choose from {sorted(FIGURES)}")
    path = Path(path)
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise SchemaError(f"{path} is empty")
    header = rows[0]
    _validate_header(figure, header)
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path} has a header but no data rows")
    if any(len(row) != len(header) for row in body):
        raise SchemaError(f"{path} has ragged rows")

    columns: dict[str, list] = {name: [] for name in header}
    text_columns = {"strategy"}
    for row in body:
        for name, value in zip(header, row):
            if name in text_columns:
                columns[name].append(value)
            else:
                try:
                    columns[name].append(float(value))
                except ValueError:
                    raise SchemaError(
                        f"{path}: column {name!r} holds non-numeric "
                        f"value {value!r}"
                    ) from None
    return Table(path=path, header=header, columns=columns)


def check_input_count(figure: str, count: int) -> None:
    _, lo, hi = FIGURES[figure]
    if not lo <= count <= hi:
        raise SchemaError(
            f"{figure} takes between {lo} and {hi} input CSVs, got {count}"
        )
