"""Matplotlib rendering of the harness CSVs into the evaluation figures.

Rendering is a pure function of the CSV bytes and the job options: the
Agg backend, a pinned SVG hash salt and stripped date metadata keep the
output bytes identical across reruns.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .schemas import (FIGURES, STRATEGY_LABELS, SchemaError,  # noqa: E402
                      Table, check_input_count, load_table)

FORMATS = ("png", "svg")

_COOP_LABEL = "Cooperation probability"
_RELATIVE_LABEL = "Relative utility"
_ROUND_LABEL = "Round"


@dataclass(frozen=True)
class FigureJob:
    """One rendering task: inputs, figure id, output path, style knobs."""

    figure: str
    inputs: tuple[str, ...]
    output: str | Path
    fmt: str | None = None       # default: from the output suffix, else png
    dpi: int = 150
    title: str | None = None
    legend_labels: dict = field(default_factory=lambda: dict(STRATEGY_LABELS))

    def resolved_format(self) -> str:
        if self.fmt:
            fmt = self.fmt.lower()
        else:
            suffix = Path(self.output).suffix.lstrip(".").lower()
            fmt = suffix or "png"
        if fmt not in FORMATS:
            raise SchemaError(f"unsupported format {fmt!r}; use png or svg")
        return fmt


def _panel_title(path: Path) -> str:
    stem = path.stem
    match = re.search(r"q0_([0-9.]+)", stem)
    if match:
        return f"q0 = {match.group(1)}"
    match = re.search(r"chi([0-9p.]+)", stem)
    if match:
        return "chi = " + match.group(1).replace("p", ".")
    for key, label in STRATEGY_LABELS.items():
        if stem.endswith(key):
            return label
    return stem


def _grid(count: int) -> tuple[int, int]:
    if count == 1:
        return 1, 1
    if count == 2:
        return 1, 2
    return 2, 2


def _line_panels(tables: list[Table], series_of, y_label: str,
                 job: FigureJob) -> plt.Figure:
    rows, cols = _grid(len(tables))
    fig, axes = plt.subplots(rows, cols,
                             figsize=(4.2 * cols, 3.2 * rows),
                             squeeze=False)
    flat = axes.ravel()
    for ax in flat[len(tables):]:
        ax.set_visible(False)
    for ax, table in zip(flat, tables):
        for label, ys in series_of(table):
            ax.plot(table.columns["round"], ys, linewidth=1.6, label=label)
        ax.set_xlabel(_ROUND_LABEL)
        ax.set_ylabel(y_label)
        ax.set_title(_panel_title(table.path))
        ax.legend(fontsize=8)
    return fig


def _grouped_bars(table: Table, x_key: str, x_labels, job: FigureJob):
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    positions = range(len(x_labels))
    width = 0.38
    server = table.columns["server"]
    device = table.columns["device"]
    ax.bar([p - width / 2 for p in positions], server, width, label="Server")
    ax.bar([p + width / 2 for p in positions], device, width, label="Device")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(x_labels)
    ax.set_ylabel(_RELATIVE_LABEL)
    ax.legend(fontsize=8)
    return fig


def _build_figure(job: FigureJob, tables: list[Table]) -> plt.Figure:
    labels = job.legend_labels
    if job.figure == "fig2":
        return _line_panels(
            tables,
            lambda t: [(labels.get(k, k), t.columns[k])
                       for k in ("ce", "allc", "alld", "tft", "wsls")],
            _COOP_LABEL, job)
    if job.figure == "fig3":
        names = [labels.get(s, s) for s in tables[0].columns["strategy"]]
        return _grouped_bars(tables[0], "strategy", names, job)
    if job.figure == "fig4":
        names = [f"{q:g}" for q in tables[0].columns["q0"]]
        fig = _grouped_bars(tables[0], "q0", names, job)
        fig.axes[0].set_xlabel("Initial cooperation probability")
        return fig
    if job.figure == "fig7":
        table = tables[0]
        fig, ax = plt.subplots(figsize=(5.4, 3.4))
        for name in table.header[1:]:
            ax.plot(table.columns["round"], table.columns[name],
                    linewidth=1.6, label="chi = " + name[3:])
        ax.set_xlabel(_ROUND_LABEL)
        ax.set_ylabel(_COOP_LABEL)
        ax.legend(fontsize=8)
        return fig
    # fig5 / fig6 / fig8: server and device relative-utility panels
    return _line_panels(
        tables,
        lambda t: [("Server", t.columns["server"]),
                   ("Device", t.columns["device"])],
        _RELATIVE_LABEL, job)


def render(job: FigureJob) -> Path:
    """Render one figure job and return the written image path."""
    if job.figure not in FIGURES:
        raise SchemaError(f"unknown figure id {job.figure!r}; "
                          f"choose from {sorted(FIGURES)}")
    fmt = job.resolved_format()
    check_input_count(job.figure, len(job.inputs))
    tables = [load_table(job.figure, path) for path in job.inputs]

    plt.rcParams["svg.hashsalt"] = "fel-figures"
    fig = _build_figure(job, tables)
    if job.title:
        fig.suptitle(job.title)
    fig.tight_layout()

    output = Path(job.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if fmt == "svg" else None
    try:
        fig.savefig(output, format=fmt, dpi=job.dpi, metadata=metadata)
    finally:
        plt.close(fig)
    return output
