"""Delimited reports and score figures.

Reports are TSV (one header line, one row per record) plus a PNG chart of
the same numbers. Figures render through the Agg backend with the date
metadata stripped, so report artifacts are byte-reproducible.
"""

from __future__ import annotations

import io
from pathlib import Path

from ..errors import ConfigError


def format_row(values) -> str:
    return "\t".join(str(v) for v in values)


def tsv_bytes(header, rows) -> bytes:
    lines = [format_row(header)]
    width = len(tuple(header))
    for row in rows:
        row = tuple(row)
        if len(row) != width:
            raise ConfigError(f"row width {len(row)} does not match header width {width}")
        lines.append(format_row(row))
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_tsv(path, header, rows) -> None:
    Path(path).write_bytes(tsv_bytes(header, rows))


def score_figure_bytes(series: dict, title: str, xlabel: str, ylabel: str) -> bytes:
    """Line chart of named score series over shared x labels, as PNG bytes.

    `series` maps a legend label to a list of (x label, score) points.
    """
    # matplotlib loads lazily so import cost is only paid on the report path
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not series:
        raise ConfigError("a score figure needs at least one series")
    fig, ax = plt.subplots(figsize=(7, 4))
    try:
        for label in sorted(series):
            points = list(series[label])
            ax.plot([x for x, _ in points], [y for _, y in points],
                    marker="o", label=label)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="png", metadata={"Date": None})
        return buf.getvalue()
    finally:
        plt.close(fig)


def write_score_figure(path, series: dict, title: str, xlabel: str, ylabel: str) -> None:
    Path(path).write_bytes(score_figure_bytes(series, title, xlabel, ylabel))
