"""
Renders experiment summaries (``summary.csv``) as results tables, in the
``Methods | RSE | IT | CPU`` layout, as plain text or HTML.

Methods that did not converge in every trial are marked with ``>``: ``> 100000``
when every trial hit the iteration cap, a ``>`` prefix on the means otherwise.
"""

import dataclasses
from pathlib import Path
import sys
import textwrap
from typing import Iterable, List, Optional, Protocol, Sequence

from .utils.csvio import read_rows
from .utils.junkdrawer import method_label


class SummaryLike(Protocol):
    @property
    def label(self) -> str:
        ...

    trials: int
    mean_rse: float
    mean_it: float
    mean_cpu_s: float
    failures: int


@dataclasses.dataclass
class SummaryRow:
    label: str
    trials: int
    mean_rse: float
    mean_it: float
    mean_cpu_s: float
    failures: int


def read_summary(path: Path) -> List[SummaryRow]:
    rows = []
    for row in read_rows(path):
        rows.append(
            SummaryRow(
                label=method_label(
                    row["method"],
                    int(row["tau_a"]) if row["tau_a"] else None,
                    int(row["tau_b"]) if row["tau_b"] else None,
                ),
                trials=int(row["trials"]),
                mean_rse=float(row["mean_rse"]),
                mean_it=float(row["mean_it"]),
                mean_cpu_s=float(row["mean_cpu_s"]),
                failures=int(row["failures"]),
            )
        )
    return rows


def format_cells(summary: SummaryLike) -> List[str]:
    """[method, RSE, IT, CPU] cells of one table row."""
    rse = f"{summary.mean_rse:.2e}"
    if summary.failures == summary.trials:
        # failed runs stop at the cap, so their mean is the cap
        iterations = f"> {summary.mean_it:.0f}"
    elif summary.failures:
        iterations = f"> {summary.mean_it:.1f}"
        rse = f"> {rse}"
    else:
        iterations = f"{summary.mean_it:.1f}"
    return [summary.label, rse, iterations, f"{summary.mean_cpu_s:.4f}"]


HEADER = ["Methods", "RSE", "IT", "CPU"]


def render_text(summaries: Iterable[SummaryLike]) -> str:
    rows = [HEADER] + [format_cells(summary) for summary in summaries]
    widths = [max(len(row[i]) for row in rows) for i in range(len(HEADER))]
    lines = [
        " | ".join(cell.ljust(width) for (cell, width) in zip(row, widths)).rstrip()
        for row in rows
    ]
    lines.insert(1, "-+-".join("-" * width for width in widths))
    return "\n".join(lines)


def render_html(summaries: Iterable[SummaryLike]) -> str:
    head = "".join(f"<th>{cell}</th>" for cell in HEADER)
    body = "\n".join(
        "<tr>" + "".join(f"<td>{cell}</td>" for cell in format_cells(s)) + "</tr>"
        for s in summaries
    )
    return f"<table>\n<tr>{head}</tr>\n{body}\n</table>"


def main(filenames: Sequence[str], output: Optional[str] = None) -> int:
    if output == "text":
        for filename in filenames:
            print(f"{filename}:")
            print(textwrap.indent(render_text(read_summary(Path(filename))), "  "))
        return 0
    print("<ul>")
    for filename in filenames:
        table = textwrap.indent(render_html(read_summary(Path(filename))), "    ")
        print(
            f"<li>\n"
            f"  <details>\n"
            f"    <summary>{filename}</summary>\n"
            f"{table}\n"
            f"  </details>\n"
            f"</li>"
        )
    print("</ul>")
    return 0


if __name__ == "__main__":
    (_, *filenames) = sys.argv
    exit(main(filenames))
