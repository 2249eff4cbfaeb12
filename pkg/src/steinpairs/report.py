"""Tabular check reports with deterministic, re-parsable serialization."""

import json
from dataclasses import dataclass, field
from typing import Optional

COLUMNS = ("check", "value", "std_error", "reference_value", "tolerance",
           "verdict", "paper_ref")
FORMATS = ("tabular_text", "delimited_values", "structured_records")
PLUMBING = "plumbing"


def format_number(x: Optional[float]) -> str:
    """Deterministic float formatting; scientific below 1e-4 in magnitude."""
    if x is None:
        return ""
    x = float(x)
    if x != 0.0 and abs(x) < 1e-4:
        return f"{x:.6e}"
    return f"{x:.10g}"


@dataclass(frozen=True)
class CheckRow:
    check: str
    value: Optional[float]
    std_error: Optional[float] = None
    reference_value: Optional[float] = None
    tolerance: Optional[float] = None
    verdict: str = "info"  # pass | fail | info
    paper_ref: str = PLUMBING

    def cells(self) -> list[str]:
        return [self.check, format_number(self.value), format_number(self.std_error),
                format_number(self.reference_value), format_number(self.tolerance),
                self.verdict, self.paper_ref]


def check_row(check: str, value: float, reference: Optional[float], tol: float,
              ref_key: str, std_error: Optional[float] = None,
              passed: Optional[bool] = None) -> CheckRow:
    """Row whose verdict is |value - reference| <= tol unless overridden."""
    if passed is None:
        target = reference if reference is not None else 0.0
        passed = abs(value - target) <= tol
    return CheckRow(check, value, std_error, reference, tol,
                    "pass" if passed else "fail", ref_key)


def info_row(check: str, value: float, ref_key: str = PLUMBING,
             std_error: Optional[float] = None) -> CheckRow:
    return CheckRow(check, value, std_error, None, None, "info", ref_key)


@dataclass
class Report:
    title: str
    meta: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def extend(self, rows):
        self.rows.extend(rows)

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.rows if r.verdict == "fail")

    @property
    def passed(self) -> bool:
        return self.n_failed == 0


def _render_tabular(report: Report) -> str:
    lines = [f"# {report.title}"]
    for k, v in report.meta.items():
        lines.append(f"# {k} = {v}")
    table = [list(COLUMNS)] + [r.cells() for r in report.rows]
    widths = [max(len(row[c]) for row in table) for c in range(len(COLUMNS))]
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    lines.append(f"# failed = {report.n_failed} / {len(report.rows)}")
    return "\n".join(lines) + "\n"


def _render_delimited(report: Report) -> str:
    lines = [f"# {report.title}"]
    for k, v in report.meta.items():
        lines.append(f"# {k} = {v}")
    lines.append(",".join(COLUMNS))
    for r in report.rows:
        lines.append(",".join(r.cells()))
    return "\n".join(lines) + "\n"


def _render_records(report: Report) -> str:
    lines = [json.dumps({"title": report.title, "meta": report.meta}, sort_keys=True)]
    for r in report.rows:
        rec = dict(zip(COLUMNS, r.cells()))
        lines.append(json.dumps(rec, sort_keys=True))
    return "\n".join(lines) + "\n"


def render(report: Report, fmt: str = "tabular_text") -> str:
    if fmt == "tabular_text":
        return _render_tabular(report)
    if fmt == "delimited_values":
        return _render_delimited(report)
    if fmt == "structured_records":
        return _render_records(report)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def write_report(report: Report, path, fmt: str = "tabular_text") -> None:
    text = render(report, fmt)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def parse_delimited(text: str) -> list[dict]:
    """Parse delimited_values output back into row dictionaries."""
    rows = []
    header = None
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        cells = line.split(",")
        if header is None:
            header = cells
            if tuple(header) != COLUMNS:
                raise ValueError(f"unexpected header {header}")
            continue
        rows.append(dict(zip(header, cells)))
    return rows
