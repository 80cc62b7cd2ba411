"""Deterministic CSV/JSON rendering for experiment reports.

CSV output is RFC-4180-style: comma-separated, one header row, LF line
endings, reals printed with 10 significant digits, missing values as
empty fields.  A metadata block (tool version, full config echo, seeds,
denominator mode) precedes the table as '# key=value' comment lines; the
JSON format carries the same block as a "metadata" object.  Identical
configs and seeds therefore produce byte-identical files.
"""

from __future__ import annotations

import json

#: Fixed column set per command; order is part of the output contract.
COLUMNS: dict[str, tuple[str, ...]] = {
    "analytic": (
        "geometry",
        "d",
        "n_nodes",
        "q",
        "analytic_routability",
        "analytic_failed_fraction",
        "error",
    ),
    "simulate": (
        "geometry",
        "d",
        "n_nodes",
        "q",
        "sim_routability",
        "sim_std_error",
        "hop_cap_hits",
        "seeds",
        "error",
    ),
    "compare": (
        "geometry",
        "d",
        "n_nodes",
        "q",
        "analytic_routability",
        "analytic_failed_fraction",
        "sim_routability",
        "sim_std_error",
        "abs_gap",
        "seeds",
        "error",
    ),
    "asymptotic": (
        "geometry",
        "d",
        "n_nodes",
        "q",
        "analytic_routability",
        "analytic_failed_fraction",
        "error",
    ),
    "scalability": (
        "geometry",
        "d",
        "q",
        "verdict",
        "limit_estimate",
        "sum_q_at_10",
        "sum_q_at_100",
        "sum_q_at_1000",
        "sum_q_at_10000",
        "p_at_10",
        "p_at_100",
        "p_at_1000",
        "p_at_10000",
        "decay_horizon",
        "error",
    ),
}


def format_value(value) -> str:
    """One CSV cell: empty for missing, 10 significant digits for reals."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    if isinstance(value, int):
        return str(value)
    text = str(value)
    if any(c in text for c in (",", '"', "\n")):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _format_metadata(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def render_csv(metadata: dict, columns: tuple[str, ...], rows: list[dict]) -> str:
    lines = [f"# {key}={_format_metadata(value)}" for key, value in metadata.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_value(row.get(col)) for col in columns))
    return "\n".join(lines) + "\n"


def render_json(metadata: dict, columns: tuple[str, ...], rows: list[dict]) -> str:
    payload = {
        "metadata": metadata,
        "columns": list(columns),
        "rows": [{col: row.get(col) for col in columns} for row in rows],
    }
    return json.dumps(payload, indent=2) + "\n"


def render(fmt: str, metadata: dict, columns: tuple[str, ...], rows: list[dict]) -> str:
    if fmt == "csv":
        return render_csv(metadata, columns, rows)
    if fmt == "json":
        return render_json(metadata, columns, rows)
    raise ValueError(f"unknown output format: {fmt}")
