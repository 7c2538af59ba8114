"""Result tables in csv, markdown or JSON-lines.

Column order is fixed. Rates are printed with 3 decimals, other statistics
with 6 significant digits, and an unavailable value as ``-``.
"""

import csv
import io
import json

SIM_COLUMNS = ("scenario_id", "n", "p", "covariance", "coefficients", "form",
               "rejection_rate", "binomial_se", "reps", "engine", "augment_d",
               "failures", "mean_T", "mean_active")
AUGMENT_COLUMNS = ("d", "engine", "rejection_rate", "binomial_se", "reps",
                   "failures", "mean_T", "mean_active")
FORMATS = ("csv", "markdown", "json_lines")
MISSING = "-"


def fmt_rate(x):
    return MISSING if x is None else f"{x:.3f}"


def fmt_stat(x):
    return MISSING if x is None else f"{x:.6g}"


def simulation_record(report):
    s = report.scenario
    return {
        "scenario_id": s.id,
        "n": str(s.n),
        "p": str(s.p_total),
        "covariance": s.covariance.label,
        "coefficients": s.coefficients.kind,
        "form": s.form,
        "rejection_rate": fmt_rate(report.rejection_rate),
        "binomial_se": fmt_stat(report.binomial_se),
        "reps": str(report.reps_completed),
        "engine": s.engine,
        "augment_d": str(s.augment_d or 0),
        "failures": str(report.failures),
        "mean_T": fmt_stat(report.mean_T),
        "mean_active": fmt_stat(report.mean_active),
    }


def augment_record(d, engine, report):
    return {
        "d": str(d),
        "engine": engine,
        "rejection_rate": fmt_rate(report.rejection_rate),
        "binomial_se": fmt_stat(report.binomial_se),
        "reps": str(report.reps_completed),
        "failures": str(report.failures),
        "mean_T": fmt_stat(report.mean_T),
        "mean_active": fmt_stat(report.mean_active),
    }


def render(records, columns, fmt="csv"):
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(records)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(columns) + " |",
                 "|" + "|".join("---" for _ in columns) + "|"]
        lines += ["| " + " | ".join(r[c] for c in columns) + " |" for r in records]
        return "\n".join(lines) + "\n"
    if fmt == "json_lines":
        return "".join(json.dumps({c: r[c] for c in columns}) + "\n" for r in records)
    raise ValueError(f"unknown format {fmt!r}")


def parse_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def parse_json_lines(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]
