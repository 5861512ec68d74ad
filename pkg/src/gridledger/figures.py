"""Figure aggregates computed from an exported dataset CSV.

Each aggregate is written as CSV (and for most, a deterministic SVG
summary), so external tools can reproduce every number from the dataset
file alone.  F9-F11 export raw point data without rendering.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import svg
from .pipeline import compute_cost_per_unit, extract_time_features
from .simgen import load_dataset_csv
from .timeutil import iso_utc

NUMERIC_COLUMNS = ("electricity_quantity", "price_per_mwh", "total_cost",
                   "latency_ms", "zt_authentication", "cost_per_unit")
ROLES = ("Authority", "Dealer", "Supplier", "Consumer")
TYPES = ("Buy", "Sell", "Unknown")
STATUSES = ("Failed", "Pending", "Success")
SECURITY = ("Low", "Medium", "High")
SLICES = ("SliceA", "SliceB", "SliceC")
WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


class MissingColumns(ValueError):
    pass


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _quartiles(values: np.ndarray) -> list[float]:
    return [float(np.min(values)),
            float(np.percentile(values, 25)),
            float(np.percentile(values, 50)),
            float(np.percentile(values, 75)),
            float(np.max(values))]


def emit_figures(dataset_csv, out_dir) -> dict[str, list[str]]:
    """Write every figure aggregate; returns {figure_id: [paths]}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = load_dataset_csv(dataset_csv)
    if not rows:
        raise MissingColumns("dataset is empty")
    for row in rows:
        row["cost_per_unit"] = compute_cost_per_unit(
            row["total_cost"], row["electricity_quantity"])
    written: dict[str, list[str]] = {}

    # F1: transaction volume per hour
    hour_counts: dict[int, int] = {}
    for row in rows:
        hour_start = row["timestamp"] // 3600 * 3600
        hour_counts[hour_start] = hour_counts.get(hour_start, 0) + 1
    hours = sorted(hour_counts)
    f1_rows = [[iso_utc(h), hour_counts[h]] for h in hours]
    _write_csv(out / "F1_volume_per_hour.csv", ["hour", "count"], f1_rows)
    labels = [iso_utc(h)[11:16] for h in hours]
    (out / "F1_volume_per_hour.svg").write_text(svg.line_chart(
        labels, [float(hour_counts[h]) for h in hours],
        "Transaction Volume Per Hour"), encoding="utf-8")
    written["F1"] = ["F1_volume_per_hour.csv", "F1_volume_per_hour.svg"]

    # F2: latency quartiles by security level and status
    f2_rows = []
    groups = []
    for level in SECURITY:
        for si, status in enumerate(STATUSES):
            values = np.array([r["latency_ms"] for r in rows
                               if r["security_level"] == level
                               and r["transaction_status"] == status])
            if values.size == 0:
                continue
            q = _quartiles(values)
            f2_rows.append([level, status] + [f"{v:.3f}" for v in q])
            groups.append({"label": f"{level}/{status}", "series": si,
                           "min": q[0], "q1": q[1], "median": q[2],
                           "q3": q[3], "max": q[4]})
    _write_csv(out / "F2_latency_by_security_status.csv",
               ["security_level", "status", "min", "q1", "median", "q3", "max"],
               f2_rows)
    (out / "F2_latency_by_security_status.svg").write_text(svg.box_summary(
        groups, "Latency vs Security Level by Transaction Status"),
        encoding="utf-8")
    written["F2"] = ["F2_latency_by_security_status.csv",
                     "F2_latency_by_security_status.svg"]

    # F3: role x type counts
    present_roles = [r for r in ROLES if any(row["user_role"] == r for row in rows)]
    matrix = [[sum(1 for row in rows if row["user_role"] == role
                   and row["transaction_type"] == t) for t in TYPES]
              for role in present_roles]
    _write_csv(out / "F3_role_type_counts.csv", ["user_role"] + list(TYPES),
               [[role] + counts for role, counts in zip(present_roles, matrix)])
    (out / "F3_role_type_counts.svg").write_text(svg.heat_grid(
        [[float(v) for v in row] for row in matrix], present_roles, list(TYPES),
        "Transaction Types Across User Roles"), encoding="utf-8")
    written["F3"] = ["F3_role_type_counts.csv", "F3_role_type_counts.svg"]

    # F4 (report-only derived column): cost-per-unit anomalies above p99
    cpu = np.array([r["cost_per_unit"] for r in rows])
    p99 = float(np.percentile(cpu, 99))
    # cost_per_unit printed as the shortest exact round-trip so the file
    # reproduces the > p99 filter bit-for-bit
    f4_rows = [[r["transaction_id"], iso_utc(r["timestamp"]),
                repr(r["cost_per_unit"]), r["user_role"],
                f"{r['latency_ms']:.3f}", r["transaction_type"],
                r["security_level"]]
               for r in rows if r["cost_per_unit"] > p99]
    _write_csv(out / "F4_high_cost_anomalies.csv",
               ["transaction_id", "timestamp", "cost_per_unit", "user_role",
                "latency_ms", "transaction_type", "security_level"], f4_rows)
    written["F4"] = ["F4_high_cost_anomalies.csv"]

    # F5: price quantiles by weekday
    by_weekday: dict[int, list[float]] = {}
    for row in rows:
        _, dow, _ = extract_time_features(row["timestamp"])
        by_weekday.setdefault(dow, []).append(row["price_per_mwh"])
    f5_rows = []
    for dow in sorted(by_weekday):
        q = _quartiles(np.array(by_weekday[dow]))
        f5_rows.append([WEEKDAYS[dow]] + [f"{v:.2f}" for v in q])
    _write_csv(out / "F5_price_by_weekday.csv",
               ["weekday", "min", "q1", "median", "q3", "max"], f5_rows)
    written["F5"] = ["F5_price_by_weekday.csv"]

    # F6: hour-of-day x role counts
    hours_of_day = sorted({extract_time_features(r["timestamp"])[0] for r in rows})
    matrix6 = [[sum(1 for row in rows
                    if extract_time_features(row["timestamp"])[0] == h
                    and row["user_role"] == role) for role in present_roles]
               for h in hours_of_day]
    _write_csv(out / "F6_hour_role_counts.csv",
               ["hour"] + present_roles,
               [[h] + counts for h, counts in zip(hours_of_day, matrix6)])
    (out / "F6_hour_role_counts.svg").write_text(svg.heat_grid(
        [[float(v) for v in row] for row in matrix6],
        [str(h) for h in hours_of_day], present_roles,
        "Transactions by Hour and User Role"), encoding="utf-8")
    written["F6"] = ["F6_hour_role_counts.csv", "F6_hour_role_counts.svg"]

    # F7: correlation matrix over the six numeric fields
    data = np.array([[row[c] for c in NUMERIC_COLUMNS] for row in rows],
                    dtype=np.float64)
    corr = np.corrcoef(data.T)
    _write_csv(out / "F7_correlation_matrix.csv",
               ["field"] + list(NUMERIC_COLUMNS),
               [[NUMERIC_COLUMNS[i]] + [f"{corr[i, j]:.4f}"
                                        for j in range(len(NUMERIC_COLUMNS))]
                for i in range(len(NUMERIC_COLUMNS))])
    (out / "F7_correlation_matrix.svg").write_text(svg.heat_grid(
        corr.tolist(), list(NUMERIC_COLUMNS), list(NUMERIC_COLUMNS),
        "Correlation Matrix: Market and Security Variables", fmt="{:.2f}"),
        encoding="utf-8")
    written["F7"] = ["F7_correlation_matrix.csv", "F7_correlation_matrix.svg"]

    # F8: status counts by network slice
    series = {status: [sum(1 for r in rows if r["network_slice_id"] == s
                           and r["transaction_status"] == status)
                       for s in SLICES] for status in STATUSES}
    _write_csv(out / "F8_status_by_slice.csv",
               ["network_slice_id"] + list(STATUSES),
               [[s] + [series[st][i] for st in STATUSES]
                for i, s in enumerate(SLICES)])
    (out / "F8_status_by_slice.svg").write_text(svg.stacked_bars(
        list(SLICES), {k: [float(v) for v in vals] for k, vals in series.items()},
        "Transaction Status by Network Slice"), encoding="utf-8")
    written["F8"] = ["F8_status_by_slice.csv", "F8_status_by_slice.svg"]

    # F9-F11: raw point exports, no rendering
    _write_csv(out / "F9_cost_latency_auth_points.csv",
               ["cost_per_unit", "latency_ms", "zt_authentication",
                "transaction_status", "security_level"],
               [[f"{r['cost_per_unit']:.4f}", f"{r['latency_ms']:.3f}",
                 r["zt_authentication"], r["transaction_status"],
                 r["security_level"]] for r in rows])
    _write_csv(out / "F10_cost_latency_points.csv",
               ["cost_per_unit", "latency_ms", "zt_authentication",
                "transaction_status", "security_level"],
               [[f"{r['cost_per_unit']:.4f}", f"{r['latency_ms']:.3f}",
                 r["zt_authentication"], r["transaction_status"],
                 r["security_level"]] for r in rows])
    _write_csv(out / "F11_price_quantity_points.csv",
               ["electricity_quantity", "price_per_mwh", "total_cost",
                "security_level", "transaction_status"],
               [[f"{r['electricity_quantity']:.3f}", f"{r['price_per_mwh']:.2f}",
                 f"{r['total_cost']:.2f}", r["security_level"],
                 r["transaction_status"]] for r in rows])
    written["F9"] = ["F9_cost_latency_auth_points.csv"]
    written["F10"] = ["F10_cost_latency_points.csv"]
    written["F11"] = ["F11_price_quantity_points.csv"]
    return written
