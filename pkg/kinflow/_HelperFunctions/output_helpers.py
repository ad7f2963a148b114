import csv
import json
import logging
import os

from .._Reference.kinflow_info import SCHEMA_VERSION

logger = logging.getLogger(__name__)

SUMMARY_FILE_NAME = "summary.json"


def _cell(value):
    # repr keeps floats round-trip exact
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "item"):
        return _cell(value.item())
    return value


def write_csv(out_dir: str, file_name: str, header: list, rows: list) -> str:
    """
    Writes rows (dicts keyed by header, or sequences in header order) with a header row

    :return: the path of the written file
    """
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, file_name)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            values = [row[key] for key in header] if isinstance(row, dict) else list(row)
            writer.writerow([_cell(v) for v in values])
    logger.debug(f"wrote {len(rows)} rows to {path}")
    return path


def read_csv(path: str) -> list:
    with open(path, "r", newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def write_summary(out_dir: str, experiment: str, seed: int, checks: list, warnings: list = None) -> dict:
    """summary.json: schema version, pass/fail of every check, warnings; no timestamps"""
    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "seed": seed,
        "passed": all(check.passed for check in checks),
        "checks": [check.to_dict() for check in checks],
        "warnings": list(warnings or []),
    }
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, SUMMARY_FILE_NAME), "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return summary


FIELD_HEADER = ["x", "y", "vx", "vy", "value"]


def field_rows(grid, field) -> list:
    """one row per phase-space node (space index s, velocity index k)"""
    rows = []
    for s, (x, y) in enumerate(grid.space_points):
        for k, (vx, vy) in enumerate(grid.velocities):
            rows.append([float(x), float(y), float(vx), float(vy), float(field[s, k])])
    return rows
