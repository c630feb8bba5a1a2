"""Deterministic CSV / key-value writers with a provenance header."""

import csv
import hashlib
import json
import math

from . import __version__

__all__ = ["config_hash", "format_value", "write_csv", "write_rows", "write_key_values"]


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def format_value(v):
    """Shortest round-trip decimal for floats; '.' separator regardless of locale."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, complex):
        return f"{format_value(v.real)}{'+' if v.imag >= 0 or math.isnan(v.imag) else '-'}{format_value(abs(v.imag))}j"
    if isinstance(v, float) or type(v).__name__.startswith("float"):
        return repr(float(v))
    if isinstance(v, int) or type(v).__name__.startswith("int"):
        return str(int(v))
    return str(v)


def _header(fh, chash, columns, extra=()):
    fh.write(f"# qcspin {__version__}\n")
    fh.write(f"# config_hash: {chash}\n")
    fh.write(f"# columns: {','.join(columns)}\n")
    for line in extra:
        fh.write(f"# {line}\n")


def write_csv(path, columns, rows, chash, extra=()):
    """Header comments, a column-name row, then one row per record."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _header(fh, chash, columns, extra)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_value(v) for v in r])


def write_rows(path, schema, rows, chash, extra=()):
    """Header comments followed by raw rows (no column-name row)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _header(fh, chash, [schema], extra)
        w = csv.writer(fh, lineterminator="\n")
        for r in rows:
            w.writerow([format_value(v) for v in r])


def write_key_values(path, items, chash):
    with open(path, "w", encoding="utf-8") as fh:
        _header(fh, chash, ["key", "value"])
        for k, v in items:
            fh.write(f"{k} = {format_value(v)}\n")
