"""Tables, CSV/JSON persistence and the run manifest.

Every data file carries the tool version, the config hash, the master seed
and a versioned schema name. Floats are written with 12 significant digits
so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from quenchscape import __version__

SCHEMA_VERSION = 1
DIGITS = 12


@dataclass
class Table:
    """A named result table with a fixed column order."""

    name: str
    columns: tuple
    rows: list = field(default_factory=list)

    @property
    def schema(self) -> str:
        return f"{self.name}/v{SCHEMA_VERSION}"

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, (_json_value(v) for v in row))) for row in self.rows]


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, f".{DIGITS}g")
    if hasattr(v, "item"):  # numpy scalars
        return format_value(v.item())
    return str(v)


def _json_value(v):
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float):
        if not math.isfinite(v):
            return format_value(v)
        return float(format(v, f".{DIGITS}g"))
    return v


def config_hash(config: dict) -> str:
    """First 16 hex digits of sha256 over the canonical JSON of ``config``."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def metadata(table: Table, chash: str, seed: int) -> dict:
    return {"tool": "quenchscape", "version": __version__, "schema": table.schema, "config_hash": chash, "seed": seed}


def render_csv(table: Table, chash: str, seed: int) -> str:
    buf = io.StringIO()
    for key, value in metadata(table, chash, seed).items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def render_json(table: Table, chash: str, seed: int) -> str:
    doc = {"rows": table.records(), "manifest": metadata(table, chash, seed)}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_tables(tables, out: Path, fmt: str, chash: str, seed: int) -> list[dict]:
    """Write each table as ``<name>.<fmt>``; return file entries for the manifest."""
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for table in tables:
        if fmt == "csv":
            text = render_csv(table, chash, seed)
        elif fmt == "json":
            text = render_json(table, chash, seed)
        else:
            raise ValueError(f"unknown format {fmt!r}")
        path = out / f"{table.name}.{fmt}"
        data = text.encode()
        path.write_bytes(data)
        entries.append({"file": path.name, "schema": table.schema, "rows": len(table.rows), "sha256": hashlib.sha256(data).hexdigest()})
    return entries


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    config_hash: str
    seed: int
    workers: int
    wall_clock_seconds: float
    files: list
    version: str = __version__

    def write(self, out: Path) -> Path:
        path = out / "manifest.json"
        doc = {
            "tool": "quenchscape",
            "version": self.version,
            "subcommand": self.subcommand,
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "workers": self.workers,
            "wall_clock_seconds": round(self.wall_clock_seconds, 3),
            "files": self.files,
        }
        path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n")
        return path
