"""Run configuration and versioned JSON/CSV persistence.

Every artifact carries the schema name and version, the hash of the run
configuration and the seed. Output is formatted deterministically (sorted
keys, ``repr`` floats, no timestamps), so re-running one configuration
reproduces its files byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .graphs.metric_graph import GraphSpecError, MetricGraph, build_graph

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """An artifact of the wrong kind or of a version this code cannot read."""


@dataclass
class RunConfig:
    subcommand: str
    inputs: list[str] = field(default_factory=list)
    n: int = 1
    lambda_max: list[float] = field(default_factory=list)
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=dict)
    out: str = "."
    svg: bool = False
    jobs: int = 1
    extra: dict[str, Any] = field(default_factory=dict)  # subcommand-specific options

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")

    def hashed_fields(self) -> dict[str, Any]:
        # where the files go and how many workers made them do not change them
        data = asdict(self)
        data.pop("out")
        data.pop("jobs")
        return data

    def config_hash(self) -> str:
        text = json.dumps(_plain(self.hashed_fields()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def stamp(self) -> dict[str, Any]:
        return {"configHash": self.config_hash(), "seed": self.seed, "config": _plain(self.hashed_fields())}


def _plain(obj: Any) -> Any:
    """JSON-ready copy: numpy scalars and arrays become Python numbers and lists."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _check_schema(schema: Any, kind: str, where: str) -> None:
    if not isinstance(schema, dict) or schema.get("name") != kind:
        raise SchemaError(f"{where}: expected a {kind!r} artifact, found {schema!r}")
    if schema.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"{where}: unsupported {kind} schema version {schema.get('version')!r}")


def dump_json(kind: str, data: Any, config: RunConfig) -> str:
    doc = {"schema": {"name": kind, "version": SCHEMA_VERSION}, **config.stamp(), "data": _plain(data)}
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=True) + "\n"


def load_json(text: str, kind: str, where: str = "<string>") -> dict[str, Any]:
    """The whole envelope; the payload is under ``"data"``."""
    doc = json.loads(text)
    _check_schema(doc.get("schema") if isinstance(doc, dict) else None, kind, where)
    return doc


def dump_csv(kind: str, header: Sequence[str], rows: Iterable[Sequence[Any]], config: RunConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={kind} version={SCHEMA_VERSION} configHash={config.config_hash()} seed={config.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else _plain(v) for v in row])
    return buf.getvalue()


def load_csv(text: str, kind: str, where: str = "<string>") -> tuple[dict[str, str], list[dict[str, str]]]:
    """Stamp fields of the comment line and the rows as dictionaries."""
    first, _, body = text.partition("\n")
    if not first.startswith("# "):
        raise SchemaError(f"{where}: missing schema line")
    stamp = dict(part.split("=", 1) for part in first[2:].split())
    try:
        version = int(stamp.get("version", ""))
    except ValueError:
        version = stamp.get("version")
    _check_schema({"name": stamp.get("schema"), "version": version}, kind, where)
    return stamp, list(csv.DictReader(io.StringIO(body)))


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def load_graph_spec(path: str | Path) -> MetricGraph:
    """Read a JSON graph description; parse and validation errors name the line or field."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphSpecError(f"cannot read file: {exc.strerror}", str(path)) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphSpecError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from None
    try:
        return build_graph(raw)
    except GraphSpecError as exc:
        raise GraphSpecError(str(exc), str(path)) from None
