"""Deterministic result files: sorted-key JSON, fixed CSV columns, no timestamps."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .. import __version__
from .config import SCHEMA_VERSION
from .runner import RunResult

METRIC_COLUMNS = (
    "height",
    "miner",
    "txs",
    "gas_used",
    "native_fees",
    "meta_fees",
    "meta_fee_txs",
    "relayer_reimbursed",
    "channel_events",
    "mempool",
)
CHANNEL_COLUMNS = ("height", "event", "channel_id", "sender", "miner", "amount", "seq")


def fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def render(result: RunResult) -> dict[str, str]:
    files = {
        "chain.jsonl": "".join(
            json.dumps(b.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"
            for b in result.ledger.chain
        ),
        "metrics.csv": csv_text(METRIC_COLUMNS, result.metrics),
        "channels.csv": csv_text(CHANNEL_COLUMNS, (e.to_row() for e in result.events)),
        "summary.json": json_text(result.summary),
    }
    return {name: files[name] for name in result.scenario.outputs}


def write_run(result: RunResult, out_root: str | Path) -> Path:
    """Write the run under ``<out_root>/<scenario>/seed-<seed>/`` and return that directory."""
    target = Path(out_root) / result.scenario.name / f"seed-{result.seed}"
    target.mkdir(parents=True, exist_ok=True)
    files = render(result)
    for name, text in files.items():
        (target / name).write_text(text, encoding="utf-8", newline="\n")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "scenario": result.scenario.name,
        "seed": result.seed,
        "ticks": result.scenario.ticks,
        "version": __version__,
        "files": {n: hashlib.sha256(t.encode("utf-8")).hexdigest() for n, t in sorted(files.items())},
    }
    (target / "manifest.json").write_text(json_text(manifest), encoding="utf-8", newline="\n")
    return target
