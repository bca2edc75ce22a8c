"""Structured verification output and its canonical JSON form."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__

KINDS = ("operators", "consistency", "convergence", "stability", "solvability",
         "oracle", "run", "eta")


def plain(obj):
    """Convert numpy scalars/arrays, dataclasses and enums to JSON-ready values.

    Non-finite floats become the strings ``"inf"``, ``"-inf"``, ``"nan"`` so
    the output stays strict JSON.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return plain(obj.value)
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def default_timestamp() -> str:
    """UTC ISO timestamp, pinned by ``SOURCE_DATE_EPOCH`` when it is set."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    secs = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(secs))


@dataclass
class Report:
    kind: str
    payload: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown report kind {self.kind!r}")
        self.metadata = {"version": __version__, "seed": None, "config": None,
                         "timestamp": None, **self.metadata}
        if self.metadata["timestamp"] is None:
            self.metadata["timestamp"] = default_timestamp()

    def to_dict(self):
        return {"kind": self.kind, "payload": plain(self.payload),
                "metadata": plain(self.metadata)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        return cls(kind=d["kind"], payload=d["payload"], metadata=d["metadata"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
