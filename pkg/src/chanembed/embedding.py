"""Low-dimensional embedding record shared by every reduction technique."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TECHNIQUES = ("tsne", "pca", "kpca", "isomap")


@dataclass(eq=False)
class Embedding:
    y: np.ndarray
    technique: str
    params: dict = field(default_factory=dict)
    final_cost: float | None = None
    cost_history: np.ndarray | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.ndim != 2:
            raise ValueError("embedding coordinates must be a 2-D array")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("embedding has non-finite coordinates")

    def metadata(self) -> dict:
        meta = {"technique": self.technique, "params": self.params, "n_points": int(self.y.shape[0])}
        if self.final_cost is not None:
            meta["final_cost"] = float(self.final_cost)
        if self.cost_history is not None:
            meta["iterations"] = int(len(self.cost_history) - 1)
        return meta


def metadata_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_embedding(csv_path, labels, embedding: Embedding) -> None:
    """Write ``label,y1,y2`` rows and a JSON run-metadata file beside them."""
    if len(labels) != embedding.y.shape[0]:
        raise ValueError("label count does not match embedding rows")
    with open(csv_path, "w", newline="") as fh:
        fh.write("label,y1,y2\n")
        for label, (a, b) in zip(labels, embedding.y[:, :2]):
            fh.write(f"{label},{float(a)!r},{float(b)!r}\n")
    metadata_path(csv_path).write_text(json.dumps(embedding.metadata(), indent=2, sort_keys=True) + "\n")


def read_embedding(csv_path):
    """Return ``(labels, y, metadata)``; metadata is ``{}`` when no sidecar exists."""
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["label", "y1", "y2"]:
            raise ValueError(f"{csv_path}: not an embedding CSV (header {header})")
        labels, rows = [], []
        for rec in reader:
            labels.append(rec[0])
            rows.append((float(rec[1]), float(rec[2])))
    meta_file = metadata_path(csv_path)
    meta = json.loads(meta_file.read_text()) if meta_file.exists() else {}
    return labels, np.array(rows, dtype=np.float64).reshape(-1, 2), meta
