"""File formats: dataset CSV + sidecar JSON, model JSON, region JSON, report JSON."""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dynamics import SnapshotDataset
from ..observables import Dictionary, build_dictionary
from ..regions import region_from_dict
from ..spectral import Eigenpair

SCHEMA_PATH = Path(__file__).with_name("report.schema.json")


def _sidecar(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json")


def save_dataset(ds: SnapshotDataset, path) -> None:
    path = Path(path)
    n = ds.dimension
    header = [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in np.hstack([ds.x, ds.y]):
            w.writerow([repr(float(v)) for v in row])
    meta = {"dim": n, "dt": ds.dt, "seed": ds.seed, "system": ds.system, "n_pairs": len(ds),
            "n_dropped": ds.n_dropped, **ds.meta}
    _sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_dataset(path) -> SnapshotDataset:
    path = Path(path)
    meta = json.loads(_sidecar(path).read_text())
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = int(meta["dim"])
    if data.shape[1] != 2 * n:
        raise ValueError(f"{path}: expected {2 * n} columns, found {data.shape[1]}")
    extra = {k: v for k, v in meta.items() if k not in ("dim", "dt", "seed", "system", "n_pairs", "n_dropped")}
    return SnapshotDataset(data[:, :n], data[:, n:], float(meta["dt"]), system=meta.get("system", ""),
                           seed=meta.get("seed"), n_dropped=int(meta.get("n_dropped", 0)), meta=extra)


def dataset_hash(ds: SnapshotDataset) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(ds.x).tobytes())
    h.update(np.ascontiguousarray(ds.y).tobytes())
    h.update(repr(ds.dt).encode())
    return h.hexdigest()[:16]


@dataclass
class KoopmanModel:
    dictionary: Dictionary
    dt: float
    eigenpairs: list
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dict": self.dictionary.to_dict(),
            "dt": self.dt,
            "eigenpairs": [p.to_dict() for p in self.eigenpairs],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KoopmanModel":
        dictionary = build_dictionary(int(d["dict"]["dim"]), int(d["dict"]["degree"]))
        dt = float(d["dt"])
        pairs = [Eigenpair.from_dict(p, dictionary, dt) for p in d["eigenpairs"]]
        return cls(dictionary, dt, pairs, dict(d.get("provenance", {})))


def save_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def save_model(model: KoopmanModel, path) -> None:
    save_json(model.to_dict(), path)


def load_model(path) -> KoopmanModel:
    return KoopmanModel.from_dict(load_json(path))


def load_region(path):
    return region_from_dict(load_json(path))


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text())
