"""Dataset JSON files, packaged outcome strings and CSV export.

Frequencies in files are plain Hz with an ``_hz`` suffix; times are seconds.
"""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .measurement import Dataset

SCHEMA = 1

FIXTURES = (
    "case_i_nm1",
    "case_i_nm4",
    "case_i_nm20",
    "case_ii_nm1",
    "case_ii_nm4",
    "case_ii_nm20",
    "case_ii_nm40",
    "fig_s7a",
    "fig_s7b",
)


class SchemaError(ValueError):
    pass


def dataset_to_dict(data: Dataset) -> dict:
    return {
        "schema": SCHEMA,
        "times_s": [float(t) for t in data.times],
        "x": [int(v) for v in data.x],
        "n_m": data.n_m,
        "provenance": data.provenance,
    }


def dataset_from_dict(d: dict) -> Dataset:
    if d.get("schema") != SCHEMA:
        raise SchemaError(f"unsupported dataset schema {d.get('schema')!r}")
    unknown = set(d) - {"schema", "times_s", "x", "n_m", "provenance"}
    if unknown:
        raise SchemaError(f"unknown dataset keys: {sorted(unknown)}")
    try:
        return Dataset(d["times_s"], d["x"], d["n_m"], d.get("provenance", {}))
    except KeyError as e:
        raise SchemaError(f"missing dataset key {e}") from None


def dumps(data: Dataset) -> str:
    return json.dumps(dataset_to_dict(data), indent=1, sort_keys=True) + "\n"


def loads(text: str) -> Dataset:
    return dataset_from_dict(json.loads(text))


def save_dataset(data: Dataset, path) -> Path:
    path = Path(path)
    path.write_text(dumps(data))
    return path


def load_dataset(path) -> Dataset:
    return loads(Path(path).read_text())


def load_fixture(name: str) -> Dataset:
    """One of the published outcome strings listed in :data:`FIXTURES`."""
    if name not in FIXTURES:
        raise KeyError(f"no fixture {name!r}; available: {', '.join(FIXTURES)}")
    text = resources.files("bayesmag").joinpath("data", f"{name}.json").read_text()
    return loads(text)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_chains_csv(path, samples) -> Path:
    """Columns: chain, step, omega_tg_hz, xi_hz, log_post, accepted."""
    rows = []
    for c, (path_c, lp, acc) in enumerate(zip(samples.chains, samples.log_post, samples.accepted)):
        for i in range(path_c.shape[0]):
            xi = path_c[i, 1] if path_c.shape[1] > 1 else 0.0
            rows.append((c, i, path_c[i, 0] / (2 * np.pi), xi / (2 * np.pi), lp[i], bool(acc[i])))
    return write_csv(path, ("chain", "step", "omega_tg_hz", "xi_hz", "log_post", "accepted"), rows)
