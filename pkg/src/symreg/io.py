# Plain-text dataset directory format and run manifests.
#
# A dataset directory holds:
#   subjects.csv    header id,y,z1..z{p0} (optional extra columns, e.g. a
#                   strata label, are preserved for lookup); UTF-8, comma
#                   separated, '.' decimal, LF line endings
#   matrices/<id>.csv   one p x p comma-separated numeric grid per subject
#   meta.json       optional; family and p
#
# Floats are written with repr(), the shortest decimal string that round-trips
# to the same double, so re-reading a file reproduces values exactly.

import csv
import json
import time
from pathlib import Path

import numpy as np

from .glm import BERNOULLI, GAUSSIAN
from .solvers import Dataset
from .simulate import RNG_ALGORITHM

ARTIFACT_VERSION = "0.1.0"
SYMMETRY_INGEST_TOL = 1e-8


class DataFormatError(ValueError):
    pass


def fmt(x):
    return repr(float(x))


def write_matrix_csv(path, m):
    m = np.asarray(m, dtype=float)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in m:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_matrix_csv(path):
    try:
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append([float(tok) for tok in line.split(",")])
        m = np.asarray(rows, dtype=float)
    except ValueError as exc:
        raise DataFormatError(f"non-numeric entry in matrix file {path}: {exc}")
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.size == 0:
        raise DataFormatError(f"matrix file {path} is not a square grid")
    return m


def write_dataset(data, outdir, ids=None):
    """Write subjects.csv, matrices/ and meta.json for one Dataset."""
    outdir = Path(outdir)
    (outdir / "matrices").mkdir(parents=True, exist_ok=True)
    n, p0 = data.n, data.p0
    if ids is None:
        ids = [f"{i:06d}" for i in range(1, n + 1)]
    header = ["id", "y"] + [f"z{j}" for j in range(1, p0 + 1)]
    with open(outdir / "subjects.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            row = [ids[i], fmt(data.y[i])] + [fmt(v) for v in data.Z[i]]
            fh.write(",".join(row) + "\n")
    for i in range(n):
        write_matrix_csv(outdir / "matrices" / f"{ids[i]}.csv", data.X[i])
    meta = {"family": data.family.name, "p": int(data.p), "p0": int(p0)}
    with open(outdir / "meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ids


def read_dataset(path, log_response=False):
    """Load a dataset directory; returns (Dataset, extra_columns dict).

    Matrices asymmetric beyond 1e-8 are rejected; smaller asymmetries are
    symmetrized with a warning recorded in Dataset.meta["warnings"].
    """
    path = Path(path)
    subjects = path / "subjects.csv"
    if not subjects.is_file():
        raise DataFormatError(f"missing {subjects}")
    with open(subjects, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "id" or header[1] != "y":
            raise DataFormatError(f"{subjects} must start with columns id,y")
        z_cols = [j for j, name in enumerate(header) if name.startswith("z")]
        extra_cols = [
            j for j in range(2, len(header)) if j not in z_cols
        ]
        ids, ys, zs, extras = [], [], [], {header[j]: [] for j in extra_cols}
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            try:
                ys.append(float(row[1]))
                zs.append([float(row[j]) for j in z_cols])
            except ValueError as exc:
                raise DataFormatError(f"non-numeric value in {subjects}: {exc}")
            for j in extra_cols:
                extras[header[j]].append(row[j])

    y = np.asarray(ys)
    if log_response:
        if np.any(y <= 0):
            raise DataFormatError("--log-response requires strictly positive y")
        y = np.log(y)
    Z = np.asarray(zs) if zs and zs[0] else np.zeros((len(ids), 0))

    family = GAUSSIAN
    meta_path = path / "meta.json"
    if meta_path.is_file():
        with open(meta_path, encoding="utf-8") as fh:
            meta = json.load(fh)
        if meta.get("family") == "bernoulli":
            family = BERNOULLI

    warnings = []
    mats = []
    p = None
    for sid in ids:
        mpath = path / "matrices" / f"{sid}.csv"
        if not mpath.is_file():
            raise DataFormatError(f"missing matrix file {mpath}")
        m = read_matrix_csv(mpath)
        if p is None:
            p = m.shape[0]
        elif m.shape[0] != p:
            raise DataFormatError(f"matrix file {mpath} has wrong dimensions")
        asym = float(np.max(np.abs(m - m.T), initial=0.0))
        if asym > SYMMETRY_INGEST_TOL:
            raise DataFormatError(
                f"matrix file {mpath} asymmetric beyond {SYMMETRY_INGEST_TOL:g}"
            )
        if asym > 0:
            m = (m + m.T) / 2.0
            warnings.append(f"{mpath.name}: symmetrized (max asymmetry {asym:.3e})")
        mats.append(m)

    data = Dataset(y, Z, np.stack(mats), family, {"warnings": warnings, "ids": ids})
    return data, extras


def write_manifest(outdir, command, config, inputs, seed, duration, extra=None):
    """Single manifest per output directory; records enough to re-run the job."""
    payload = {
        "command": command,
        "config": config,
        "inputs": [str(i) for i in inputs],
        "output_dir": str(outdir),
        "rng": {"algorithm": RNG_ALGORITHM, "seed": seed},
        "duration_seconds": duration,
        "version": ARTIFACT_VERSION,
    }
    if extra:
        payload.update(extra)
    with open(Path(outdir) / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return payload


class Stopwatch:
    def __enter__(self):
        self.t0 = time.monotonic()
        return self

    def __exit__(self, *exc):
        self.seconds = time.monotonic() - self.t0
        return False
