"""Plain-text serialization of crossings, trajectories, sweeps and oracle results.

Floats are written with ``repr`` so that identical runs produce byte-identical
files, and everything can be read back without this package.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .eom import ResidualReport, Sample, TrajectoryRecord
from .ics import CrossingMultiplet
from .oracle import SpectrumSweep

RESIDUAL_FIELDS = ("eigen", "orthonormality", "closure", "lambda_dot_spread")


def _c(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# trajectories


def sample_to_dict(s: Sample) -> dict:
    return {"delta": float(s.delta), "lambda": _c(s.lam),
            "ep_energies": [_c(e) for e in s.ep_energies],
            "ordinary_energies": [_c(e) for e in s.ordinary_energies],
            "residuals": s.report.as_dict()}


def sample_from_dict(d: dict) -> Sample:
    r = d["residuals"]
    report = ResidualReport(r["eigen"], r["orthonormality"], r["closure"], r["lambda_dot_spread"])
    return Sample(float(d["delta"]), complex(*d["lambda"]),
                  np.array([complex(*e) for e in d["ep_energies"]], dtype=complex),
                  np.array([complex(*e) for e in d["ordinary_energies"]], dtype=complex),
                  report)


def write_trajectory_jsonl(record: TrajectoryRecord, path) -> None:
    """One header line (status, meta) followed by one line per sample."""
    header = {"status": record.status, "halt_reason": record.halt_reason,
              "halt_delta": record.halt_delta, "meta": record.meta}
    with open(path, "w") as fh:
        fh.write(json.dumps({"header": header}) + "\n")
        for s in record.samples:
            fh.write(json.dumps(sample_to_dict(s)) + "\n")


def read_trajectory_jsonl(path) -> TrajectoryRecord:
    rec = TrajectoryRecord()
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            if "header" in d:
                h = d["header"]
                rec.status = h["status"]
                rec.halt_reason = h["halt_reason"]
                rec.halt_delta = h["halt_delta"]
                rec.meta = h["meta"]
            else:
                rec.samples.append(sample_from_dict(d))
    return rec


def trajectory_columns(m: int, j: int) -> list[str]:
    cols = ["delta", "re_lambda", "im_lambda"]
    for k in range(m):
        cols += [f"re_Et{k}", f"im_Et{k}"]
    for k in range(j):
        cols += [f"re_E{k}", f"im_E{k}"]
    return cols + list(RESIDUAL_FIELDS)


def write_trajectory_csv(record: TrajectoryRecord, path) -> None:
    if record.samples:
        m = len(record.samples[0].ep_energies)
        j = len(record.samples[0].ordinary_energies)
    else:
        m = j = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_columns(m, j))
        for s in record.samples:
            row = [repr(float(s.delta))] + [repr(v) for v in _c(s.lam)]
            for e in list(s.ep_energies) + list(s.ordinary_energies):
                row += [repr(v) for v in _c(e)]
            res = s.report.as_dict()
            row += [repr(float(res[k])) for k in RESIDUAL_FIELDS]
            w.writerow(row)


# ---------------------------------------------------------------------------
# crossings, sweeps, oracle output


def write_crossings(multiplets, path, extra: dict | None = None) -> None:
    out = {"multiplets": [m.to_dict() for m in multiplets]}
    if extra:
        out.update(extra)
    dump_json(out, path)


def read_crossings(path) -> list[CrossingMultiplet]:
    return [CrossingMultiplet.from_dict(d) for d in load_json(path)["multiplets"]]


def write_sweep_csv(sweep: SpectrumSweep, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "delta", "k", "re_E", "im_E"])
        for lam, d, k, re, im in sweep.rows():
            w.writerow([repr(lam), repr(d), k, repr(re), repr(im)])


def read_sweep_csv(path) -> SpectrumSweep:
    rows = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            rows.append((float(r["lambda"]), float(r["delta"]), int(r["k"]),
                         complex(float(r["re_E"]), float(r["im_E"]))))
    lambdas = sorted({r[0] for r in rows})
    deltas = sorted({r[1] for r in rows})
    dim = max(r[2] for r in rows) + 1
    li = {v: i for i, v in enumerate(lambdas)}
    di = {v: i for i, v in enumerate(deltas)}
    values = np.empty((len(lambdas), len(deltas), dim), dtype=complex)
    for lam, d, k, e in rows:
        values[li[lam], di[d], k] = e
    return SpectrumSweep(np.array(lambdas), np.array(deltas), values)


def write_candidates(results, path) -> None:
    dump_json({"checkpoints": [r.to_dict() for r in results]}, path)
