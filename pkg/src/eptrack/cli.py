"""Command-line driver: crossings -> clusters -> propagation -> oracle -> files.

Subcommands
-----------
crossings   detect Hermitian crossing multiplets and write ``crossings.json``
run         full pipeline (or a direct start from a known EP with ``--seed-ep``)
validate    re-check the trajectories of a run directory with the oracle
sweep       dense spectrum on a (lambda, delta) grid, CSV plus SVG panels
report      print the per-cluster summary table of a run directory

Settings come from ``--config file.json`` and are overridden by flags.  The
default output directory is taken from ``$EPTRACK_OUTPUT`` (else ``eptrack_out``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import eom, ics, io, oracle, svg
from .exceptions import EPTrackError
from .model import ToyModel, ToyModelSpec, make_family

log = logging.getLogger("eptrack")

OUTPUT_ENV = "EPTRACK_OUTPUT"
DEFAULT_OUTPUT = "eptrack_out"


@dataclass
class RunConfig:
    """Everything that determines a run.  Equal configs give identical files."""

    model: str = "toy"
    n: int = 19
    parity: str = "odd"
    omega: float = 1.0
    delta_start: float = 0.0
    delta_end: float = 1.0
    grid: int = 100_000
    tol: float = eom.DEFAULT_TOL
    lambda_min: float = 0.0
    lambda_max: float = 1.0
    scan_points: int = 2001
    check_every: int = 1000
    sample_every: int | None = None
    integrator: str = "euler"
    trial_steps: int = 100
    checkpoints: list[float] = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    seed_ep: str | None = None
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.delta_start == self.delta_end:
            raise ValueError("delta_start and delta_end must differ")
        if int(self.grid) < 1:
            raise ValueError("grid must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.integrator not in eom.INTEGRATORS:
            raise ValueError(f"integrator must be one of {sorted(eom.INTEGRATORS)}")
        if self.lambda_max <= self.lambda_min:
            raise ValueError("lambda_max must exceed lambda_min")
        self.grid = int(self.grid)
        self.check_every = max(1, int(self.check_every))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d.pop("workers")
        return d

    def family(self):
        if self.model == "toy":
            return ToyModel(ToyModelSpec(n_odd=self.n, omega=self.omega, parity=self.parity))
        return make_family(self.model, n=self.n, omega=self.omega, parity=self.parity)

    def output_dir(self) -> Path:
        return Path(self.output or os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


class StageError(Exception):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"{stage}: {type(exc).__name__}: {exc}")
        self.stage = stage
        self.exc = exc


def _diagnostics(exc: BaseException) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    for name in ("delta", "pair", "table"):
        val = getattr(exc, name, None)
        if val is not None:
            out[name] = val
    report = getattr(exc, "report", None)
    if report is not None:
        out["residuals"] = report.as_dict()
    cand = getattr(exc, "candidate", None)
    if cand is not None:
        out["candidate"] = cand.to_dict()
    return out


class _Stage:
    """Context manager that tags any exception with the pipeline stage."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)
        return self

    def __exit__(self, et, ev, tb):
        if ev is not None and not isinstance(ev, StageError) and isinstance(ev, Exception):
            raise StageError(self.name, ev) from ev
        return False


# ---------------------------------------------------------------------------
# pipeline pieces


def parse_complex(s: str) -> complex:
    return complex(s.replace(" ", "").replace("i", "j"))


def detect(cfg: RunConfig, family) -> list[ics.CrossingMultiplet]:
    return ics.detect_crossings(family, cfg.delta_start, (cfg.lambda_min, cfg.lambda_max),
                                cfg.scan_points)


def _propagate_job(args):
    state, family, cfg_dict, meta = args
    cfg = RunConfig.from_dict(cfg_dict)
    return eom.propagate(state, family, cfg.delta_end, cfg.grid, tol=cfg.tol,
                         check_every=cfg.check_every, sample_every=cfg.sample_every,
                         integrator=cfg.integrator, raise_on_halt=False, meta=meta)


def propagate_all(jobs, cfg: RunConfig) -> list[eom.TrajectoryRecord]:
    """Propagate every cluster; results come back in job order."""
    payload = [(s, f, cfg.to_dict(), m) for s, f, m in jobs]
    if cfg.workers > 1 and len(payload) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_propagate_job, payload))
    return [_propagate_job(p) for p in payload]


def _checkpoints_in(record, checkpoints, d0, d1):
    lo, hi = min(d0, d1), max(d0, d1)
    if record.status != "completed" and record.samples:
        last = record.samples[-1].delta
        lo, hi = (d0, last) if d1 > d0 else (last, d0)
    return [float(c) for c in checkpoints if lo <= c <= hi]


def validate_records(records, family, cfg: RunConfig) -> list[dict]:
    out = []
    for rec in records:
        cps = _checkpoints_in(rec, cfg.checkpoints, cfg.delta_start, cfg.delta_end)
        rows = []
        for c in cps:
            try:
                rows.extend(oracle.validate_trajectory(rec, family, [c]))
            except EPTrackError as exc:
                rows.append(oracle.CheckpointResult(c, rec.lambda_at(c), None, float("inf"),
                                                    False, f"{type(exc).__name__}: {exc}"))
        out.append({"cluster": rec.meta.get("cluster"),
                    "checkpoints": [r.to_dict() for r in rows]})
    return out


def _cluster_name(k: int) -> str:
    return f"cluster_{k:03d}"


def write_run(outdir: Path, cfg: RunConfig, records, validation, family, multiplets=None,
              resolutions=None, lambda_positive_imag=False) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    tdir = outdir / "trajectories"
    tdir.mkdir(exist_ok=True)
    io.dump_json(cfg.to_dict(), outdir / "config.json")
    if multiplets is not None:
        io.write_crossings(multiplets, outdir / "crossings.json")
    if resolutions is not None:
        io.dump_json(resolutions, outdir / "resolution.json")
    for rec in records:
        name = _cluster_name(rec.meta["cluster"])
        io.write_trajectory_jsonl(rec, tdir / f"{name}.jsonl")
        io.write_trajectory_csv(rec, tdir / f"{name}.csv")
    with open(outdir / "residuals.csv", "w") as fh:
        fh.write("cluster,delta," + ",".join(io.RESIDUAL_FIELDS) + "\n")
        for rec in records:
            for s in rec.samples:
                r = s.report.as_dict()
                fh.write(f"{rec.meta['cluster']},{s.delta!r},"
                         + ",".join(repr(float(r[k])) for k in io.RESIDUAL_FIELDS) + "\n")
    io.dump_json({"clusters": validation}, outdir / "validation.json")
    pdir = outdir / "plots"
    pdir.mkdir(exist_ok=True)
    label = _model_label(cfg)
    svg.lambda_trajectories(records, pdir / "lambda_plane.svg", title=f"EP trajectories, {label}")
    svg.lambda_trajectories(records, pdir / "lambda_plane_imag_positive.svg", positive_imag=True,
                            title=f"EP trajectories (Im lambda >= 0), {label}")
    svg.energy_trajectories(records, pdir / "energies.svg", title=f"EP energies, {label}")
    if multiplets is not None:
        lam = np.linspace(cfg.lambda_min, cfg.lambda_max, 401)
        lines = np.array([np.linalg.eigvalsh(np.asarray(family.eval(x, cfg.delta_start)).real)
                          for x in lam])
        svg.crossing_diagram(lam, lines, multiplets, pdir / "crossings.svg",
                             title=f"Hermitian crossings, {label}")
    if lambda_positive_imag:
        # the fixed-sign layout becomes the main figure
        (pdir / "lambda_plane.svg").write_text((pdir / "lambda_plane_imag_positive.svg").read_text())


def _model_label(cfg: RunConfig) -> str:
    if cfg.model == "toy":
        return f"N={cfg.n}, {cfg.parity} parity, omega={cfg.omega:g}"
    return cfg.model


def run_pipeline(cfg: RunConfig, lambda_positive_imag: bool = False) -> int:
    """Run all stages, write artifacts and return the exit status.

    0: every cluster completed and every checkpoint is a confirmed EP within
    1e-4 of the trajectory; 1: artifacts written but some cluster halted or
    failed validation; 2: a stage raised.
    """
    outdir = cfg.output_dir()
    t0 = time.time()
    with _Stage("model"):
        family = cfg.family()
    multiplets = resolutions = None
    jobs = []
    if cfg.seed_ep is not None:
        with _Stage("seed"):
            state = ics.ep_state_from_seed(family, cfg.delta_start, parse_complex(cfg.seed_ep))
            jobs.append((state, family, {"cluster": 0, "m": 1, "lambda_in": None,
                                         "seed": [state.lam.real, state.lam.imag]}))
    else:
        with _Stage("crossings"):
            multiplets = detect(cfg, family)
        resolutions = []
        with _Stage("resolve"):
            step = (cfg.delta_end - cfg.delta_start) / cfg.grid
            k = 0
            for idx, mu in enumerate(multiplets):
                res = ics.resolve_multiplet(mu, family, cfg.trial_steps, step, cfg.tol)
                resolutions.append({"multiplet": idx, "lambda_in": mu.lambda_in,
                                    "clusters": [h.to_dict() for h, _ in res.clusters],
                                    "trials": res.table})
                for hyp, state in res.clusters:
                    jobs.append((state, family, {"cluster": k, "multiplet": idx,
                                                 "lambda_in": mu.lambda_in, "m": hyp.size,
                                                 "member_pairs": list(hyp.member_pairs),
                                                 "signs": list(hyp.signs)}))
                    k += 1
    with _Stage("propagate"):
        records = propagate_all(jobs, cfg)
    with _Stage("validate"):
        validation = validate_records(records, family, cfg)
    with _Stage("write"):
        write_run(outdir, cfg, records, validation, family, multiplets, resolutions,
                  lambda_positive_imag)
    log.info("run finished in %.1f s", time.time() - t0)
    print(report_summary(outdir))
    ok = all(r.status == "completed" for r in records) and _validation_ok(validation)
    return 0 if ok else 1


def _validation_ok(validation) -> bool:
    for v in validation:
        for c in v["checkpoints"]:
            if not c["is_ep"] and c["delta"] != 0.0:
                return False
            if c["discrepancy"] > 1e-4:
                return False
    return True


# ---------------------------------------------------------------------------
# reporting


def load_run(run_dir) -> tuple[dict, list[eom.TrajectoryRecord], dict]:
    run_dir = Path(run_dir)
    tdir = run_dir / "trajectories"
    files = sorted(tdir.glob("cluster_*.jsonl")) if tdir.is_dir() else []
    if not files:
        raise FileNotFoundError(f"no trajectories found under {run_dir}")
    cfg = io.load_json(run_dir / "config.json")
    records = [io.read_trajectory_jsonl(f) for f in files]
    vpath = run_dir / "validation.json"
    validation = io.load_json(vpath) if vpath.exists() else {"clusters": []}
    return cfg, records, validation


def report_summary(run_dir) -> str:
    """Table with one row per cluster: start, size, final lambda, residual, oracle discrepancy."""
    _, records, validation = load_run(run_dir)
    disc = {}
    for v in validation.get("clusters", []):
        vals = [c["discrepancy"] for c in v["checkpoints"]]
        disc[v["cluster"]] = max(vals) if vals else None
    head = f"{'cluster':>7} {'lambda_in':>10} {'M':>2} {'status':>9} {'final delta':>11} " \
           f"{'final lambda':>27} {'max resid':>9} {'oracle':>9}"
    lines = [head, "-" * len(head)]
    for rec in records:
        c = rec.meta.get("cluster")
        lam_in = rec.meta.get("lambda_in")
        last = rec.samples[-1] if rec.samples else None
        lam = f"{last.lam.real:+.8f}{last.lam.imag:+.8f}i" if last else "-"
        dfin = f"{last.delta:.6g}" if last else "-"
        status = rec.status
        if status != "completed" and rec.halt_delta is not None:
            status = f"halted@{rec.halt_delta:.4g}"
        d = disc.get(c)
        lam_in = "seed" if lam_in is None else format(lam_in, ".6f")
        lines.append(f"{c:>7} {lam_in:>10} "
                     f"{rec.meta.get('m', '?'):>2} {status:>9} {dfin:>11} {lam:>27} "
                     f"{rec.max_residual:9.2e} {'-' if d is None else format(d, '9.2e'):>9}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument handling


def _add_model_args(p):
    p.add_argument("--config", help="JSON file with settings; flags override it")
    p.add_argument("--model", help="registered family name (default: toy)")
    p.add_argument("--n", type=int, help="toy model N (odd)")
    p.add_argument("--parity", choices=["even", "odd"])
    p.add_argument("--omega", type=float)
    p.add_argument("--out", dest="output", help=f"output directory (default: ${OUTPUT_ENV})")


def _add_scan_args(p):
    p.add_argument("--start-delta", dest="delta_start", type=float)
    p.add_argument("--lambda-min", type=float)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--scan-points", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eptrack", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crossings", help="detect Hermitian crossing multiplets")
    _add_model_args(p)
    _add_scan_args(p)

    p = sub.add_parser("run", help="detect, resolve, propagate, validate, plot")
    _add_model_args(p)
    _add_scan_args(p)
    p.add_argument("--end-delta", dest="delta_end", type=float)
    p.add_argument("--grid", type=int, help="number of integration steps G")
    p.add_argument("--tol", type=float, help="residual tolerance")
    p.add_argument("--check-every", type=int)
    p.add_argument("--sample-every", type=int)
    p.add_argument("--integrator", choices=sorted(eom.INTEGRATORS))
    p.add_argument("--trial-steps", type=int, help="probe length for cluster/sign trials")
    p.add_argument("--checkpoints", type=lambda s: [float(x) for x in s.split(",")],
                   help="comma-separated deltas for oracle validation")
    p.add_argument("--seed-ep", help="start directly from an EP near this lambda, e.g. 0+2i")
    p.add_argument("--workers", type=int)
    p.add_argument("--imag-positive", action="store_true",
                   help="lambda-plane plot with Im lambda >= 0 imposed afterwards")

    p = sub.add_parser("validate", help="oracle check of an existing run")
    p.add_argument("run_dir")
    p.add_argument("--checkpoints", type=lambda s: [float(x) for x in s.split(",")])

    p = sub.add_parser("sweep", help="dense spectrum on a (lambda, delta) grid")
    _add_model_args(p)
    p.add_argument("--lambda-min", type=float, default=0.0)
    p.add_argument("--lambda-max", type=float, default=1.0)
    p.add_argument("--lambda-points", type=int, default=201)
    p.add_argument("--deltas", type=lambda s: [float(x) for x in s.split(",")],
                   default=[0.0, 0.5, 1.0])

    p = sub.add_parser("report", help="summary table of a run directory")
    p.add_argument("run_dir")
    return parser


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def config_from_args(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    for k, v in vars(args).items():
        if k in _CONFIG_KEYS and v is not None:
            base[k] = v
    return RunConfig.from_dict(base)


def _fail(stage: str, exc: BaseException, outdir: Path | None) -> int:
    diag = {"stage": stage, **_diagnostics(exc)}
    print(f"eptrack: error in stage '{stage}': {type(exc).__name__}: {exc}", file=sys.stderr)
    if outdir is not None:
        try:
            outdir.mkdir(parents=True, exist_ok=True)
            io.dump_json(_jsonable(diag), outdir / "error.json")
        except OSError:
            pass
    log.debug("%s", traceback.format_exc())
    return 2


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=str))


def cmd_crossings(args) -> int:
    cfg = config_from_args(args)
    outdir = cfg.output_dir()
    try:
        with _Stage("model"):
            family = cfg.family()
        with _Stage("crossings"):
            multiplets = detect(cfg, family)
        with _Stage("write"):
            outdir.mkdir(parents=True, exist_ok=True)
            io.write_crossings(multiplets, outdir / "crossings.json")
            lam = np.linspace(cfg.lambda_min, cfg.lambda_max, 401)
            lines = np.array([np.linalg.eigvalsh(np.asarray(family.eval(x, cfg.delta_start)).real)
                              for x in lam])
            (outdir / "plots").mkdir(exist_ok=True)
            svg.crossing_diagram(lam, lines, multiplets, outdir / "plots" / "crossings.svg",
                                 title=f"Hermitian crossings, {_model_label(cfg)}")
    except StageError as e:
        return _fail(e.stage, e.exc, outdir)
    kinds = {1: "onefold", 2: "twofold", 3: "threefold", 4: "fourfold"}
    for m in multiplets:
        energies = ", ".join(f"{p.energy:+.6f}" for p in m.pairs)
        print(f"lambda={m.lambda_in:.10f}  {kinds.get(m.multiplicity, f'{m.multiplicity}-fold')}"
              f"  E: {energies}")
    return 0


def cmd_run(args) -> int:
    try:
        cfg = config_from_args(args)
    except (ValueError, OSError) as exc:
        return _fail("config", exc, None)
    try:
        return run_pipeline(cfg, lambda_positive_imag=args.imag_positive)
    except StageError as e:
        return _fail(e.stage, e.exc, cfg.output_dir())


def cmd_validate(args) -> int:
    run_dir = Path(args.run_dir)
    try:
        with _Stage("load"):
            cfg_d, records, _ = load_run(run_dir)
            cfg = RunConfig.from_dict(cfg_d)
            if args.checkpoints:
                cfg.checkpoints = args.checkpoints
            family = cfg.family()
        with _Stage("validate"):
            validation = validate_records(records, family, cfg)
            io.dump_json({"clusters": validation}, run_dir / "validation.json")
    except StageError as e:
        return _fail(e.stage, e.exc, run_dir)
    for v in validation:
        for c in v["checkpoints"]:
            print(f"cluster {v['cluster']:>3}  delta={c['delta']:<6g} discrepancy={c['discrepancy']:.3e}"
                  f"  ep={c['is_ep']}")
    return 0 if _validation_ok(validation) else 1


def cmd_sweep(args) -> int:
    d = {k: getattr(args, k) for k in ("model", "n", "parity", "omega", "output")
         if getattr(args, k) is not None}
    try:
        cfg = config_from_args(argparse.Namespace(config=args.config, **d))
    except (ValueError, OSError) as exc:
        return _fail("config", exc, None)
    outdir = cfg.output_dir()
    try:
        with _Stage("model"):
            family = cfg.family()
        with _Stage("sweep"):
            lam = np.linspace(args.lambda_min, args.lambda_max, args.lambda_points)
            sweep = oracle.sweep_spectrum(family, lam, args.deltas)
        with _Stage("write"):
            outdir.mkdir(parents=True, exist_ok=True)
            io.write_sweep_csv(sweep, outdir / "sweep.csv")
            (outdir / "plots").mkdir(exist_ok=True)
            svg.spectrum_panels(sweep, outdir / "plots" / "spectrum.svg")
    except StageError as e:
        return _fail(e.stage, e.exc, outdir)
    print(f"wrote {outdir / 'sweep.csv'}")
    return 0


def cmd_report(args) -> int:
    try:
        print(report_summary(args.run_dir))
    except (OSError, ValueError, KeyError) as exc:
        return _fail("report", exc, None)
    return 0


COMMANDS = {"crossings": cmd_crossings, "run": cmd_run, "validate": cmd_validate,
            "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
