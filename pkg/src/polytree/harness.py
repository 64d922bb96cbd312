"""Monte-Carlo sweeps: generate, sample, learn, score, summarize.

Every random quantity is drawn from a stream derived from the master seed
and the trial's grid coordinates, so a sweep is reproducible regardless of
how many workers run it or in which order trials finish.
"""
from __future__ import annotations

import csv
import datetime as _dt
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import FormatError, PolytreeError
from .generate import GenConfig, generate_sem, hardness_cpdag_member, hardness_skeleton_member
from .graphs import cpdag_of_polytree
from .learn import LearnConfig, learn
from .metrics import EdgeClassification, all_metrics, classify_edges
from .precision import estimate_inverse_correlation, l1_errors, true_inverse_correlation
from .sem import LinearSem, NoiseFamily, sample

log = logging.getLogger(__name__)

MODES = ("standard", "hardness_skeleton", "hardness_cpdag", "precision")

TRIAL_COLUMNS = [
    "mode", "p", "n", "rho_min", "rho_max", "d_in_max", "omega_min", "alpha", "seed", "trial",
    "correct", "wrong_dir", "missing", "extra",
    "fdr_sk", "ji_sk", "fdr_cpdag", "ji_cpdag", "exact_sk", "exact_cpdag",
    "theta_diag_l1", "theta_offdiag_l1", "status", "wall_ms", "timestamp",
]
VOLATILE_COLUMNS = ("wall_ms", "timestamp")
SUMMARY_KEYS = ["mode", "p", "n", "rho_min", "rho_max", "d_in_max", "omega_min", "alpha"]
SUMMARY_METRICS = [
    "fdr_sk", "ji_sk", "fdr_cpdag", "ji_cpdag", "exact_sk", "exact_cpdag",
    "theta_diag_l1", "theta_offdiag_l1",
]
SUMMARY_COLUMNS = SUMMARY_KEYS + ["n_trials", "n_failed"] + [
    f"{m}_{s}" for m in SUMMARY_METRICS for s in ("mean", "ci95")
]


def derive_seed(master_seed: int, *key: int) -> int:
    """64-bit seed for the stream identified by ``key`` under ``master_seed``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SweepConfig:
    p: tuple[int, ...] = (100,)
    d_in_max: tuple[int, ...] = (10,)
    rho_min: tuple[float, ...] = (0.2, 0.3, 0.4)
    rho_max: float = 0.8
    omega_min: float = 0.1
    n_values: tuple[int, ...] = (50, 100, 200, 400, 600, 800, 1000)
    repeats: int = 100
    alpha: float = 0.1
    rho_crit: float | None = None
    noise: NoiseFamily = NoiseFamily.GAUSSIAN
    master_seed: int = 0
    mode: str = "standard"
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if not self.n_values or min(self.n_values) < 3:
            raise ValueError("n_values must be nonempty with every n >= 3")
        object.__setattr__(self, "noise", NoiseFamily(self.noise))
        LearnConfig(self.alpha, self.rho_crit)

    def learn_config(self) -> LearnConfig:
        return LearnConfig(self.alpha, self.rho_crit)

    def points(self) -> list[tuple[int, float, int]]:
        """Grid points ``(p, rho_min, d_in_max)``; each owns one model (or ensemble)."""
        return list(itertools.product(self.p, self.rho_min, self.d_in_max))


_LIST_KEYS = {"p": int, "d_in_max": int, "rho_min": float, "n_values": int}
_SCALAR_KEYS = {
    "rho_max": float, "omega_min": float, "repeats": int, "alpha": float,
    "rho_crit": float, "noise": str, "master_seed": int, "mode": str, "workers": int,
}


def parse_config(text: str) -> SweepConfig:
    """Flat ``key=value`` lines; list-valued keys take comma-separated values."""
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise FormatError(f"line {lineno}: expected key=value")
        try:
            if key in _LIST_KEYS:
                kwargs[key] = tuple(_LIST_KEYS[key](v) for v in value.split(",") if v.strip())
            elif key in _SCALAR_KEYS:
                kwargs[key] = None if value.lower() == "none" else _SCALAR_KEYS[key](value)
            else:
                raise FormatError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    try:
        return SweepConfig(**kwargs)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def format_config(cfg: SweepConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, NoiseFamily):
            value = value.value
        lines.append(f"{f.name}={value}")
    return "\n".join(lines) + "\n"


@dataclass
class TrialRecord:
    mode: str
    p: int
    n: int
    rho_min: float
    rho_max: float
    d_in_max: int
    omega_min: float
    alpha: float
    seed: int
    trial: int
    correct: int | None = None
    wrong_dir: int | None = None
    missing: int | None = None
    extra: int | None = None
    fdr_sk: float | None = None
    ji_sk: float | None = None
    fdr_cpdag: float | None = None
    ji_cpdag: float | None = None
    exact_sk: bool | None = None
    exact_cpdag: bool | None = None
    theta_diag_l1: float | None = None
    theta_offdiag_l1: float | None = None
    status: str = "ok"
    wall_ms: float = 0.0
    timestamp: str = ""

    def as_row(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in TRIAL_COLUMNS]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


@dataclass(frozen=True, eq=False)
class _Point:
    """One grid point: its model source and the coordinates written to every row.

    Standard points carry their single generated model; hardness points
    rebuild family members on demand (trial ``t`` uses member ``t mod M``).
    """
    index: int
    mode: str
    p: int
    rho_min: float
    rho_max: float
    d_in_max: int
    omega_min: float
    model: LinearSem | None = None
    n_members: int = 1
    error: str | None = None

    def member(self, trial: int) -> LinearSem:
        k = trial % self.n_members
        if self.mode == "hardness_skeleton":
            return hardness_skeleton_member(self.p, self.rho_min, k)
        if self.mode == "hardness_cpdag":
            return hardness_cpdag_member(self.p, self.rho_min, _nth_pair(self.p, k))
        return self.model


def _nth_pair(p: int, k: int) -> tuple[int, int]:
    # k-th pair of combinations(range(p - 1), 2) without materializing the list
    return next(itertools.islice(itertools.combinations(range(p - 1), 2), k, None))


def build_point(cfg: SweepConfig, index: int, p: int, rho_min: float, d_in_max: int) -> _Point:
    coords = dict(
        index=index, mode=cfg.mode, p=p, rho_min=rho_min, rho_max=cfg.rho_max,
        d_in_max=d_in_max, omega_min=cfg.omega_min,
    )
    try:
        if cfg.mode == "hardness_skeleton":
            first = hardness_skeleton_member(p, rho_min, 0)
            return _Point(**{**coords, "rho_max": rho_min, "d_in_max": p - 2,
                             "omega_min": float(first.omega.min())}, n_members=p - 2)
        if cfg.mode == "hardness_cpdag":
            first = hardness_cpdag_member(p, rho_min, (0, 1))
            return _Point(**{**coords, "rho_max": rho_min, "d_in_max": 2,
                             "omega_min": float(first.omega.min())}, n_members=(p - 1) * (p - 2) // 2)
        gen = GenConfig(p, d_in_max, rho_min, cfg.rho_max, cfg.omega_min)
        model = generate_sem(gen, seed=derive_seed(cfg.master_seed, 0, index))
        return _Point(**coords, model=model)
    except (PolytreeError, ValueError) as exc:
        return _Point(**coords, error=f"error:{type(exc).__name__}")


def run_trial(cfg: SweepConfig, point: _Point, n_index: int, trial: int) -> TrialRecord:
    """One sample-learn-score cycle; failures end up in ``status``."""
    n = cfg.n_values[n_index]
    seed = derive_seed(cfg.master_seed, 1, point.index, n_index, trial)
    rec = TrialRecord(
        mode=cfg.mode, p=point.p, n=n, rho_min=point.rho_min, rho_max=point.rho_max,
        d_in_max=point.d_in_max, omega_min=point.omega_min, alpha=cfg.alpha,
        seed=seed, trial=trial,
    )
    start = time.perf_counter()
    rec.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="milliseconds")
    if point.error:
        rec.status = point.error
        return rec
    try:
        model = point.member(trial)
        truth = cpdag_of_polytree(model.dag)
        data = sample(model, n, cfg.noise, seed=seed)
        result = learn(data, cfg.learn_config())
        ec = classify_edges(truth, result.cpdag)
        rec.correct, rec.wrong_dir, rec.missing, rec.extra = (
            ec.correct, ec.wrong_direction, ec.missing, ec.extra,
        )
        for name, value in all_metrics(ec).items():
            setattr(rec, name, value)
        rec.exact_sk = ec.missing == 0 and ec.extra == 0
        rec.exact_cpdag = rec.exact_sk and ec.wrong_direction == 0
        if cfg.mode == "precision" and rec.exact_cpdag:
            theta_hat = estimate_inverse_correlation(result.cpdag, result.correlations)
            rec.theta_diag_l1, rec.theta_offdiag_l1 = l1_errors(theta_hat, true_inverse_correlation(model))
    except (PolytreeError, ValueError, ArithmeticError) as exc:
        rec.status = f"error:{type(exc).__name__}"
        log.debug("trial %s failed: %s", (point.index, n_index, trial), exc)
    rec.wall_ms = round((time.perf_counter() - start) * 1000.0, 3)
    return rec


def _run_task(args):
    return run_trial(*args)


def summarize(records: list[TrialRecord]) -> list[dict]:
    """Per-(point, n) means and 1.96 standard errors over successful trials."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault(tuple(getattr(r, k) for k in SUMMARY_KEYS), []).append(r)
    rows = []
    for key, recs in groups.items():
        ok = [r for r in recs if r.status == "ok"]
        row = dict(zip(SUMMARY_KEYS, key))
        row["n_trials"] = len(recs)
        row["n_failed"] = len(recs) - len(ok)
        for m in SUMMARY_METRICS:
            vals = np.array([float(getattr(r, m)) for r in ok if getattr(r, m) is not None])
            if vals.size == 0:
                mean = ci = None
            else:
                mean = float(vals.mean())
                ci = float(1.96 * vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else None
            row[f"{m}_mean"], row[f"{m}_ci95"] = mean, ci
        rows.append(row)
    return rows


def summary_path(out: Path) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".summary.csv")


def iter_tasks(cfg: SweepConfig):
    for index, (p, rho_min, d_in_max) in enumerate(cfg.points()):
        point = build_point(cfg, index, p, rho_min, d_in_max)
        for n_index in range(len(cfg.n_values)):
            for trial in range(cfg.repeats):
                yield cfg, point, n_index, trial


def run_sweep(cfg: SweepConfig, out, workers: int | None = None) -> list[dict]:
    """Run every grid point x n x repeat; write trial rows to ``out`` and the
    per-point summary next to it.  Rows come out in grid order whatever the
    worker count."""
    out = Path(out)
    workers = cfg.workers if workers is None else workers
    records: list[TrialRecord] = []
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIAL_COLUMNS)
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = pool.map(_run_task, iter_tasks(cfg), chunksize=8)
                for rec in results:
                    writer.writerow(rec.as_row())
                    records.append(rec)
        else:
            for task in iter_tasks(cfg):
                rec = run_trial(*task)
                writer.writerow(rec.as_row())
                records.append(rec)
    summary = summarize(records)
    write_summary(summary, summary_path(out))
    failed = sum(r.status != "ok" for r in records)
    if failed:
        log.warning("%d of %d trials failed and are excluded from means", failed, len(records))
    return summary


def write_summary(rows: list[dict], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in SUMMARY_COLUMNS])


# -- reading back and verification -------------------------------------------

_INT_COLS = {"p", "n", "d_in_max", "seed", "trial", "correct", "wrong_dir", "missing", "extra"}
_BOOL_COLS = {"exact_sk", "exact_cpdag"}
_STR_COLS = {"mode", "status", "timestamp"}


def _parse_cell(col: str, text: str):
    if text == "":
        return None
    if col in _STR_COLS:
        return text
    if col in _BOOL_COLS:
        return text == "1"
    if col in _INT_COLS:
        return int(text)
    return float(text)


def read_trials(path) -> list[TrialRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRIAL_COLUMNS:
            raise FormatError("trial CSV header does not match the expected schema")
        records = []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(TRIAL_COLUMNS):
                raise FormatError(f"line {lineno}: expected {len(TRIAL_COLUMNS)} fields")
            try:
                values = {c: _parse_cell(c, v) for c, v in zip(TRIAL_COLUMNS, row)}
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from None
            values["status"] = values["status"] or ""
            values["timestamp"] = values["timestamp"] or ""
            values["wall_ms"] = values["wall_ms"] or 0.0
            records.append(TrialRecord(**values))
    return records


def read_summary(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SUMMARY_COLUMNS:
            raise FormatError("summary CSV header does not match the expected schema")
        return list(reader)


def csv_body(path) -> str:
    """Trial CSV with the run-dependent columns (wall time, timestamp) removed."""
    keep = [i for i, c in enumerate(TRIAL_COLUMNS) if c not in VOLATILE_COLUMNS]
    with Path(path).open(newline="") as fh:
        return "".join(",".join(row[i] for i in keep) + "\n" for row in csv.reader(fh))


def _close(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


def check_record(rec: TrialRecord) -> list[str]:
    """Problems with one row: metrics and exactness flags must follow from counts."""
    if rec.status != "ok":
        return []
    counts = (rec.correct, rec.wrong_dir, rec.missing, rec.extra)
    if None in counts:
        return ["missing edge counts"]
    try:
        ec = EdgeClassification.from_counts(*counts)
    except ValueError as exc:
        return [str(exc)]
    problems = []
    for name, value in all_metrics(ec).items():
        if not _close(getattr(rec, name), value):
            problems.append(f"{name}={getattr(rec, name)} but counts give {value}")
    exact_sk = rec.missing == 0 and rec.extra == 0
    if rec.exact_sk != exact_sk:
        problems.append("exact_sk inconsistent with counts")
    if rec.exact_cpdag != (exact_sk and rec.wrong_dir == 0):
        problems.append("exact_cpdag inconsistent with counts")
    return problems


def verify(trial_csv, summary_csv=None) -> list[str]:
    """Recompute metrics from counts and the summary from trial rows.

    Returns a list of human-readable problems (empty when consistent).
    """
    records = read_trials(trial_csv)
    problems = []
    for lineno, rec in enumerate(records, 2):
        problems += [f"line {lineno}: {msg}" for msg in check_record(rec)]
    summary_csv = summary_path(Path(trial_csv)) if summary_csv is None else Path(summary_csv)
    if summary_csv.exists():
        stored = read_summary(summary_csv)
        fresh = summarize(records)
        if len(stored) != len(fresh):
            problems.append(f"summary has {len(stored)} rows, trials give {len(fresh)}")
        for k, (s_row, f_row) in enumerate(zip(stored, fresh)):
            for col in SUMMARY_COLUMNS:
                expect = f_row[col]
                got = s_row[col]
                if isinstance(expect, str):
                    ok = got == expect
                else:
                    ok = _close(None if got == "" else float(got), None if expect is None else float(expect))
                if not ok:
                    problems.append(f"summary row {k + 2}: {col}={got!r}, recomputed {_fmt(expect)!r}")
    return problems


__all__ = [
    "SweepConfig",
    "TrialRecord",
    "TRIAL_COLUMNS",
    "SUMMARY_COLUMNS",
    "build_point",
    "csv_body",
    "derive_seed",
    "format_config",
    "parse_config",
    "read_summary",
    "read_trials",
    "run_sweep",
    "run_trial",
    "summarize",
    "summary_path",
    "verify",
]
