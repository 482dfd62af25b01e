"""Experiment harness: config parsing, prequential runs, reports.

A plan is a (dataset x method x seed) grid.  Stream construction depends on
the master seed, dataset name, and run seed only -- never the method id -- so
method comparisons are paired on identical instance orders.  Everything
written by a run is a pure function of (plan, seeds) except wall times,
which go to a separate timings file.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import yaml

from . import streams
from .baselines import (
    AUTO,
    FixedCosts,
    SumCosts,
    METHOD_IDS,
    hybrid_scheme,
    over_scheme,
    poisson_repeat_count,
    under_scheme,
)
from .core import KernelModel, LinearModel, LossKind, SoftmaxModel, label_from_score, loss_and_gradient_factor
from .exceptions import ConfigError, EmptyStreamError, UnknownMethodError
from .harmonizer import NEG, POS, HarmonizerState, export_alpha_trace
from .metrics import (
    MetricLedger,
    auc,
    average_rank_table,
    batch_oracle,
    f1,
    gii,
    gmeans,
    normalize_across_methods,
    regret_report,
)

DEFAULT_ETA = 0.3
DEFAULT_CHECKPOINTS = 20
DEFAULT_SEEDS = (0, 1, 2, 3, 4)


# -- plan ------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str | None = None
    synthetic: dict | None = None
    label_column: int = 0
    positive_label: str = "1"
    header: bool = False
    target_ir: float | None = None
    schedule: str | None = None


@dataclass(frozen=True)
class MethodSpec:
    id: str
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentPlan:
    datasets: tuple
    methods: tuple
    seeds: tuple
    master_seed: int = 0
    eta: float | str = DEFAULT_ETA      # float for constant, "inverse_sqrt" otherwise
    learner: str = "linear"             # linear | kernel
    loss: str = "hinge"                 # hinge | perceptron | softmax
    gamma: float | None = None
    normalization: str = "minmax"
    checkpoints: object = DEFAULT_CHECKPOINTS  # count or explicit index list
    out: str = "bench_out"
    compute_regret: bool = False
    alpha_trace: bool = False

    def loss_kind(self):
        return {
            "hinge": LossKind.HINGE,
            "perceptron": LossKind.PERCEPTRON,
            "softmax": LossKind.SOFTMAX,
        }[self.loss]


_TOP_KEYS = {
    "seed", "seeds", "eta", "learner", "loss", "gamma", "normalization",
    "checkpoints", "out", "compute_regret", "alpha_trace", "datasets", "methods",
}
_DATASET_KEYS = {
    "name", "path", "synthetic", "label_column", "positive_label", "header",
    "target_ir", "schedule",
}
_SYNTH_KEYS = {"d", "n", "ir", "sigma", "priors", "spread"}
_METHOD_PARAM_KEYS = {
    "ogd": set(),
    "csogd-cost": {"c_p", "c_n"},
    "csogd-sum": {"n_p", "n_n"},
    "our": {"rate"},
    "oor": {"rate"},
    "ohr": {"rate_major", "rate_minor"},
    "hgd": set(),
    "hgd-dynamic": {"lam"},
}
MULTICLASS_METHODS = {"ogd", "hgd"}


def _reject_unknown(mapping, allowed, where):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def parse_config(path):
    """Load and validate a YAML experiment config into an ExperimentPlan."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    _reject_unknown(raw, _TOP_KEYS, str(path))

    for req in ("datasets", "methods"):
        if not raw.get(req):
            raise ConfigError(f"{path}: missing or empty required key {req!r}")

    datasets = tuple(_parse_dataset(d, i, path) for i, d in enumerate(raw["datasets"]))
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: duplicate dataset names")

    methods = tuple(_parse_method(m, i, path) for i, m in enumerate(raw["methods"]))
    mnames = [m.name for m in methods]
    if len(set(mnames)) != len(mnames):
        raise ConfigError(f"{path}: duplicate method names; give variants a 'name'")

    seeds = raw.get("seeds", list(DEFAULT_SEEDS))
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError(f"{path}: seeds must be a non-empty list")

    eta = raw.get("eta", DEFAULT_ETA)
    if isinstance(eta, str):
        if eta != "inverse_sqrt":
            raise ConfigError(f"{path}: eta must be a positive number or 'inverse_sqrt'")
    elif not isinstance(eta, (int, float)) or eta <= 0:
        raise ConfigError(f"{path}: eta must be positive")

    loss = raw.get("loss", "hinge")
    if loss not in ("hinge", "perceptron", "softmax"):
        raise ConfigError(f"{path}: unknown loss {loss!r}")
    learner = raw.get("learner", "linear")
    if learner not in ("linear", "kernel"):
        raise ConfigError(f"{path}: unknown learner {learner!r}")
    normalization = raw.get("normalization", "minmax")
    if normalization not in ("minmax", "zscore", "none"):
        raise ConfigError(f"{path}: unknown normalization {normalization!r}")

    checkpoints = raw.get("checkpoints", DEFAULT_CHECKPOINTS)
    if isinstance(checkpoints, list):
        if not all(isinstance(c, int) and c > 0 for c in checkpoints):
            raise ConfigError(f"{path}: explicit checkpoints must be positive integers")
    elif not isinstance(checkpoints, int) or checkpoints < 1:
        raise ConfigError(f"{path}: checkpoints must be a positive count or index list")

    plan = ExperimentPlan(
        datasets=datasets,
        methods=methods,
        seeds=tuple(seeds),
        master_seed=int(raw.get("seed", 0)),
        eta=eta,
        learner=learner,
        loss=loss,
        gamma=raw.get("gamma"),
        normalization=normalization,
        checkpoints=checkpoints,
        out=str(raw.get("out", "bench_out")),
        compute_regret=bool(raw.get("compute_regret", False)),
        alpha_trace=bool(raw.get("alpha_trace", False)),
    )
    _validate_plan(plan)
    return plan


def _parse_dataset(entry, index, path):
    where = f"{path}: datasets[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: must be a mapping")
    _reject_unknown(entry, _DATASET_KEYS, where)
    if "name" not in entry:
        raise ConfigError(f"{where}: missing required key 'name'")
    if ("path" in entry) == ("synthetic" in entry):
        raise ConfigError(f"{where}: exactly one of 'path' or 'synthetic' required")
    synth = entry.get("synthetic")
    if synth is not None:
        _reject_unknown(synth, _SYNTH_KEYS, f"{where}.synthetic")
        if "d" not in synth or "n" not in synth:
            raise ConfigError(f"{where}.synthetic: 'd' and 'n' are required")
        if ("ir" in synth) == ("priors" in synth):
            raise ConfigError(f"{where}.synthetic: exactly one of 'ir' or 'priors' required")
    if entry.get("schedule") is not None:
        streams.parse_schedule(entry["schedule"])  # fail fast on syntax
    if entry.get("target_ir") is not None and entry["target_ir"] < 1:
        raise ConfigError(f"{where}: target_ir must be >= 1")
    return DatasetSpec(
        name=str(entry["name"]),
        path=entry.get("path"),
        synthetic=synth,
        label_column=int(entry.get("label_column", 0)),
        positive_label=str(entry.get("positive_label", "1")),
        header=bool(entry.get("header", False)),
        target_ir=entry.get("target_ir"),
        schedule=entry.get("schedule"),
    )


def _parse_method(entry, index, path):
    where = f"{path}: methods[{index}]"
    if isinstance(entry, str):
        entry = {"id": entry}
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: must be a method id or mapping")
    if "id" not in entry:
        raise ConfigError(f"{where}: missing required key 'id'")
    mid = entry["id"]
    if mid not in METHOD_IDS:
        raise UnknownMethodError(mid)
    allowed = {"id", "name"} | _METHOD_PARAM_KEYS[mid]
    _reject_unknown(entry, allowed, where)
    params = {k: entry[k] for k in entry if k not in ("id", "name")}
    _build_method_state(mid, params)  # fail fast on bad parameters
    return MethodSpec(id=mid, name=str(entry.get("name", mid)), params=params)


def _validate_plan(plan):
    multiclass = plan.loss == "softmax"
    for ds in plan.datasets:
        ds_multi = bool(ds.synthetic and ds.synthetic.get("priors") and len(ds.synthetic["priors"]) > 2)
        if ds_multi != multiclass:
            raise ConfigError(
                f"dataset {ds.name!r}: softmax loss and multiclass data must go together"
            )
    if multiclass:
        if plan.learner != "linear":
            raise ConfigError("multiclass runs use the linear softmax learner")
        for m in plan.methods:
            if m.id not in MULTICLASS_METHODS:
                raise ConfigError(f"method {m.id!r} is binary-only")


# -- deterministic seed derivation ----------------------------------------------


def derive_seed(*parts):
    """Stable 64-bit seed from string parts (platform independent)."""
    key = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


# -- stream construction ----------------------------------------------------------


def build_stream(ds, plan, run_seed):
    """Materialize the ordered stream for one run (method independent)."""
    if ds.synthetic is not None:
        synth = ds.synthetic
        gen_seed = derive_seed(plan.master_seed, ds.name, "gen", run_seed)
        if "priors" in synth:
            base = streams.class_axis_gaussians(
                d=synth["d"], n=synth["n"], priors=tuple(synth["priors"]),
                sigma=synth.get("sigma", 1.0), spread=synth.get("spread", 1.0),
                seed=gen_seed, name=ds.name,
            )
        else:
            base = streams.two_gaussians(
                d=synth["d"], n=synth["n"], ir=synth["ir"],
                sigma=synth.get("sigma", 1.0), seed=gen_seed, name=ds.name,
            )
    else:
        p = Path(ds.path)
        if p.suffix == ".csv":
            base = streams.load_csv(p, ds.label_column, ds.positive_label,
                                    header=ds.header, name=ds.name)
        else:
            base = streams.load_libsvm(p, name=ds.name)
    if plan.normalization != "none":
        base = streams.normalize(base, plan.normalization)
    if ds.target_ir is not None:
        base = streams.resample_to_ir(base, ds.target_ir,
                                      derive_seed(plan.master_seed, ds.name, "ir", run_seed))
    if ds.schedule is not None:
        return streams.schedule_stream(base, ds.schedule,
                                       derive_seed(plan.master_seed, ds.name, "sched", run_seed))
    return streams.shuffle(base, derive_seed(plan.master_seed, ds.name, "order", run_seed))


# -- prequential runner -----------------------------------------------------------


def _build_method_state(method_id, params):
    """Per-run mutable pieces for a method: (kind, state)."""
    if method_id == "ogd":
        return ("weight", lambda label, harm: 1.0)
    if method_id == "csogd-cost":
        scheme = FixedCosts(c_p=params.get("c_p", 0.95), c_n=params.get("c_n", 0.05))
        return ("weight", lambda label, harm: scheme.multiplier(label, None))
    if method_id == "csogd-sum":
        scheme = SumCosts(n_p=params.get("n_p", 0.5), n_n=params.get("n_n", 0.5))
        return ("weight",
                lambda label, harm: scheme.multiplier(label, (harm.count[NEG], harm.count[POS])))
    if method_id == "our":
        return ("resample", under_scheme(params.get("rate", AUTO)))
    if method_id == "oor":
        return ("resample", over_scheme(params.get("rate", AUTO)))
    if method_id == "ohr":
        return ("resample", hybrid_scheme(params.get("rate_major", AUTO),
                                          params.get("rate_minor", AUTO)))
    if method_id == "hgd":
        return ("weight", lambda label, harm: harm.compute_alpha(label))
    if method_id == "hgd-dynamic":
        lam = params.get("lam", 0.99)
        if not 0.0 < lam < 1.0:
            raise ConfigError("hgd-dynamic 'lam' must lie in (0, 1)")
        return ("weight", lambda label, harm: harm.compute_alpha(label))
    raise UnknownMethodError(method_id)


def checkpoint_indices(n, checkpoints):
    if isinstance(checkpoints, list):
        return sorted({c for c in checkpoints if 1 <= c <= n})
    count = min(checkpoints, n)
    return sorted({int(round(n * k / count)) for k in range(1, count + 1)})


@dataclass
class RunOutcome:
    ledger: MetricLedger
    harmonizer: HarmonizerState
    model: object
    checkpoints: list          # (t, quality, gi, cum_loss); quality = gmeans or accuracy
    alpha_rows: list | None


def make_learner(plan_learner, loss_kind, d, n_classes=2, gamma=None):
    if loss_kind is LossKind.SOFTMAX:
        return SoftmaxModel(n_classes, d)
    if plan_learner == "kernel":
        return KernelModel(d, gamma=gamma)
    return LinearModel(d)


def run_prequential(stream, method_id, method_params=None, *, loss_kind=LossKind.HINGE,
                    learner="linear", eta=DEFAULT_ETA, gamma=None, checkpoints=DEFAULT_CHECKPOINTS,
                    rng=None, collect_alpha_trace=False):
    """One test-then-train pass of a method over a materialized stream.

    Every instance is scored and recorded before it trains the model.  The
    harmonizer records one entry per instance for every method, so the
    gradient-imbalance trace is measured on the updates actually applied.
    """
    X, y = stream.X, stream.y
    n = len(y)
    if n == 0:
        raise EmptyStreamError("stream has no instances")
    binary = -1 in set(np.unique(y).tolist())
    n_classes = 2 if binary else int(y.max()) + 1
    kind, state = _build_method_state(method_id, method_params or {})
    mode = "dynamic" if method_id == "hgd-dynamic" else "static"
    lam = (method_params or {}).get("lam", 0.99)
    harm = HarmonizerState(n_classes=n_classes, binary=binary, mode=mode, lam=lam)
    ledger = MetricLedger(binary=binary, n_classes=n_classes)
    model = make_learner(learner, loss_kind, stream.d, n_classes, gamma)
    if rng is None:
        rng = np.random.default_rng(0)

    inv_sqrt = eta == "inverse_sqrt"
    eta0 = None if inv_sqrt else float(eta)
    cps = checkpoint_indices(n, checkpoints)
    cp_set = set(cps)
    cp_rows = []
    alpha_rows = [] if collect_alpha_trace else None

    is_linear = isinstance(model, LinearModel)
    xsq = np.einsum("ij,ij->i", X, X) if not isinstance(model, KernelModel) else None

    counts = harm.count
    for i in range(n):
        x = X[i]
        yt = int(y[i])
        t = i + 1
        score = model.score(x)
        ledger.record_prediction(
            score if binary else float(np.max(score)), label_from_score(score), yt
        )
        loss, g = loss_and_gradient_factor(loss_kind, score, yt)
        ledger.record_loss(loss)
        eta_t = 1.0 / math.sqrt(t) if inv_sqrt else eta0
        if binary:
            gsq = g * g * ((xsq[i] + 1.0) if is_linear else 2.0)
        else:
            gsq = float(g @ g) * (xsq[i] + 1.0)
        G = eta_t * eta_t * gsq

        if kind == "weight":
            alpha = state(yt, harm)
            if loss > 0.0:
                model.step(x, eta_t * alpha * g)
            eff = alpha * alpha * G
        else:
            rate = state.rate_for(yt, (counts[NEG], counts[POS]))
            k = 1 if rate is None else poisson_repeat_count(rate, rng)
            alpha = float(k)
            eff = 0.0
            for rep in range(k):
                if rep == 0:
                    loss_r, g_r, gsq_r = loss, g, gsq
                else:
                    s_r = model.score(x)
                    loss_r, g_r = loss_and_gradient_factor(loss_kind, s_r, yt)
                    gsq_r = g_r * g_r * ((xsq[i] + 1.0) if is_linear else 2.0)
                if loss_r > 0.0:
                    model.step(x, eta_t * g_r)
                    eff += eta_t * eta_t * gsq_r

        harm.record_step(yt, alpha, G, eff)
        gi_t = harm.gi()
        ledger.record_gi(gi_t)
        if alpha_rows is not None:
            alpha_rows.append((t, yt, alpha, G, gi_t))
        if t in cp_set:
            quality = gmeans(ledger) if binary else _accuracy(ledger)
            cp_rows.append((t, quality, gi_t, ledger.cumulative_loss))

    return RunOutcome(ledger, harm, model, cp_rows, alpha_rows)


def _accuracy(ledger):
    total = sum(ledger.class_total)
    return sum(ledger.class_correct) / total if total else 0.0


# -- the grid ----------------------------------------------------------------------


@dataclass
class RunResult:
    dataset: str
    method: str
    seed: int
    n: int = 0
    auc: float | None = None
    gmeans: float | None = None
    f1: float | None = None
    gii: float | None = None
    cum_loss: float | None = None
    accuracy: float | None = None
    regret: float | None = None
    wall_time: float = 0.0
    trace_path: str | None = None
    alpha_trace_path: str | None = None
    error: str | None = None

    def sort_key(self):
        return (self.dataset, self.method, self.seed)


def execute_run(plan, ds_index, m_index, seed):
    ds = plan.datasets[ds_index]
    method = plan.methods[m_index]
    started = time.perf_counter()
    try:
        stream = build_stream(ds, plan, seed)
        rng = np.random.default_rng(derive_seed(plan.master_seed, ds.name, method.name, seed))
        outcome = run_prequential(
            stream, method.id, method.params,
            loss_kind=plan.loss_kind(), learner=plan.learner, eta=plan.eta,
            gamma=plan.gamma, checkpoints=plan.checkpoints, rng=rng,
            collect_alpha_trace=plan.alpha_trace,
        )
    except Exception as exc:  # per-run isolation: one failure must not sink the grid
        return RunResult(dataset=ds.name, method=method.name, seed=seed,
                         wall_time=time.perf_counter() - started, error=str(exc))

    ledger = outcome.ledger
    result = RunResult(
        dataset=ds.name, method=method.name, seed=seed, n=ledger.n_records,
        gii=gii(ledger), cum_loss=ledger.cumulative_loss,
        wall_time=time.perf_counter() - started,
    )
    if ledger.binary:
        result.auc = auc(ledger)
        result.gmeans = gmeans(ledger)
        result.f1 = f1(ledger)
    else:
        result.accuracy = _accuracy(ledger)

    regret_trace = None
    if plan.compute_regret:
        stream = build_stream(ds, plan, seed)
        oracle = batch_oracle(stream, plan.loss_kind(),
                              learner_family=plan.learner, gamma=plan.gamma)
        cps = [t for t, *_ in outcome.checkpoints]
        report = regret_report(ledger.losses, oracle.per_instance_losses, cps)
        result.regret = report.regret
        regret_trace = dict(report.avg_regret_trace)

    out = Path(plan.out)
    run_id = f"{ds.name}__{method.name}__s{seed}"
    traces = out / "traces"
    traces.mkdir(parents=True, exist_ok=True)
    trace_path = traces / f"{run_id}.csv"
    _write_checkpoint_trace(trace_path, outcome.checkpoints, regret_trace, ledger.binary)
    result.trace_path = str(trace_path)
    if outcome.alpha_rows is not None:
        ap = traces / f"{run_id}.alpha.csv"
        export_alpha_trace(ap, outcome.alpha_rows)
        result.alpha_trace_path = str(ap)
    runs_dir = out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    summary = {k: v for k, v in asdict(result).items() if k != "wall_time"}
    (runs_dir / f"{run_id}.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return result


def _write_checkpoint_trace(path, rows, regret_trace, binary):
    quality_col = "gmeans" if binary else "accuracy"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", quality_col, "gi", "avg_regret", "cum_loss"])
        for t, quality, gi_t, cum_loss in rows:
            reg = "" if regret_trace is None or t not in regret_trace else repr(regret_trace[t])
            w.writerow([t, repr(quality), "" if gi_t is None else repr(gi_t), reg, repr(cum_loss)])


def _run_cell(args):
    plan, di, mi, seed = args
    return execute_run(plan, di, mi, seed)


def run_experiment(plan, jobs=1):
    """Run the full grid; results come back in (dataset, method, seed) order."""
    cells = [
        (plan, di, mi, seed)
        for di in range(len(plan.datasets))
        for mi in range(len(plan.methods))
        for seed in plan.seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]
    return sorted(results, key=RunResult.sort_key)


# -- reports -----------------------------------------------------------------------


_METRIC_COLUMNS = ("auc", "gmeans", "f1", "gii", "accuracy", "cum_loss", "regret")
HIGHER_IS_BETTER = {"auc": True, "gmeans": True, "f1": True, "gii": False, "accuracy": True}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def aggregate_results(results):
    """Per (dataset, method) seed means/stds and normalized tables with ranks."""
    ok = [r for r in results if r.error is None]
    by_cell = {}
    for r in ok:
        by_cell.setdefault((r.dataset, r.method), []).append(r)
    means = {}
    stds = {}
    for (ds, m), cell in by_cell.items():
        for metric in _METRIC_COLUMNS:
            vals = [getattr(r, metric) for r in cell if getattr(r, metric) is not None]
            if not vals:
                continue
            means.setdefault(metric, {}).setdefault(ds, {})[m] = float(np.mean(vals))
            stds.setdefault(metric, {}).setdefault(ds, {})[m] = float(np.std(vals))

    normalized = {}
    ranks = {}
    for metric, table in means.items():
        if metric in HIGHER_IS_BETTER:
            norm, rank = normalize_across_methods(table, HIGHER_IS_BETTER[metric])
            normalized[metric] = norm
            ranks[metric] = rank
    avg_ranks = {metric: average_rank_table(r) for metric, r in ranks.items()}
    return {
        "mean": means,
        "std": stds,
        "normalized": normalized,
        "ranks": ranks,
        "avg_ranks": avg_ranks,
    }


def emit_report(results, out_dir, fmt="csv"):
    """Write per-run and aggregated tables; returns the written paths.

    Deterministic given results (wall times go to timings.csv only).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    agg = aggregate_results(results)
    report = {
        "runs": [
            {k: v for k, v in asdict(r).items() if k != "wall_time"} for r in results
        ],
        "aggregate": agg,
        "failures": [
            {"dataset": r.dataset, "method": r.method, "seed": r.seed, "error": r.error}
            for r in results
            if r.error is not None
        ],
    }

    if fmt == "json":
        path = out / "report.json"
        path.write_text(json.dumps(report, indent=1, sort_keys=True))
        written.append(path)
    else:
        path = out / "runs.csv"
        cols = ["dataset", "method", "seed", "n", "auc", "gmeans", "f1", "gii",
                "cum_loss", "accuracy", "regret", "error"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in results:
                w.writerow([_fmt(getattr(r, c)) for c in cols])
        written.append(path)

        for table_name in ("mean", "normalized", "ranks"):
            tpath = out / f"aggregate_{table_name}.csv"
            _write_metric_tables(tpath, agg[table_name])
            written.append(tpath)

        rpath = out / "ranks.csv"
        with open(rpath, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["metric", "method", "avg_rank"])
            for metric in sorted(agg["avg_ranks"]):
                for method in sorted(agg["avg_ranks"][metric]):
                    w.writerow([metric, method, repr(agg["avg_ranks"][metric][method])])
        written.append(rpath)

        jpath = out / "report.json"
        jpath.write_text(json.dumps(report, indent=1, sort_keys=True))
        written.append(jpath)

    tpath = out / "timings.csv"
    with open(tpath, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "method", "seed", "wall_time_s"])
        for r in results:
            w.writerow([r.dataset, r.method, r.seed, f"{r.wall_time:.6f}"])
    written.append(tpath)
    return written


def _write_metric_tables(path, tables):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "dataset", "method", "value"])
        for metric in sorted(tables):
            for ds in sorted(tables[metric]):
                for method in sorted(tables[metric][ds]):
                    w.writerow([metric, ds, method, repr(tables[metric][ds][method])])


def load_report(out_dir):
    path = Path(out_dir) / "report.json"
    if not path.exists():
        raise ConfigError(f"no report.json under {out_dir}")
    return json.loads(path.read_text())


def reemit_report(out_dir, fmt):
    """Rebuild report files in the requested format from stored run records."""
    report = load_report(out_dir)
    results = [
        RunResult(**{k: v for k, v in rec.items()}) for rec in report["runs"]
    ]
    return emit_report(results, out_dir, fmt)
