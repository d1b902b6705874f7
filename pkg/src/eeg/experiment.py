"""End-to-end experiment orchestration and artifact persistence.

Run directory layout::

    config.json            resolved configuration echo
    report.json            flat metrics report (see ``REPORT_KEYS``)
    curve.csv              ensembled allocator test curve
    curves_reference.csv   oracle / random / single-allocator test curves
    policy.csv             per-observation test allocation for every grid q
    partition.csv          test sufficiency partition (partition_train.csv,
                           partition_validation.csv alongside)
    models/                g.json, b.json, allocator.json, scaler.json
    INCOMPLETE             present only if a stage failed
"""

from __future__ import annotations

import csv
import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import allocation as al
from .config import ExperimentConfig
from .dataset import (REGRESSION, Dataset, Scaler, SplitDataset, apply_scaler, fit_scaler,
                      gen_complementary_2d, load_csv, split)
from .metrics import (MetricsReport, PerformanceCurve, REPORT_COLUMNS, auc, curve, mean_sd,
                      metrics_report, ppcr, s_acc)
from .models import (PredictionModel, evaluation_loss, grid_search, load_model, model_to_json,
                     save_model)
from .sufficiency import (REGRESSION_EPSILON, SufficiencyConfig, SufficiencyPartition,
                          default_mode, epsilon_from_validation, partition)

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class _stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# data and components

def load_data(cfg: ExperimentConfig) -> Dataset:
    if cfg.data_source == "synthetic":
        return gen_complementary_2d(cfg.synthetic_n, cfg.synthetic_seed, cfg.synthetic_noise)
    return load_csv(cfg.csv_path, cfg.task, cfg.target_column)


def prepare(cfg: ExperimentConfig, seed: int) -> tuple[SplitDataset, Scaler]:
    with _stage("data"):
        data = load_data(cfg)
    with _stage("split"):
        parts = split(data, cfg.split_ratios, seed)
    with _stage("scale"):
        scaler = fit_scaler(parts.train)
        scaled = SplitDataset(apply_scaler(scaler, parts.train),
                              apply_scaler(scaler, parts.validation),
                              apply_scaler(scaler, parts.test), seed)
    return scaled, scaler


@dataclass
class Candidate:
    role: str
    family: str
    model: PredictionModel
    chosen: dict
    validation_loss: float
    cv: dict | None = None


def fit_candidates(cfg: ExperimentConfig, data: SplitDataset, seed: int) -> dict[str, list[Candidate]]:
    out = {"g": [], "b": []}
    for role, families in (("g", cfg.glass_families), ("b", cfg.black_families)):
        for fam in families:
            rep = grid_search(fam, cfg.grid(fam), data.train, cfg.cv_folds, seed)
            out[role].append(Candidate(role, fam, rep.model, rep.chosen,
                                       evaluation_loss(rep.model, data.validation), rep.to_dict()))
    return out


# ---------------------------------------------------------------------------
# allocation for one (g, b) pair

@dataclass
class PairResult:
    g: Candidate
    b: Candidate
    sufficiency: SufficiencyConfig
    allocator: al.LearnedAllocator
    tags: list[str]
    validation_auc: float
    validation_partition: SufficiencyPartition
    test_partition: SufficiencyPartition
    policy: al.AllocationPolicy
    curves: dict[str, PerformanceCurve]
    random_values: np.ndarray
    random_sampled: np.ndarray
    predicted_percentile: np.ndarray
    estimated_category: np.ndarray
    report: MetricsReport
    train_partition: SufficiencyPartition = field(repr=False, default=None)

    @property
    def test_auc(self) -> float:
        return self.report.auc


def sufficiency_config(cfg: ExperimentConfig, task: str, g, b, validation: Dataset) -> SufficiencyConfig:
    mode = cfg.sufficiency_mode or default_mode(task)
    eps = epsilon_from_validation(g, b, validation) if mode == REGRESSION_EPSILON else None
    return SufficiencyConfig(mode, eps)


def feature_set_for(cfg: ExperimentConfig, task: str):
    return al.normalize_feature_set(cfg.feature_set) if cfg.feature_set \
        else al.default_feature_set(task)


def evaluate_pair(cfg: ExperimentConfig, data: SplitDataset, g: Candidate, b: Candidate,
                  seed: int, feature_set=None, allocator: al.LearnedAllocator | None = None) -> PairResult:
    task = data.train.task
    q_grid = cfg.grid_values()
    with _stage("epsilon"):
        suff = sufficiency_config(cfg, task, g.model, b.model, data.validation)
    with _stage("partition"):
        train_part = partition(g.model, b.model, data.train, suff)
        val_part = partition(g.model, b.model, data.validation, suff)
        test_part = partition(g.model, b.model, data.test, suff)
    with _stage("allocator"):
        if allocator is None:
            allocator = al.train_learned_allocator(
                data.train, g.model, b.model, suff, feature_set or feature_set_for(cfg, task),
                cfg.allocator_params, seed, cfg.cv_folds)

    def scores(ds: Dataset):
        go, bo = g.model.outputs(ds.X), b.model.outputs(ds.X)
        return allocator.predict(ds.X, go, bo), al.feature_independent_scores(go, bo, task)

    with _stage("ensemble"):
        val_dep, val_ind = scores(data.validation)
        tags = al.ensemble_allocators(val_dep, val_ind, val_part, q_grid)
        val_policy = al.ensembled_policy(val_dep, val_ind, tags, q_grid, data.validation.ids)
        val_auc = auc(curve(val_policy, val_part))
    with _stage("evaluate"):
        ids = data.test.ids
        dep, ind = scores(data.test)
        policy = al.ensembled_policy(dep, ind, tags, q_grid, ids)
        curves = {
            "ensemble": curve(policy, test_part),
            al.FEATURE_DEPENDENT: curve(al.policy_from_scores(dep, q_grid, ids, al.FEATURE_DEPENDENT), test_part),
            al.FEATURE_INDEPENDENT: curve(al.policy_from_scores(ind, q_grid, ids, al.FEATURE_INDEPENDENT), test_part),
            al.ORACLE: curve(al.policy_from_scores(al.true_scores(test_part), q_grid, ids, al.ORACLE), test_part),
        }
        random_values = al.random_expectation_curve(test_part, q_grid)
        random_sampled = al.random_sampled_curve(test_part, q_grid, cfg.random_draws, seed)
        pct = al.desirability_percentile(dep, ids).percentile
        est = al.estimate_sufficiency_category(pct, allocator.train_counts)
        perf_g, perf_b = float(test_part.s_g.mean()), float(test_part.s_b.mean())
        report = metrics_report(curves["ensemble"], curves[al.ORACLE], random_values, perf_g,
                                perf_b, tags, s_acc(est, test_part.categories))
    return PairResult(g, b, suff, allocator, tags, val_auc, val_part, test_part, policy, curves,
                      random_values, random_sampled, pct, est, report, train_part)


# ---------------------------------------------------------------------------
# component selection

@dataclass
class Selection:
    mode: str
    individual: tuple[int, int]
    combined: tuple[int, int] | None
    chosen: PairResult
    results: dict = field(default_factory=dict)

    @property
    def match(self) -> bool | None:
        return None if self.combined is None else self.individual == self.combined

    @property
    def auc_delta(self) -> float | None:
        if self.combined is None or self.individual not in self.results:
            return None
        return self.results[self.combined].test_auc - self.results[self.individual].test_auc


def select_components(cfg: ExperimentConfig, candidates: dict[str, list[Candidate]],
                      data: SplitDataset, seed: int, mode: str | None = None,
                      evaluate_both: bool = False) -> Selection:
    """Pick (g, b) by individual validation loss or by ensemble validation AUC."""
    mode = mode or cfg.component_selection
    if mode not in ("individual", "combined"):
        raise ValueError(f"unknown selection mode {mode!r}")
    gs, bs = candidates["g"], candidates["b"]
    if not gs or not bs:
        raise ValueError("need at least one candidate per role")
    # min() keeps the earliest candidate on ties
    gi = min(range(len(gs)), key=lambda i: gs[i].validation_loss)
    bi = min(range(len(bs)), key=lambda i: bs[i].validation_loss)
    individual = (gi, bi)
    results = {}
    if mode == "individual" and not evaluate_both:
        results[individual] = evaluate_pair(cfg, data, gs[gi], bs[bi], seed)
        return Selection(mode, individual, None, results[individual], results)
    for i in range(len(gs)):
        for j in range(len(bs)):
            results[(i, j)] = evaluate_pair(cfg, data, gs[i], bs[j], seed)
    combined = max(results, key=lambda k: (results[k].validation_auc, -k[0], -k[1]))
    chosen = results[combined] if mode == "combined" else results[individual]
    return Selection(mode, individual, combined, chosen, results)


# ---------------------------------------------------------------------------
# a full run

REPORT_KEYS = REPORT_COLUMNS


@dataclass
class RunArtifacts:
    out_dir: Path
    report: dict
    metrics: MetricsReport
    result: PairResult
    selection: Selection | None = None

    def path(self, name: str) -> Path:
        return self.out_dir / name


def _write_reference_curves(path: Path, res: PairResult) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "t_bar", "t_bar_g", "allocator_tag"])
        for tag in (al.ORACLE, al.FEATURE_DEPENDENT, al.FEATURE_INDEPENDENT):
            for q, t, tg, _ in res.curves[tag].to_rows():
                w.writerow([repr(q), repr(t), repr(tg), tag])
        for q, t in zip(res.curves["ensemble"].q_grid, res.random_values):
            w.writerow([repr(float(q)), repr(float(t)), repr(float(q) * float(res.test_partition.s_g.mean())),
                        al.RANDOM_EXPECTATION])


def build_report(res: PairResult, sel: Selection | None, data: SplitDataset) -> dict:
    rep = res.report.to_dict()
    part = res.test_partition
    q = res.curves["ensemble"].q_grid
    rand_auc = auc(res.random_values, q)
    oracle_auc = auc(res.curves[al.ORACLE])
    rep.update({
        "perf_g": float(part.s_g.mean()),
        "perf_b": float(part.s_b.mean()),
        "auc_oracle": oracle_auc,
        "auc_random": rand_auc,
        "auc_random_sampled": auc(res.random_sampled, q),
        "ppcr_random_sampled": ppcr(auc(res.random_sampled, q), rand_auc, oracle_auc),
        "auc_feature_dependent": auc(res.curves[al.FEATURE_DEPENDENT]),
        "auc_feature_independent": auc(res.curves[al.FEATURE_INDEPENDENT]),
        "auc_validation": res.validation_auc,
        "sufficiency_mode": res.sufficiency.mode,
        "epsilon": res.sufficiency.epsilon,
        "g_family": res.g.family,
        "g_params": res.g.chosen,
        "b_family": res.b.family,
        "b_params": res.b.chosen,
        "allocator_feature_set": ",".join(res.allocator.feature_set),
        "allocator_tuning": None if res.allocator.tuning is None else res.allocator.tuning["chosen"],
        "counts_train": res.allocator.train_counts,
        "counts_test": part.counts,
        "n_train": data.train.n,
        "n_validation": data.validation.n,
        "n_test": data.test.n,
    })
    if sel is not None:
        rep.update({"component_selection": sel.mode, "components_match": sel.match,
                    "auc_delta": sel.auc_delta})
    return rep


def _load_components(models: Path, data: SplitDataset):
    g = load_model(models / "g.json")
    b = load_model(models / "b.json")
    meta = json.loads((models / "components.json").read_text())
    alloc = al.LearnedAllocator.from_dict(json.loads((models / "allocator.json").read_text()))
    gc = Candidate("g", g.family, g, meta["g_params"], evaluation_loss(g, data.validation))
    bc = Candidate("b", b.family, b, meta["b_params"], evaluation_loss(b, data.validation))
    return gc, bc, alloc


def run_experiment(cfg: ExperimentConfig, seed: int | None = None,
                   out_dir: str | Path | None = None) -> RunArtifacts:
    seed = cfg.seed if seed is None else seed
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "INCOMPLETE"
    marker.write_text("running\n")
    try:
        data, scaler = prepare(cfg, seed)
        models = out / "models"
        sel = None
        if cfg.reuse_models and (models / "allocator.json").exists():
            with _stage("load"):
                gc, bc, alloc = _load_components(models, data)
            res = evaluate_pair(cfg, data, gc, bc, seed, allocator=alloc)
        else:
            with _stage("fit"):
                cands = fit_candidates(cfg, data, seed)
            with _stage("select"):
                sel = select_components(cfg, cands, data, seed)
            res = sel.chosen
        with _stage("write"):
            models.mkdir(exist_ok=True)
            save_model(res.g.model, models / "g.json")
            save_model(res.b.model, models / "b.json")
            (models / "allocator.json").write_text(
                json.dumps(res.allocator.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")
            (models / "scaler.json").write_text(_dump(scaler.to_dict()))
            (models / "components.json").write_text(
                _dump({"g_params": res.g.chosen, "b_params": res.b.chosen}))
            (out / "config.json").write_text(_dump(cfg.to_dict()))
            report = build_report(res, sel, data)
            res.curves["ensemble"].to_csv(out / "curve.csv")
            _write_reference_curves(out / "curves_reference.csv", res)
            res.policy.to_csv(out / "policy.csv", res.predicted_percentile, res.estimated_category)
            res.test_partition.to_csv(out / "partition.csv")
            res.train_partition.to_csv(out / "partition_train.csv")
            res.validation_partition.to_csv(out / "partition_validation.csv")
            (out / "report.json").write_text(_dump(report))
    except StageError as exc:
        marker.write_text(f"stage: {exc.stage}\nerror: {exc}\n")
        raise
    marker.unlink()
    return RunArtifacts(out, report, res.report, res, sel)


# ---------------------------------------------------------------------------
# replicates and ablations

def replicate(cfg: ExperimentConfig, n_reps: int | None = None, out_dir=None) -> dict:
    """Run once per seed and aggregate every metric as mean and sample sd."""
    n_reps = cfg.replicates if n_reps is None else n_reps
    if n_reps < 1 or len(cfg.seeds) < n_reps:
        raise ValueError("need n_reps >= 1 and a seed per replicate")
    out = Path(out_dir or cfg.out_dir)
    runs = []
    for k, seed in enumerate(cfg.seeds[:n_reps]):
        runs.append(run_experiment(cfg, seed=seed, out_dir=out / f"rep{k}_seed{seed}").report)
    summary = {"seeds": list(cfg.seeds[:n_reps]), "metrics": {}}
    for key in REPORT_KEYS:
        values = [r[key] for r in runs]
        mean, sd = mean_sd(values)
        summary["metrics"][key] = {"mean": mean, "sd": sd, "values": values}
    (out / "replicate_report.json").write_text(_dump(summary))
    with (out / "replicate_table.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "mean", "sd", "formatted_percent"])
        for key in REPORT_KEYS:
            m = summary["metrics"][key]
            text = "undefined" if m["mean"] is None else f"{100 * m['mean']:.0f} ± {100 * m['sd']:.0f}"
            w.writerow([key, repr(m["mean"]), repr(m["sd"]), text])
    return summary


def run_feature_ablation(cfg: ExperimentConfig, seed: int | None = None, out_dir=None) -> list[dict]:
    """Train one allocator per feature set on shared (g, b) and report test AUC."""
    seed = cfg.seed if seed is None else seed
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data, _ = prepare(cfg, seed)
    with _stage("fit"):
        cands = fit_candidates(cfg, data, seed)
    with _stage("select"):
        sel = select_components(cfg, cands, data, seed)
    g, b = sel.chosen.g, sel.chosen.b
    seen, rows = set(), []
    for entry in cfg.ablation_feature_sets:
        fs = al.normalize_feature_set(entry)
        if fs in seen:
            log.warning("duplicate feature set %s skipped", ",".join(fs))
            continue
        seen.add(fs)
        if data.train.task == REGRESSION and "d_ce" in fs:
            log.warning("feature set %s needs d_ce, unavailable for regression; skipped", ",".join(fs))
            continue
        res = evaluate_pair(cfg, data, g, b, seed, feature_set=fs)
        rows.append({"feature_set": ",".join(fs), "auc": res.test_auc,
                     "auc_feature_dependent": auc(res.curves[al.FEATURE_DEPENDENT]),
                     "ppcr": res.report.ppcr, "pcfa": res.report.pcfa,
                     "auc_validation": res.validation_auc})
    with (out / "ablation_features.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["feature_set"],
                           lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return rows


def run_component_ablation(cfg: ExperimentConfig, seed: int | None = None, out_dir=None) -> dict:
    """Individual vs combined component selection on one split."""
    seed = cfg.seed if seed is None else seed
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data, _ = prepare(cfg, seed)
    with _stage("fit"):
        cands = fit_candidates(cfg, data, seed)
    with _stage("select"):
        sel = select_components(cfg, cands, data, seed, mode="combined", evaluate_both=True)
    gi, bi = sel.individual
    gc, bc = sel.combined
    row = {"g_I": cands["g"][gi].family, "b_I": cands["b"][bi].family,
           "g_C": cands["g"][gc].family, "b_C": cands["b"][bc].family,
           "match": sel.match, "auc_delta": sel.auc_delta,
           "pairs": {f"{cands['g'][i].family}+{cands['b'][j].family}":
                     {"validation_auc": r.validation_auc, "test_auc": r.test_auc}
                     for (i, j), r in sel.results.items()}}
    (out / "ablation_components.json").write_text(_dump(row))
    return row
