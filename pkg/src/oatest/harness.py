"""End-to-end experiments: data, pretraining, per-student selection, scoring, reports."""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import basic_config, select_greedy_fisher, select_random
from .config import ExperimentConfig
from .data import Dataset, GroundTruth, load_dataset, synthesize_dataset
from .engine import FitnessCache, evolve
from .errors import ConfigError, DataError, ExperimentError
from .metrics import metric_acc, metric_auc
from .mirt import MirtModel, predict_proba, pretrain, virtual_update

logger = logging.getLogger(__name__)

TIMING_FIELDS = ("wall_time_s",)


@dataclass
class Workspace:
    """Data and the pretrained model shared by every run of one configuration."""

    dataset: Dataset
    model: MirtModel
    truth: GroundTruth | None = None


@dataclass
class OatReport:
    records: list[dict]
    aggregates: list[dict]
    pooled: list[dict]
    traces: list[tuple]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "aggregates": self.aggregates,
            "pooled": self.pooled,
            "records": self.records,
        }

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        with open(out / "per_student.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["student_id", "length", "selector", "acc", "auc", "fitness", "timed_out"])
            for r in self.records:
                w.writerow([r["student_id"], r["length"], r["selector"], repr(r["acc"]),
                            "" if r["auc"] is None else repr(r["auc"]), repr(r["fitness"]),
                            int(r["timed_out"])])
        if self.traces:
            write_trace(out / "fitness_trace.csv", self.traces)


def write_trace(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["student_id", "generation", "best_fitness", "mean_fitness", "length"])
        for student, length, gen, best, mean in rows:
            w.writerow([student, gen, repr(best), repr(mean), length])


def student_seed(master_seed: int, student_id: int, length: int) -> np.random.SeedSequence:
    """Per-(student, length) entropy, independent of scheduling and platform."""
    return np.random.SeedSequence([master_seed, student_id, length])


def prepare(config: ExperimentConfig) -> Workspace:
    src = config.data
    truth = None
    if src.synth is not None:
        dataset, truth = synthesize_dataset(src.synth, src.synth_seed)
    else:
        dataset = load_dataset(src.interactions, src.qmatrix, config.split)
    if config.model is not None:
        model = MirtModel.load(config.model)
        if model.alpha.shape != (dataset.n_questions, dataset.n_concepts):
            raise ConfigError("checkpoint shape does not match the dataset")
    else:
        model = pretrain(dataset, config.pretrain, config.master_seed, config.theta0)
    return Workspace(dataset, model, truth)


def evaluation_students(config: ExperimentConfig, dataset: Dataset) -> list[int]:
    students = dataset.evaluation_students
    if config.max_students is not None:
        students = students[:config.max_students]
    if not students:
        raise DataError("no evaluable students")
    return students


def run_student(ws: Workspace, config: ExperimentConfig, student: int, length: int) -> dict:
    """Select a form for one student, apply the single final update and score it."""
    model, split = ws.model, ws.dataset.splits[student]
    theta0 = model.theta[student]
    rng = np.random.default_rng(student_seed(config.master_seed, student, length))
    trace, timed_out = [], False
    selector = config.selector
    if selector in ("peoat", "peoat_basic"):
        evo = config.evolve if selector == "peoat" else basic_config(config.evolve)
        result = evolve(student, ws.dataset, model, evo, config.update, length, rng,
                        theta0=theta0, time_limit=config.student_timeout)
        chosen, fitness, timed_out = result.best, result.best_fitness, result.timed_out
        trace = [(student, length, g, b, m) for g, b, m in result.trace]
    elif selector == "random":
        chosen = select_random(split.candidate_q, length, rng)
    else:
        chosen = select_greedy_fisher(model, theta0, split.candidate_q, length)
    if selector in ("random", "greedy_fisher"):
        fitness = FitnessCache(model, theta0, split, config.update)(chosen)

    # the only ability update after the form is fixed: the L recorded responses, once
    responses = [(q, split.candidate_responses[q]) for q in chosen.key]
    theta_final = virtual_update(model, theta0, responses, config.update)
    probs = predict_proba(model, theta_final, split.test_q, config.update.probability_clip)
    return {
        "record": {
            "student_id": student,
            "length": length,
            "selector": selector,
            "acc": metric_acc(probs, split.test_r),
            "auc": metric_auc(probs, split.test_r),
            "fitness": float(fitness),
            "timed_out": timed_out,
            "questions": list(chosen.genes),
        },
        "probs": probs.tolist(),
        "labels": split.test_r.tolist(),
        "trace": trace,
    }


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def aggregate(records: list[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for r in records:
        groups.setdefault((r["selector"], r["length"]), []).append(r)
    out = []
    for (selector, length), rows in sorted(groups.items()):
        out.append({
            "selector": selector,
            "length": length,
            "n_students": len(rows),
            "mean_acc": _mean([r["acc"] for r in rows]),
            "mean_auc": _mean([r["auc"] for r in rows]),
            "mean_fitness": _mean([r["fitness"] for r in rows]),
            "n_timed_out": sum(r["timed_out"] for r in rows),
        })
    return out


def _pooled(outputs: list[dict]) -> list[dict]:
    groups: dict[tuple, tuple[list, list]] = {}
    for o in outputs:
        r = o["record"]
        probs, labels = groups.setdefault((r["selector"], r["length"]), ([], []))
        probs.extend(o["probs"])
        labels.extend(o["labels"])
    return [
        {"selector": s, "length": L, "acc": metric_acc(p, y), "auc": metric_auc(p, y)}
        for (s, L), (p, y) in sorted(groups.items())
    ]


_WORKER: dict = {}


def _init_worker(ws, config):
    _WORKER["ws"] = ws
    _WORKER["config"] = config


def _run_task(task):
    student, length = task
    try:
        return run_student(_WORKER["ws"], _WORKER["config"], student, length)
    except Exception as exc:  # context is attached in the parent
        return {"error": f"{type(exc).__name__}: {exc}", "student_id": student, "length": length}


def _build_report(config, outputs, started, partial) -> OatReport:
    records = [o["record"] for o in outputs]
    traces = [row for o in outputs for row in o["trace"]]
    metadata = {
        "config_hash": config.config_hash(),
        "master_seed": config.master_seed,
        "selector": config.selector,
        "partial": partial,
        "wall_time_s": time.monotonic() - started,
        "config": config.experiment_dict(),
    }
    return OatReport(records, aggregate(records), _pooled(outputs), traces, metadata)


def run_experiment(config: ExperimentConfig, workspace: Workspace | None = None,
                   workers: int | None = None, out_dir=None, write: bool = True) -> OatReport:
    """Run the configured selector for every evaluation student and test length.

    Reports go to ``out_dir`` (default ``config.output_dir``) unless ``write``
    is false. A failing student aborts the run after flushing a partial report.
    """
    started = time.monotonic()
    ws = workspace or prepare(config)
    students = evaluation_students(config, ws.dataset)
    tasks = [(s, L) for L in config.test_lengths for s in students]
    workers = workers or config.workers
    out_dir = config.output_dir if out_dir is None else out_dir

    outputs: list[dict] = []
    _init_worker(ws, config)
    if workers == 1:
        results = map(_run_task, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(ws, config))
        results = pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
    try:
        for out in results:
            if "error" in out:
                report = _build_report(config, outputs, started, partial=True)
                if write:
                    report.write(out_dir)
                raise ExperimentError(
                    f"student {out['student_id']}, length {out['length']}: {out['error']}",
                    out["student_id"], out["length"],
                )
            outputs.append(out)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)

    report = _build_report(config, outputs, started, partial=False)
    if write:
        report.write(out_dir)
    logger.info("finished %d runs in %.1fs", len(outputs), report.metadata["wall_time_s"])
    return report


def run_tau_sweep(config: ExperimentConfig, workspace: Workspace | None = None,
                  workers: int | None = None, write: bool = True) -> list[OatReport]:
    """One PEOAT run per diversity multiplier, sharing data, pretraining and theta0."""
    if config.selector != "peoat":
        raise ConfigError("the tau sweep needs selector 'peoat'")
    ws = workspace or prepare(config)
    reports, rows = [], []
    for tau in config.tau_values:
        cfg = replace(config, evolve=replace(config.evolve, tau_coeff=float(tau)))
        out_dir = Path(config.output_dir) / f"tau_{tau:g}"
        report = run_experiment(cfg, ws, workers, out_dir=out_dir, write=write)
        reports.append(report)
        for agg in report.aggregates:
            rows.append((float(tau), agg["length"], agg["mean_acc"], agg["mean_auc"]))
    if write:
        path = Path(config.output_dir)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / "tau_sweep.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau_coeff", "L", "mean_acc", "mean_auc"])
            for tau, L, acc, auc in rows:
                w.writerow([repr(tau), L, repr(acc), "" if auc is None else repr(auc)])
    return reports
