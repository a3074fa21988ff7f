"""Interaction data: loading, validation, per-student splitting and synthesis.

A dataset holds the full (student, question, correct) log plus a partition of
students into a pretraining cohort, used only to fit item parameters, and an
evaluation cohort whose records are split three ways:

* ``train``     -- sets the initial ability estimate,
* ``candidate`` -- the untested pool a test form is drawn from,
* ``test``      -- held-out responses used for fitness and final scoring.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DataError

INTERACTIONS_HEADER = ("student_id", "question_id", "correct")


class Interaction(NamedTuple):
    student_id: int
    question_id: int
    correct: int


@dataclass(frozen=True)
class SplitConfig:
    """How each evaluation student's records are divided.

    Ratios are per student. ``min_interactions`` defaults to
    ``max(50, 4 * max_length + 1)`` so the initialization slices of the
    evolutionary search are always well defined.
    """

    train_ratio: float = 0.2
    candidate_ratio: float = 0.6
    test_ratio: float = 0.2
    pretrain_fraction: float = 0.7
    max_length: int = 20
    min_interactions: int | None = None
    seed: int = 0

    def __post_init__(self):
        ratios = (self.train_ratio, self.candidate_ratio, self.test_ratio)
        if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must be non-negative and sum to 1, got {ratios}")
        if self.test_ratio <= 0 or self.candidate_ratio <= 0:
            raise ConfigError("candidate and test ratios must be positive")
        if not 0.0 <= self.pretrain_fraction < 1.0:
            raise ConfigError("pretrain_fraction must lie in [0, 1)")
        if self.max_length < 1:
            raise ConfigError("max_length must be >= 1")

    @property
    def effective_min_interactions(self) -> int:
        if self.min_interactions is not None:
            return self.min_interactions
        return max(50, 4 * self.max_length + 1)


@dataclass(frozen=True)
class StudentSplit:
    """One evaluation student's train / candidate / test partition."""

    student_id: int
    train_q: np.ndarray
    train_r: np.ndarray
    candidate_q: np.ndarray
    candidate_r: np.ndarray
    test_q: np.ndarray
    test_r: np.ndarray

    def __post_init__(self):
        for name in ("train_q", "train_r", "candidate_q", "candidate_r", "test_q", "test_r"):
            arr = np.array(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def _rows(self, qs, rs):
        return [Interaction(self.student_id, int(q), int(r)) for q, r in zip(qs, rs)]

    @property
    def train(self) -> list[Interaction]:
        return self._rows(self.train_q, self.train_r)

    @property
    def candidate(self) -> list[Interaction]:
        return self._rows(self.candidate_q, self.candidate_r)

    @property
    def test(self) -> list[Interaction]:
        return self._rows(self.test_q, self.test_r)

    @property
    def candidate_responses(self) -> dict[int, int]:
        return {int(q): int(r) for q, r in zip(self.candidate_q, self.candidate_r)}


@dataclass(frozen=True)
class LoadReport:
    n_students_seen: int
    n_dropped_min_interactions: int
    n_dropped_small_pool: int
    n_pretrain: int
    n_evaluation: int


@dataclass(frozen=True)
class Dataset:
    """Immutable container for an item bank and its interaction log."""

    n_students: int
    n_questions: int
    n_concepts: int
    q_matrix: np.ndarray
    student_ids: np.ndarray
    question_ids: np.ndarray
    correct: np.ndarray
    pretrain_students: tuple[int, ...]
    splits: dict[int, StudentSplit] = field(repr=False)
    report: LoadReport | None = None

    @property
    def evaluation_students(self) -> list[int]:
        return sorted(self.splits)

    def pretrain_log(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Rows belonging to the pretraining cohort as (students, questions, correct)."""
        mask = np.isin(self.student_ids, np.asarray(self.pretrain_students, dtype=np.int64))
        return self.student_ids[mask], self.question_ids[mask], self.correct[mask]


@dataclass(frozen=True)
class SynthSpec:
    n_students: int = 200
    n_questions: int = 300
    n_concepts: int = 8
    interactions_per_student: int = 150
    ability_scale: float = 1.0
    difficulty_scale: float = 1.0
    split: SplitConfig = field(default_factory=SplitConfig)


@dataclass(frozen=True)
class GroundTruth:
    """Hidden generating parameters of a synthetic dataset."""

    theta: np.ndarray
    alpha: np.ndarray


def _readonly(arr, dtype):
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


def _split_sizes(n: int, config: SplitConfig) -> tuple[int, int, int]:
    n_train = int(round(n * config.train_ratio))
    n_test = max(1, int(round(n * config.test_ratio)))
    return n_train, n - n_train - n_test, n_test


def split_student(student_id: int, questions, correct, config: SplitConfig) -> StudentSplit:
    """Shuffle one student's records with a per-student seed and cut them by ratio."""
    questions = np.asarray(questions, dtype=np.int64)
    correct = np.asarray(correct, dtype=np.int64)
    # sort first so the result does not depend on file row order
    order = np.argsort(questions, kind="stable")
    questions, correct = questions[order], correct[order]
    rng = np.random.default_rng([config.seed, student_id])
    perm = rng.permutation(len(questions))
    questions, correct = questions[perm], correct[perm]
    n_train, n_cand, _ = _split_sizes(len(questions), config)
    a, b = n_train, n_train + n_cand
    return StudentSplit(
        student_id,
        questions[:a], correct[:a],
        questions[a:b], correct[a:b],
        questions[b:], correct[b:],
    )


def build_dataset(student_ids, question_ids, correct, q_matrix, config: SplitConfig) -> Dataset:
    """Validate a raw log, filter sparse students, and assign cohorts and splits."""
    student_ids = np.asarray(student_ids, dtype=np.int64)
    question_ids = np.asarray(question_ids, dtype=np.int64)
    correct = np.asarray(correct, dtype=np.int64)
    q_matrix = np.asarray(q_matrix, dtype=np.int64)
    if q_matrix.ndim != 2 or q_matrix.shape[0] == 0:
        raise DataError("Q-matrix must be a non-empty 2-D array")
    n_questions, n_concepts = q_matrix.shape

    if len(student_ids) == 0:
        raise DataError("empty dataset: no interactions")
    if student_ids.min() < 0 or question_ids.min() < 0:
        raise DataError("ids must be non-negative")
    if not np.isin(correct, (0, 1)).all():
        raise DataError("correct must be 0 or 1")
    bad = question_ids >= n_questions
    if bad.any():
        q = int(question_ids[bad][0])
        raise DataError(f"question id {q} is absent from the Q-matrix ({n_questions} rows)")

    pairs = student_ids * n_questions + question_ids
    uniq, counts = np.unique(pairs, return_counts=True)
    if (counts > 1).any():
        dup = int(uniq[counts > 1][0])
        raise DataError(f"duplicate (student, question) pair ({dup // n_questions}, {dup % n_questions})")

    n_students = int(student_ids.max()) + 1
    per_student = np.bincount(student_ids, minlength=n_students)
    seen = np.flatnonzero(per_student > 0)
    kept = seen[per_student[seen] >= config.effective_min_interactions]
    if len(kept) == 0:
        raise DataError("empty dataset after filtering: no student meets the minimum interaction count")

    rng = np.random.default_rng([config.seed, 0x5EED])
    shuffled = rng.permutation(kept)
    n_pre = int(round(config.pretrain_fraction * len(kept)))
    pretrain = tuple(sorted(int(s) for s in shuffled[:n_pre]))

    splits: dict[int, StudentSplit] = {}
    dropped_pool = 0
    for s in sorted(int(s) for s in shuffled[n_pre:]):
        rows = student_ids == s
        sp = split_student(s, question_ids[rows], correct[rows], config)
        if len(sp.candidate_q) <= 4 * config.max_length:
            dropped_pool += 1
            continue
        splits[s] = sp

    keep_mask = np.isin(student_ids, kept)
    report = LoadReport(
        n_students_seen=len(seen),
        n_dropped_min_interactions=len(seen) - len(kept),
        n_dropped_small_pool=dropped_pool,
        n_pretrain=len(pretrain),
        n_evaluation=len(splits),
    )
    return Dataset(
        n_students=n_students,
        n_questions=n_questions,
        n_concepts=n_concepts,
        q_matrix=_readonly(q_matrix, np.int64),
        student_ids=_readonly(student_ids[keep_mask], np.int64),
        question_ids=_readonly(question_ids[keep_mask], np.int64),
        correct=_readonly(correct[keep_mask], np.int64),
        pretrain_students=pretrain,
        splits=splits,
        report=report,
    )


def read_qmatrix(path) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                values = [int(v) for v in row]
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed Q-matrix row {row!r}") from None
            if any(v not in (0, 1) for v in values):
                raise DataError(f"{path}:{lineno}: Q-matrix entries must be 0 or 1")
            if not any(values):
                raise DataError(f"{path}:{lineno}: question tags no concept")
            if rows and len(values) != len(rows[0]):
                raise DataError(f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(values)}")
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: empty Q-matrix")
    return np.array(rows, dtype=np.int64)


def read_interactions(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    students, questions, correct = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != INTERACTIONS_HEADER:
            raise DataError(f"{path}:1: expected header {','.join(INTERACTIONS_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                s, q, r = (int(v) for v in row)
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed row {row!r}") from None
            if s < 0 or q < 0 or r not in (0, 1):
                raise DataError(f"{path}:{lineno}: out-of-range value in row {row!r}")
            students.append(s)
            questions.append(q)
            correct.append(r)
    return np.array(students, dtype=np.int64), np.array(questions, dtype=np.int64), np.array(correct, dtype=np.int64)


def load_dataset(interactions_path, qmatrix_path, config: SplitConfig | None = None) -> Dataset:
    """Read the interactions and Q-matrix CSV files and build a split dataset.

    Raises:
        DataError: malformed row (with line number), duplicate pair, unknown
            question id, or no students left after filtering.
    """
    config = config or SplitConfig()
    for p in (interactions_path, qmatrix_path):
        if not Path(p).is_file():
            raise DataError(f"no such file: {p}")
    q_matrix = read_qmatrix(qmatrix_path)
    students, questions, correct = read_interactions(interactions_path)
    return build_dataset(students, questions, correct, q_matrix, config)


def sample_responses(theta, alpha, rng) -> np.ndarray:
    """Bernoulli draws with success probability sigmoid(theta . alpha), row-wise."""
    logits = np.einsum("...k,...k->...", np.asarray(theta, float), np.asarray(alpha, float))
    return (rng.random(logits.shape) < expit(logits)).astype(np.int64)


def _synthetic_qmatrix(alpha: np.ndarray) -> np.ndarray:
    # a question tags its dominant dimension plus any dimension with a large loading
    q = (np.abs(alpha) > 1.0).astype(np.int64)
    q[np.arange(len(alpha)), np.abs(alpha).argmax(axis=1)] = 1
    return q


def synthesize_dataset(spec: SynthSpec, seed: int) -> tuple[Dataset, GroundTruth]:
    """Draw Gaussian abilities and difficulties and simulate responses."""
    if spec.interactions_per_student > spec.n_questions:
        raise ConfigError(
            f"interactions_per_student={spec.interactions_per_student} exceeds n_questions={spec.n_questions}"
        )
    rng = np.random.default_rng(seed)
    d = spec.n_concepts
    theta = rng.normal(0.0, spec.ability_scale, size=(spec.n_students, d))
    alpha = rng.normal(0.0, spec.difficulty_scale, size=(spec.n_questions, d))

    n = spec.interactions_per_student
    students = np.repeat(np.arange(spec.n_students), n)
    questions = np.concatenate(
        [rng.choice(spec.n_questions, size=n, replace=False) for _ in range(spec.n_students)]
    )
    correct = sample_responses(theta[students], alpha[questions], rng)

    truth = GroundTruth(_readonly(theta, float), _readonly(alpha, float))
    dataset = build_dataset(students, questions, correct, _synthetic_qmatrix(alpha), spec.split)
    return dataset, truth


def write_interactions(path, dataset: Dataset) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INTERACTIONS_HEADER)
        for row in zip(dataset.student_ids, dataset.question_ids, dataset.correct):
            w.writerow([int(v) for v in row])


def write_qmatrix(path, q_matrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(q_matrix):
            w.writerow([int(v) for v in row])
