"""Multidimensional IRT diagnosis model with p = sigmoid(theta . alpha).

Student abilities ``theta`` and item vectors ``alpha`` share the latent
dimension, which is tied to the number of knowledge concepts. Everything
except :func:`pretrain` is a pure function of a frozen :class:`MirtModel`.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from .data import Dataset, StudentSplit
from .errors import DataError, TrainingError

FORMAT_TAG = "oatest-mirt"


@dataclass(frozen=True)
class UpdateConfig:
    """Settings for the per-student ability refinement.

    ``epochs=None`` means ``ceil(5 * sqrt(n))`` for ``n`` responses.
    """

    learning_rate: float = 0.02
    epochs: int | None = None
    probability_clip: float = 1e-6
    reduction: str = "sum"

    def __post_init__(self):
        if not 0 < self.learning_rate < 1:
            raise ValueError("learning_rate must lie in (0, 1)")
        if self.epochs is not None and self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 < self.probability_clip < 0.01:
            raise ValueError("probability_clip must lie in (0, 0.01)")
        if self.reduction not in ("sum", "mean"):
            raise ValueError("reduction must be 'sum' or 'mean'")

    def epochs_for(self, n_responses: int) -> int:
        if self.epochs is not None:
            return self.epochs
        return max(1, math.ceil(5 * math.sqrt(n_responses)))


@dataclass(frozen=True)
class PretrainConfig:
    learning_rate: float = 0.02
    epochs: int = 20
    batch_size: int = 256
    probability_clip: float = 1e-6


@dataclass(frozen=True, eq=False)
class MirtModel:
    """Frozen ability and item matrices plus the pretraining provenance."""

    theta: np.ndarray
    alpha: np.ndarray
    theta_prior: np.ndarray
    config: PretrainConfig = field(default_factory=PretrainConfig)
    seed: int = 0
    history: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("theta", "alpha", "theta_prior"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.theta.shape[1] != self.alpha.shape[1] or self.theta_prior.shape != (self.dim,):
            raise ValueError("theta, alpha and theta_prior disagree on the latent dimension")

    @property
    def dim(self) -> int:
        return self.alpha.shape[1]

    @property
    def n_questions(self) -> int:
        return self.alpha.shape[0]

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "version": 1,
            "dim": self.dim,
            "seed": self.seed,
            "pretrain_config": asdict(self.config),
            "theta": self.theta.tolist(),
            "alpha": self.alpha.tolist(),
            "theta_prior": self.theta_prior.tolist(),
            "history": list(self.history),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MirtModel":
        if payload.get("format") != FORMAT_TAG:
            raise DataError("not an oatest MIRT checkpoint")
        dim = payload["dim"]
        theta = np.array(payload["theta"], dtype=np.float64).reshape(-1, dim)
        alpha = np.array(payload["alpha"], dtype=np.float64).reshape(-1, dim)
        return cls(
            theta=theta,
            alpha=alpha,
            theta_prior=payload["theta_prior"],
            config=PretrainConfig(**payload["pretrain_config"]),
            seed=payload["seed"],
            history=tuple(payload.get("history", ())),
        )

    def save(self, path) -> None:
        # json emits repr() floats, which round-trip float64 exactly
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "MirtModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def predict_proba(model: MirtModel, theta, question_ids, eps: float = 1e-6) -> np.ndarray:
    """Clipped probabilities of a correct answer for several questions."""
    logits = model.alpha[np.asarray(question_ids, dtype=np.int64)] @ np.asarray(theta, dtype=float)
    return np.clip(expit(logits), eps, 1.0 - eps)


def predict(model: MirtModel, theta, question_id: int, eps: float = 1e-6) -> float:
    if not 0 <= question_id < model.n_questions:
        raise IndexError(f"question id {question_id} out of range")
    return float(predict_proba(model, theta, [question_id], eps)[0])


def bce_loss(theta, alpha_rows, responses, eps: float = 1e-6, reduction: str = "mean") -> float:
    """Binary cross-entropy of sigmoid(alpha_rows @ theta) against 0/1 responses."""
    p = np.clip(expit(np.asarray(alpha_rows) @ np.asarray(theta)), eps, 1.0 - eps)
    r = np.asarray(responses, dtype=float)
    losses = -(r * np.log(p) + (1.0 - r) * np.log1p(-p))
    return float(losses.sum() if reduction == "sum" else losses.mean())


def bce_grad(theta, alpha_rows, responses, eps: float = 1e-6, reduction: str = "mean") -> np.ndarray:
    """Gradient of :func:`bce_loss` with respect to theta.

    Where the probability is clipped the loss is flat, so those rows
    contribute nothing.
    """
    alpha_rows = np.asarray(alpha_rows, dtype=float)
    p = expit(alpha_rows @ np.asarray(theta, dtype=float))
    resid = (p - np.asarray(responses, dtype=float)) * ((p > eps) & (p < 1.0 - eps))
    g = resid @ alpha_rows
    return g if reduction == "sum" else g / len(alpha_rows)


def _descend(theta, alpha_rows, responses, lr, epochs, eps, reduction):
    theta = np.array(theta, dtype=float)
    for _ in range(epochs):
        theta -= lr * bce_grad(theta, alpha_rows, responses, eps, reduction)
    return theta


def virtual_update(model: MirtModel, theta0, responses, config: UpdateConfig | None = None) -> np.ndarray:
    """Refine a detached ability copy on ``(question_id, r)`` pairs with items frozen.

    Runs full-batch gradient descent; neither ``theta0`` nor ``model`` is touched.
    """
    config = config or UpdateConfig()
    responses = list(responses)
    if not responses:
        raise ValueError("virtual_update needs at least one response")
    qs = np.fromiter((q for q, _ in responses), dtype=np.int64, count=len(responses))
    rs = np.fromiter((r for _, r in responses), dtype=float, count=len(responses))
    return _descend(
        theta0, model.alpha[qs], rs, config.learning_rate,
        config.epochs_for(len(qs)), config.probability_clip, config.reduction,
    )


def init_theta0(model: MirtModel, split: StudentSplit, config: UpdateConfig | None = None) -> np.ndarray:
    """Initial ability: the pretraining-cohort mean refined on the train split only."""
    if len(split.train_q) == 0:
        return model.theta_prior.copy()
    return virtual_update(model, model.theta_prior, zip(split.train_q, split.train_r), config)


def fisher_scalars(model: MirtModel, theta, question_ids) -> np.ndarray:
    """Frobenius norm of each item's information matrix, ||alpha||^2 p (1 - p)."""
    a = model.alpha[np.asarray(question_ids, dtype=np.int64)]
    p = expit(a @ np.asarray(theta, dtype=float))
    return np.einsum("ij,ij->i", a, a) * p * (1.0 - p)


def fisher_scalar(model: MirtModel, theta, question_id: int) -> float:
    return float(fisher_scalars(model, theta, [question_id])[0])


def fisher_matrix(model: MirtModel, theta, question_id: int) -> np.ndarray:
    a = model.alpha[question_id]
    p = expit(a @ np.asarray(theta, dtype=float))
    return p * (1.0 - p) * np.outer(a, a)


def _xavier(rng, rows, cols):
    bound = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def pretrain(
    dataset: Dataset,
    config: PretrainConfig | None = None,
    seed: int = 0,
    update: UpdateConfig | None = None,
) -> MirtModel:
    """Fit abilities of the pretraining cohort and all item vectors with Adam.

    Mini-batch binary cross-entropy over the pretraining cohort's records.
    Evaluation students' rows are then filled by :func:`init_theta0`.

    Raises:
        DataError: the pretraining cohort is empty.
        TrainingError: the loss became non-finite.
    """
    config = config or PretrainConfig()
    students, questions, correct = dataset.pretrain_log()
    if len(students) == 0:
        raise DataError("pretraining cohort is empty")
    rng = np.random.default_rng(seed)
    d = dataset.n_concepts
    theta = _xavier(rng, dataset.n_students, d)
    alpha = _xavier(rng, dataset.n_questions, d)
    params = [theta, alpha]
    m = [np.zeros_like(x) for x in params]
    v = [np.zeros_like(x) for x in params]
    beta1, beta2, adam_eps = 0.9, 0.999, 1e-8
    eps = config.probability_clip
    r = correct.astype(float)

    history = []
    step = 0
    n = len(students)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            s, q, y = students[idx], questions[idx], r[idx]
            ts, aq = theta[s], alpha[q]
            p = expit(np.einsum("ij,ij->i", ts, aq))
            pc = np.clip(p, eps, 1.0 - eps)
            total += float(-(y * np.log(pc) + (1.0 - y) * np.log1p(-pc)).sum())
            resid = ((p - y) * ((p > eps) & (p < 1.0 - eps)) / len(idx))[:, None]
            grads = [np.zeros_like(theta), np.zeros_like(alpha)]
            np.add.at(grads[0], s, resid * aq)
            np.add.at(grads[1], q, resid * ts)
            step += 1
            for x, g, mi, vi in zip(params, grads, m, v):
                mi *= beta1
                mi += (1 - beta1) * g
                vi *= beta2
                vi += (1 - beta2) * g * g
                mhat = mi / (1 - beta1 ** step)
                vhat = vi / (1 - beta2 ** step)
                x -= config.learning_rate * mhat / (np.sqrt(vhat) + adam_eps)
        epoch_loss = total / n
        if not math.isfinite(epoch_loss):
            raise TrainingError("non-finite pretraining loss; learning rate too large?")
        history.append(epoch_loss)

    pre = np.asarray(dataset.pretrain_students, dtype=np.int64)
    prior = theta[pre].mean(axis=0)
    fitted = np.tile(prior, (dataset.n_students, 1))
    fitted[pre] = theta[pre]
    model = MirtModel(fitted, alpha, prior, config, seed, tuple(history))
    for sid, split in dataset.splits.items():
        fitted[sid] = init_theta0(model, split, update)
    return MirtModel(fitted, alpha, prior, config, seed, tuple(history))
