"""Accuracy, ROC AUC and the hybrid score used as search fitness."""
from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def _check(predictions, labels):
    p = np.asarray(predictions, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {y.size} labels")
    if p.size == 0:
        raise ValueError("need at least one prediction")
    return p, y.astype(bool)


def metric_acc(predictions, labels) -> float:
    """Fraction of predictions on the right side of 0.5; ties count as class 1."""
    p, y = _check(predictions, labels)
    return float(np.mean((p >= 0.5) == y))


def metric_auc(predictions, labels) -> float | None:
    """Mann-Whitney estimate of ROC AUC, ties scored 0.5.

    Returns None when only one class is present, since AUC is undefined there.
    """
    p, y = _check(predictions, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(p)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def hybrid_score(predictions, labels) -> float:
    """Mean of AUC and accuracy, or accuracy alone when AUC is undefined."""
    acc = metric_acc(predictions, labels)
    auc = metric_auc(predictions, labels)
    if auc is None:
        return acc
    return (auc + acc) / 2.0
