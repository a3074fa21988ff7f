"""
Pretraining the diagnosis model
===============================

Fit question loadings on the pretrain cohort, then check that the initial
ability estimates of held-out students predict their test responses.
"""
import numpy as np

from oatest import SynthSpec, metric_acc, metric_auc, pretrain, synthesize_dataset
from oatest.mirt import fisher_scalars, predict_proba

dataset, truth = synthesize_dataset(SynthSpec(), seed=13)
model = pretrain(dataset, seed=0)

# per-epoch training loss
print("loss:", " ".join(f"{v:.3f}" for v in model.history))

probs, labels = [], []
for s in dataset.evaluation_students:
    split = dataset.splits[s]
    probs.append(predict_proba(model, model.theta[s], split.test_q))
    labels.append(split.test_r)
probs, labels = np.concatenate(probs), np.concatenate(labels)
print(f"starting point on held-out tests: ACC={metric_acc(probs, labels):.3f} AUC={metric_auc(probs, labels):.3f}")

# which questions carry the most information about the first student
s = dataset.evaluation_students[0]
pool = dataset.splits[s].candidate_q
info = fisher_scalars(model, model.theta[s], pool)
top = pool[np.argsort(-info)[:5]]
print("most informative candidates:", top, np.round(np.sort(info)[::-1][:5], 3))
