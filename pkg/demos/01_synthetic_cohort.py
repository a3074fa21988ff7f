"""
A synthetic cohort
==================

Draw a cohort from known abilities and question loadings, then look at how
each student's log is split into train, candidate and test parts.
"""
import numpy as np

from oatest import SynthSpec, synthesize_dataset

dataset, truth = synthesize_dataset(SynthSpec(), seed=13)
print(f"{dataset.n_students} students, {dataset.n_questions} questions, {dataset.n_concepts} concepts")
print(f"{len(dataset.pretrain_students)} students pretrain the model,",
      f"{len(dataset.evaluation_students)} are held out for testing")

# overall correctness sits near one half because both factors are centred
print("mean correctness:", round(float(dataset.correct.mean()), 3))

# one held-out student: 20% train, 60% candidate, 20% test
s = dataset.evaluation_students[0]
split = dataset.splits[s]
print(f"student {s}: train={len(split.train_q)} candidate={len(split.candidate_q)} test={len(split.test_q)}")

# the Q-matrix tags each question with its dominant concept and any large loading
print("concepts per question:", np.bincount(dataset.q_matrix.sum(axis=1))[1:])
print("true ability of student", s, np.round(truth.theta[s], 2))
