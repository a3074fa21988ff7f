"""
Assembling one test form
========================

Run the evolutionary search for a single student and watch the best
fitness climb across generations.
"""
from oatest import EvolveConfig, SynthSpec, evolve, pretrain, synthesize_dataset

dataset, _ = synthesize_dataset(SynthSpec(), seed=13)
model = pretrain(dataset, seed=0)
student = dataset.evaluation_students[0]

result = evolve(student, dataset, model, EvolveConfig(), length=10, rng=42)
for gen, best, mean in result.trace:
    print(f"generation {gen:2d}  best {best:.4f}  mean {mean:.4f}  " + "#" * int(40 * best))

print("chosen questions:", sorted(result.best.genes))
print("distinct forms evaluated:", result.evaluations)
