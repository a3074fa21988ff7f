"""
Sweeping the diversity threshold
================================

The non-elite half of each generation must differ from every survivor by
more than tau * 0.15 * L questions. Sweep tau and write one report per value.
"""
import csv
import tempfile
from pathlib import Path

from oatest import ExperimentConfig, run_tau_sweep
from oatest.config import DataSource
from oatest.data import SynthSpec

out = Path(tempfile.mkdtemp(prefix="tau_sweep_"))
config = ExperimentConfig(data=DataSource(synth=SynthSpec()), test_lengths=(5, 10),
                          master_seed=42, max_students=10, output_dir=str(out))
run_tau_sweep(config)

with open(out / "tau_sweep.csv") as fh:
    for row in csv.DictReader(fh):
        print(f"tau={float(row['tau_coeff']):<5} L={row['L']:<3} ACC={float(row['mean_acc']):.4f}")
print("reports under", out)
