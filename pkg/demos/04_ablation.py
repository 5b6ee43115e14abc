# ### Which loss terms help?
#
# Train with and without the two fusion losses on a few seeds and compare
# held-out rank correlation and interval width. Results are written to
# `ablation.csv` for plotting elsewhere.
#
# Usage: python demos/04_ablation.py [epochs] [n_seeds]

import csv
import sys

import numpy as np

from evifuse.fusion import FusionConfig
from evifuse.metrics import evaluate
from evifuse.synth import SynthConfig, generate_dataset
from evifuse.train import TrainConfig, train

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 30
n_seeds = int(sys.argv[2]) if len(sys.argv) > 2 else 3

variants = {
    "multitask only": FusionConfig(enable_cross_region=False, enable_local_global=False),
    "+ cross-region": FusionConfig(enable_local_global=False),
    "+ local-global": FusionConfig(enable_cross_region=False),
    "all terms": FusionConfig(),
}

rows = []
for seed in range(n_seeds):
    train_data, test_data = generate_dataset(SynthConfig(seed=seed)).split(0.2, seed=seed)
    for name, cfg in variants.items():
        scorer, _ = train(train_data, cfg, TrainConfig(epochs=epochs, seed=seed))
        m = evaluate(scorer, test_data, cfg)
        rows.append({"variant": name, "seed": seed, **m.as_dict()})
        print(f"seed {seed}  {name:15s}  srcc {m.srcc:.4f}  plcc {m.plcc:.4f}  "
              f"ci {m.mean_ci_width:.3f} (single crop {m.mean_ci_width_single:.3f})")

# ### Medians over seeds

for name in variants:
    sel = [r for r in rows if r["variant"] == name]
    print(f"{name:15s}  median srcc {np.median([r['srcc'] for r in sel]):.4f}  "
          f"median ci {np.median([r['mean_ci_width'] for r in sel]):.3f}")

with open("ablation.csv", "w", newline="") as fh:
    w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
