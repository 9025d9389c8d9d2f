#!/usr/bin/env python3
"""
Does the weighted learner survive adversarial proxy ratings?

Reruns the collinear regression experiment while an increasing share of the
expert ratings is flipped to endorse the wrong sources.  The median
advantage should shrink as contamination grows but stay positive; the
weights are inferred jointly with the task belief, so a minority of honest
ratings keeps pulling the belief back toward the target.

The CLI runs the same cells with the full CSV and SVG outputs:

    relbayes run sweep.cfg --out results/ --jobs 1

with a config file per cell, e.g.

    experiment = linear
    n_simulations = 50
    multicollinearity = 2.0
    contamination_pct = 50.0
"""
N_SIMULATIONS = 12          # keep the script snappy; the acceptance gate runs 50
CONTAMINATION = (0, 25, 50, 75)

import numpy as np

from relbayes.harness.config import parse_config_text
from relbayes.harness.runner import run_experiment

print(f"{N_SIMULATIONS} simulations per cell\n")
print("contamination   median advantage   positive share")
for pct in CONTAMINATION:
    config = parse_config_text(
        "experiment = linear\n"
        f"n_simulations = {N_SIMULATIONS}\n"
        "multicollinearity = 2.0\n"
        "target_resemblance_pct = 100.0\n"
        f"contamination_pct = {pct}.0\n")
    results = run_experiment(config)
    adv = np.array([r.advantage for r in results if r.error is None])
    share = float(np.mean(adv > 0.0))
    print(f"{pct:10d}%   {np.median(adv):+15.4f}   {share:13.0%}")
