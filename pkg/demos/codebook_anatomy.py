"""Assemble a four-bit codebook for a correlated channel and look inside it.

The codebook mixes statistical codewords (eigenvector spans of the transmit
covariance), local codewords packed around each of them, and random
codewords drawn from the channel statistics.

Run with ``python3 demos/codebook_anatomy.py``.
"""

import numpy as np

from limfeed import grassmann as gm
from limfeed.codebook import build_codebook, pa_gain_ratio, select_distance, select_mi
from limfeed.channel import sample
from limfeed.harness import preset_model
from limfeed.numerics import make_rng

model = preset_model("fig3")
root = gm.make_root_codeset(make_rng(1), 4, 2, 4, 0.80, 20_000)
cb = build_codebook(model, 2, 4, 0.1, root, "uniform", 1.0, make_rng(2), n_rvq=5)

plan = cb.plan
print(f"{len(cb)} codewords: {plan.n_stat} statistical, local {plan.n_loc}, {plan.n_rvq} random")
print("local scale factors:", np.round(plan.alphas, 3))
print(f"min pairwise distance {gm.min_dist(cb.codewords):.4f}")
for i, (tag, w) in enumerate(zip(cb.tags, cb.codewords)):
    print(f"  {i:>2} {tag:<10} gain ratio {pa_gain_ratio(w):.3f}")

# How often do the two selection rules agree on fresh channels?
rng = make_rng(3)
h = sample(model, rng, size=500)
agree = np.mean([select_mi(cb, x, 10.0) == select_distance(cb, x) for x in h])
print(f"selectors agree on {agree:.1%} of 500 channels")
