"""Build localized root codesets by random restart and inspect their packing.

Run with ``python3 demos/root_codeset.py``.
"""

from limfeed import grassmann as gm
from limfeed.numerics import make_rng

for m, theta in [(2, 0.80), (3, 0.90)]:
    print(f"G(4,{m}), cap radius theta = {theta}")
    for trials in (100, 2_000, 20_000):
        cs = gm.make_root_codeset(make_rng(2008), 4, m, 4, theta, trials)
        print(f"  {trials:>6} restarts: min pairwise distance {cs.gamma:.4f},"
              f" farthest member {cs.radius():.4f}")
