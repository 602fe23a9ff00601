"""Tour of the Grassmann tools: distance, rotation and scaling toward a center.

Run with ``python3 demos/geometry_tour.py``.
"""

import numpy as np

from limfeed import grassmann as gm
from limfeed.numerics import haar_semiunitary, make_rng

rng = make_rng(7)

# Two random planes in C^4. The projection 2-norm distance lies in [0, 1].
v1 = haar_semiunitary(rng, 4, 2)
v2 = haar_semiunitary(rng, 4, 2)
print(f"dist(v1, v2)           = {gm.dist(v1, v2):.6f}")
print(f"dual form              = {gm.dist_dual(v1, v2):.6f}")

# Changing the basis inside a subspace does not move the point.
q = haar_semiunitary(rng, 2, 2)
print(f"dist(v1 q, v2)         = {gm.dist(v1 @ q, v2):.6f}")

# Rotation carries a whole codeset onto a new center and keeps all distances.
items = haar_semiunitary(rng, 4, 2, size=5)
moved = gm.rotate(items, items[0], v1)
drift = np.abs(gm.distance_matrix(moved) - gm.distance_matrix(items)).max()
print(f"rotation distance drift = {drift:.2e}, new center offset = {gm.dist(moved[0], v1):.2e}")

# Scaling pulls a point toward the center by an exact factor alpha.
for alpha in (0.9, 0.5, 0.25):
    s = gm.scale(v2, v1, alpha)
    print(f"alpha = {alpha:4.2f}: dist(v1, scaled) = {gm.dist(v1, s):.6f}"
          f" (target {alpha * gm.dist(v1, v2):.6f})")
