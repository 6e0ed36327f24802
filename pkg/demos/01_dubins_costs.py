# Edge costs between oriented waypoints are Dubins path lengths: the shortest
# curve a fixed-wing vehicle can fly with a bounded turn radius.

import math

import numpy as np

from svdgp.geometry import Pose, cost, cost_matrix, dubins_shortest_path

a = Pose(0.0, 0.0, 0.0)
b = Pose(20.0, 10.0, math.pi / 2)

path = dubins_shortest_path(a, b, 5.0)
print(path.word, [round(s, 3) for s in path.segment_lengths], round(path.total, 3))

# Costs are asymmetric, which is why the tour subproblems are ATSPs.
print("a->b", round(cost(a, b, 5.0), 3), " b->a", round(cost(b, a, 5.0), 3))

# A tighter turn radius gets closer to the straight-line distance.
for r in (10.0, 5.0, 1.0, 0.1):
    print(f"r={r:5}  length={cost(a, b, r):8.3f}  euclid={math.dist((0, 0), (20, 10)):.3f}")

rng = np.random.default_rng(0)
poses = [Pose(*rng.uniform(0, 50, 2), rng.uniform(0, 2 * math.pi)) for _ in range(5)]
c = cost_matrix(poses, 5.0)
np.set_printoptions(precision=1, suppress=True)
print(c)
print("max asymmetry", np.abs(c - c.T).max())
