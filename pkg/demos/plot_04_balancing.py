"""
Oversampling the minority class with A-SUWO
===========================================

Cluster the minority class, weight the clusters by how hard they are to
classify, then interpolate new rows inside each cluster until the classes
are level.
"""

import numpy as np

from vitalforge.balance import LabeledMatrix, assign_quota, balance_dataset, cluster_minority, weight_clusters

rng = np.random.default_rng(0)
minority = np.vstack([rng.normal([0, 0], 0.4, (8, 2)), rng.normal([4, 1], 0.4, (6, 2))])
majority = rng.normal([2, 0.5], 1.2, (50, 2))
d = LabeledMatrix(np.vstack([minority, majority]), np.r_[np.ones(14, int), np.zeros(50, int)], [f"s{i}" for i in range(64)])

###############################################################################
# Clusters never swallow a majority point.

c = cluster_minority(d)
c = assign_quota(weight_clusters(c, d), len(d) - 2 * 14)
for members, w, q in zip(c.clusters, c.weights, c.quota):
    print(f"cluster of {len(members):2d}  weight {w:.3f}  gets {q} synthetic rows")

###############################################################################
# The balanced set, with each new row's parents.

out, parents = balance_dataset(d, seed=0, return_parents=True)
print(f"{(out.labels == 1).sum()} minority vs {(out.labels == 0).sum()} majority")
a, b, lam = parents[0]
print(f"first synthetic row = row {int(a)} + {lam:.3f} * (row {int(b)} - row {int(a)})")
