"""Adaptive semi-unsupervised weighted oversampling (A-SUWO).

Three steps, each exposed on its own:

1. ``cluster_minority`` groups minority rows with average-linkage
   agglomeration, refusing any merge whose bounding sphere would swallow a
   majority row.
2. ``weight_clusters`` weights clusters by how often their members are
   misclassified by leave-one-out 5-NN against the whole dataset.
3. ``oversample`` spends the synthetic quota per cluster by interpolating
   between members and their in-cluster nearest neighbours.

Distances are taken on z-scored features (fit on the input matrix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import TooFewMinority, ValidationError

SMOOTHING_WEIGHT = 1e-3
DEFAULT_KNN = 5


@dataclass(frozen=True, eq=False)
class LabeledMatrix:
    rows: np.ndarray
    labels: np.ndarray
    stay_ids: tuple[str, ...]

    def __post_init__(self):
        x = np.array(self.rows, dtype=np.float64)
        if x.ndim != 2:
            raise ValidationError("rows must be a 2-d array")
        y = np.asarray(self.labels).astype(np.int64).ravel()
        ids = tuple(str(i) for i in self.stay_ids)
        if not (len(x) == len(y) == len(ids)):
            raise ValidationError("rows, labels and stay ids differ in length")
        if not np.isin(y, (0, 1)).all():
            raise ValidationError("labels must be binary 0/1")
        if len(np.unique(y)) != 2:
            raise ValidationError("both classes must be present")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "rows", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "stay_ids", ids)

    def __len__(self):
        return len(self.labels)

    @property
    def minority_label(self) -> int:
        n1 = int(self.labels.sum())
        return 1 if n1 <= len(self.labels) - n1 else 0

    @property
    def minority_index(self) -> np.ndarray:
        return np.flatnonzero(self.labels == self.minority_label)

    @property
    def majority_index(self) -> np.ndarray:
        return np.flatnonzero(self.labels != self.minority_label)

    def standardized(self) -> np.ndarray:
        mu = self.rows.mean(axis=0)
        sd = self.rows.std(axis=0)
        sd[sd == 0] = 1.0
        return (self.rows - mu) / sd


@dataclass(frozen=True)
class MinorityClusterSet:
    """Clusters as tuples of row indices into the full matrix.

    Clusters are ordered by their smallest member. ``weights`` and ``quota``
    stay ``None`` until the later steps fill them in.
    """

    clusters: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...] | None = None
    quota: tuple[int, ...] | None = None


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d2 = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return np.sqrt(np.maximum(d2, 0.0))


def _sphere_hits_majority(points: np.ndarray, majority: np.ndarray) -> bool:
    """True when the centroid-centred sphere through the farthest member contains a majority row."""
    if len(majority) == 0:
        return False
    centre = points.mean(axis=0)
    radius = np.sqrt(((points - centre) ** 2).sum(axis=1).max())
    dist = np.sqrt(((majority - centre) ** 2).sum(axis=1))
    return bool((dist <= radius).any())


def cluster_minority(d: LabeledMatrix, linkage_threshold: float | None = None) -> MinorityClusterSet:
    """Average-linkage agglomeration of the minority rows with a majority-overlap veto.

    At every step the closest admissible pair of clusters is merged, pairs
    ordered by ``(linkage distance, first cluster, second cluster)`` where a
    cluster is identified by its smallest row index. A pair is inadmissible
    when the sphere centred on the merged centroid and reaching its farthest
    member contains any majority row. Merging stops once no admissible pair
    is within ``linkage_threshold`` (``None`` means no distance limit).
    """
    minority = d.minority_index
    if len(minority) < 2:
        raise TooFewMinority(f"need at least two minority rows, got {len(minority)}")
    z = d.standardized()
    pts = z[minority]
    maj = z[d.majority_index]
    limit = math.inf if linkage_threshold is None else float(linkage_threshold)

    m = len(pts)
    dist = _pairwise(pts, pts)
    # exact zeros on the diagonal and exact symmetry
    dist = np.triu(dist, 1)
    dist = dist + dist.T
    members = {i: [i] for i in range(m)}
    link_sum = dist.copy()
    rejected = np.zeros((m, m), dtype=bool)
    active = np.ones(m, dtype=bool)
    iu, ju = np.triu_indices(m, 1)

    while active.sum() > 1:
        alive = active[iu] & active[ju] & ~rejected[iu, ju]
        ci, cj = iu[alive], ju[alive]
        if len(ci) == 0:
            break
        sizes = np.array([len(members[i]) if active[i] else 0 for i in range(m)], dtype=np.float64)
        avg = link_sum[ci, cj] / (sizes[ci] * sizes[cj])
        order = np.lexsort((cj, ci, avg))
        merged = None
        for k in order:
            if avg[k] > limit:
                break
            a, b = int(ci[k]), int(cj[k])
            if _sphere_hits_majority(pts[members[a] + members[b]], maj):
                rejected[a, b] = rejected[b, a] = True
                continue
            merged = (a, b)
            break
        if merged is None:
            break
        a, b = merged
        members[a] = sorted(members[a] + members.pop(b))
        active[b] = False
        link_sum[a, :] += link_sum[b, :]
        link_sum[:, a] += link_sum[:, b]
        link_sum[a, a] = 0.0
        rejected[a, :] = False
        rejected[:, a] = False

    clusters = sorted(tuple(int(minority[i]) for i in mem) for mem in members.values())
    return MinorityClusterSet(tuple(clusters))


def loo_knn_error(d: LabeledMatrix, k: int = DEFAULT_KNN) -> np.ndarray:
    """Per-row fraction of the ``k`` nearest other rows that carry the other label.

    Neighbour ties are broken by row index.
    """
    z = d.standardized()
    dist = _pairwise(z, z)
    np.fill_diagonal(dist, np.inf)
    k = min(k, len(z) - 1)
    nn = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return (d.labels[nn] != d.labels[:, None]).mean(axis=1)


def weight_clusters(c: MinorityClusterSet, d: LabeledMatrix, k: int = DEFAULT_KNN) -> MinorityClusterSet:
    """Weight each cluster by its members' mean leave-one-out k-NN error.

    A cluster whose members are all classified correctly gets
    ``SMOOTHING_WEIGHT`` before normalisation.
    """
    err = loo_knn_error(d, k)
    raw = np.array([err[list(cl)].mean() for cl in c.clusters])
    raw = np.where(raw > 0, raw, SMOOTHING_WEIGHT)
    w = raw / raw.sum()
    return replace(c, weights=tuple(float(v) for v in w))


def largest_remainder(weights, total: int) -> tuple[int, ...]:
    """Integer split of ``total`` proportional to ``weights``; leftover units go
    to the largest fractional parts, earlier entries first on ties."""
    w = np.asarray(weights, dtype=np.float64)
    exact = w / w.sum() * total
    base = np.floor(exact).astype(np.int64)
    short = total - int(base.sum())
    frac = exact - base
    order = np.lexsort((np.arange(len(w)), -frac))
    base[order[:short]] += 1
    return tuple(int(v) for v in base)


def assign_quota(c: MinorityClusterSet, required: int) -> MinorityClusterSet:
    if c.weights is None:
        raise ValidationError("clusters must be weighted before quotas are assigned")
    return replace(c, quota=largest_remainder(c.weights, required))


def _fresh_ids(existing, count):
    taken = set(existing)
    out = []
    i = 0
    while len(out) < count:
        sid = f"synthetic-{i:06d}"
        if sid not in taken:
            out.append(sid)
        i += 1
    return out


def oversample(
    c: MinorityClusterSet,
    d: LabeledMatrix,
    seed=0,
    k: int = DEFAULT_KNN,
    return_parents: bool = False,
):
    """Append synthetic minority rows ``x + lam * (x' - x)``.

    ``x`` is drawn uniformly from the cluster, ``x'`` uniformly from its ``k``
    nearest in-cluster neighbours (the whole rest of the cluster when smaller;
    ``x`` itself for a singleton), ``lam ~ U(0, 1)``. Interpolation happens in
    the original feature units. Original rows keep their order and come first.

    If ``c.quota`` is unset, quotas are derived from the weights so the result
    is exactly balanced. With ``return_parents`` the ``(n_synthetic, 3)``
    array of ``(x index, x' index, lam)`` is returned as well.
    """
    if c.quota is None:
        n_min = len(d.minority_index)
        c = assign_quota(c, len(d) - 2 * n_min)
    rng = np.random.default_rng(seed)
    z = d.standardized()
    new_rows, parents = [], []
    for members, q in zip(c.clusters, c.quota):
        if q == 0:
            continue
        idx = np.asarray(members)
        if len(idx) == 1:
            neigh = np.zeros((1, 1), dtype=np.int64)
        else:
            dist = _pairwise(z[idx], z[idx])
            np.fill_diagonal(dist, np.inf)
            kk = min(k, len(idx) - 1)
            neigh = np.argsort(dist, axis=1, kind="stable")[:, :kk]
        base = rng.integers(0, len(idx), size=q)
        pick = rng.integers(0, neigh.shape[1], size=q)
        lam = rng.random(q)
        x = d.rows[idx[base]]
        xp = d.rows[idx[neigh[base, pick]]]
        new_rows.append(x + lam[:, None] * (xp - x))
        parents.append(np.column_stack([idx[base], idx[neigh[base, pick]], lam]))
    if not new_rows:
        out = d
        parents_arr = np.empty((0, 3))
    else:
        synth = np.vstack(new_rows)
        parents_arr = np.vstack(parents)
        out = LabeledMatrix(
            np.vstack([d.rows, synth]),
            np.r_[d.labels, np.full(len(synth), d.minority_label)],
            d.stay_ids + tuple(_fresh_ids(d.stay_ids, len(synth))),
        )
    return (out, parents_arr) if return_parents else out


def balance_dataset(
    d: LabeledMatrix,
    seed=0,
    linkage_threshold: float | None = None,
    k: int = DEFAULT_KNN,
    return_parents: bool = False,
):
    """Oversample the minority class until both classes have equal counts.

    Majority rows pass through untouched. Balanced input is returned as is.
    """
    n_min = len(d.minority_index)
    required = len(d) - 2 * n_min
    if required == 0:
        return (d, np.empty((0, 3))) if return_parents else d
    clusters = cluster_minority(d, linkage_threshold)
    clusters = assign_quota(weight_clusters(clusters, d, k), required)
    return oversample(clusters, d, seed, k, return_parents=return_parents)
