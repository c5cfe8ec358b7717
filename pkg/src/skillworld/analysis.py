"""Post-hoc analysis: KSG mutual information, classical MDS, metric export.

The MI estimator is KSG #1: psi(k) + psi(n) - mean[psi(n_x + 1) + psi(n_y + 1)]
with max-norm neighborhoods; marginal counts use strict inequality against the
k-th joint neighbor distance. Distance ties resolve by sample index, so the
estimate is deterministic on quantized data.
"""

import csv
import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma


def _as_columns(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def _kth_neighbor_distance(z: np.ndarray, k: int) -> np.ndarray:
    """Max-norm distance to each point's k-th nearest neighbor (self excluded),
    with exact ties broken by sample index."""
    n = z.shape[0]
    tree = cKDTree(z)
    # over-fetch so equal-distance runs can be reordered by index
    m = min(n, k + 8)
    dist, idx = tree.query(z, k=m, p=np.inf)
    eps = np.empty(n)
    for i in range(n):
        d = dist[i]
        j = idx[i]
        order = np.lexsort((j, d))
        d = d[order]
        j = j[order]
        keep = j != i
        eps[i] = d[keep][k - 1]
    return eps


def _marginal_counts(x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """n_x(i): points strictly within eps_i of x_i in max-norm, self excluded.

    Where eps_i is exactly 0 (duplicate joint points, as happens on quantized
    data), the open ball is empty by definition; counting the ties instead
    (closed ball at radius 0) keeps the estimator finite and is the standard
    mixed-distribution treatment. Those tie counts are >= k by construction.
    """
    zero = eps == 0.0
    if x.shape[1] == 1:
        col = x[:, 0]
        xs = np.sort(col, kind="stable")
        lo = np.searchsorted(xs, col - eps, side="right")
        hi = np.searchsorted(xs, col + eps, side="left")
        counts = (hi - lo - 1).astype(np.float64)
        if zero.any():
            lo0 = np.searchsorted(xs, col[zero], side="left")
            hi0 = np.searchsorted(xs, col[zero], side="right")
            counts[zero] = (hi0 - lo0 - 1).astype(np.float64)
        return counts
    tree = cKDTree(x)
    counts = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        pts = tree.query_ball_point(x[i], eps[i], p=np.inf)
        if eps[i] > 0:
            counts[i] = sum(1 for j in pts
                            if np.max(np.abs(x[j] - x[i])) < eps[i]) - 1
        else:
            counts[i] = len(pts) - 1
    return counts


def knn_mi(x, y, k: int = 3) -> float:
    """KSG estimator #1 of MI(X; Y) in nats."""
    x = _as_columns(x)
    y = _as_columns(y)
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError("x and y must have the same number of samples")
    if k < 1 or n <= k:
        raise ValueError(f"need n > k >= 1, got n={n}, k={k}")
    z = np.concatenate([x, y], axis=1)
    eps = _kth_neighbor_distance(z, k)
    nx = _marginal_counts(x, eps)
    ny = _marginal_counts(y, eps)
    return float(digamma(k) + digamma(n) - np.mean(digamma(nx + 1) + digamma(ny + 1)))


@dataclass
class MIMatrix:
    rows: list          # ground feature labels
    cols: list          # abstract feature labels
    values: np.ndarray  # (len(rows), len(cols)), clamped at 0

    def row_max(self) -> np.ndarray:
        return self.values.max(axis=1)


def mi_matrix(ground_features: np.ndarray, abstract_features: np.ndarray,
              k: int = 3, row_labels=None, col_labels=None) -> MIMatrix:
    """Pairwise scalar KSG MI between every ground dim and every abstract dim."""
    G = _as_columns(ground_features)
    Z = _as_columns(abstract_features)
    if G.shape[0] != Z.shape[0]:
        raise ValueError("sample counts differ")
    vals = np.zeros((G.shape[1], Z.shape[1]))
    for i in range(G.shape[1]):
        for j in range(Z.shape[1]):
            vals[i, j] = max(0.0, knn_mi(G[:, i], Z[:, j], k=k))
    rows = row_labels or [f"s{i}" for i in range(G.shape[1])]
    cols = col_labels or [f"z{j}" for j in range(Z.shape[1])]
    return MIMatrix(rows=list(rows), cols=list(cols), values=vals)


def classical_mds(points: np.ndarray, target_dim: int = 2):
    """Classical (Torgerson) MDS from pairwise Euclidean distances.

    Double-centers the squared-distance matrix, takes the top eigenpairs, and
    returns coordinates eigvec * sqrt(eigval). Columns follow a fixed sign
    convention (first entry of magnitude > 1e-12 is positive). Rank-deficient
    inputs are zero-padded and flagged.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n < 3:
        raise ValueError("classical MDS needs at least 3 points")
    diff = pts[:, None, :] - pts[None, :, :]
    D2 = (diff ** 2).sum(axis=-1)
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ D2 @ J
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]

    emb = np.zeros((n, target_dim))
    deficient = False
    for d in range(target_dim):
        if d < evals.size and evals[d] > 1e-10:
            col = evecs[:, d] * np.sqrt(evals[d])
            nz = np.flatnonzero(np.abs(col) > 1e-12)
            if nz.size and col[nz[0]] < 0:
                col = -col
            emb[:, d] = col
        else:
            deficient = True
    return emb, deficient


# -- export -----------------------------------------------------------------


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode("utf-8")).hexdigest()


def write_mi_matrix_csv(path, mi: MIMatrix):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["feature"] + mi.cols)
        for i, r in enumerate(mi.rows):
            w.writerow([r] + [repr(float(v)) for v in mi.values[i]])


def read_mi_matrix_csv(path) -> MIMatrix:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    cols = rows[0][1:]
    labels = [r[0] for r in rows[1:]]
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return MIMatrix(rows=labels, cols=cols, values=values)


def write_mds_csv(path, embedding: np.ndarray, ground_xy: np.ndarray):
    with open(path, "w", newline="") as f:
        f.write("z1,z2,ground_x,ground_y\n")
        for (a, b), (gx, gy) in zip(embedding, ground_xy):
            f.write(f"{repr(float(a))},{repr(float(b))},{repr(float(gx))},{repr(float(gy))}\n")


def export_metrics(outdir, manifest: dict, mi: MIMatrix | None = None,
                   mds_embedding=None, mds_ground=None, curve=None):
    """Write whatever artifacts the run produced plus a run manifest.

    The manifest (seeds, config hash, versions) is always written; other files
    appear only when their data is given. Returns the list of paths written.
    """
    import os
    from . import __version__
    from .planner import write_curve_csv

    os.makedirs(outdir, exist_ok=True)
    paths = []
    manifest = dict(manifest)
    manifest.setdefault("skillworld_version", __version__)
    manifest.setdefault("numpy_version", np.__version__)
    mpath = os.path.join(outdir, "manifest.json")
    with open(mpath, "w") as f:
        json.dump(manifest, f, indent=2, default=str)
    paths.append(mpath)
    if mi is not None:
        p = os.path.join(outdir, "mi_matrix.csv")
        write_mi_matrix_csv(p, mi)
        paths.append(p)
    if mds_embedding is not None:
        p = os.path.join(outdir, "mds.csv")
        write_mds_csv(p, mds_embedding, mds_ground)
        paths.append(p)
    if curve is not None:
        p = os.path.join(outdir, "curves.csv")
        write_curve_csv(p, curve)
        paths.append(p)
    return paths
