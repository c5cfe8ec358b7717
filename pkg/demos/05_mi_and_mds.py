"""Post-hoc analysis: KSG mutual information and a classical MDS embedding.

Validates the estimator on closed-form cases, then analyzes a freshly trained
toy encoder and exports the CSV artifacts the plots package consumes.
"""

import numpy as np

from skillworld.analysis import classical_mds, export_metrics, knn_mi, mi_matrix
from skillworld.learning import TrainConfig, train_model
from skillworld.lineworld import LineWorldEnv
from skillworld.pinball import collect_dataset

print("== estimator sanity on closed forms ==")
rng = np.random.default_rng(0)
x, y = rng.random(5000), rng.random(5000)
print(f"  independent uniforms: {knn_mi(x, y, 3):+.4f} nats (target 0)")
rho = 0.9
z = rng.multivariate_normal([0, 0], [[1, rho], [rho, 1]], size=5000)
print(f"  gaussian rho=0.9:     {knn_mi(z[:, 0], z[:, 1], 3):.4f} nats "
      f"(target {-0.5 * np.log(1 - rho**2):.4f})")

print("\n== MI matrix for a trained toy encoder ==")
env = LineWorldEnv(n_cells=3)
ds = collect_dataset(env, 600, np.random.default_rng(1))
cfg = TrainConfig(d_z=2, hidden=(32, 32), critic_hidden=(32,), critic_emb=16,
                  sigma_enc=0.02, n_steps=1500, learning_rate=3e-3)
model, _ = train_model(ds, cfg, np.random.default_rng(5))
s = ds.arrays()[0]
z = model.encode(s)
mi = mi_matrix(s, z, k=3, row_labels=["x"])
print(f"  rows={mi.rows} cols={mi.cols}")
print(f"  values: {np.round(mi.values, 3)}")

print("\n== classical MDS of the embedding ==")
pts = model.encode(np.array([[0.0], [0.5], [1.0]]))
pts = np.concatenate([pts + 0.01 * np.random.default_rng(2).standard_normal((3, 2))
                      for _ in range(10)])
emb, deficient = classical_mds(pts, 2)
print(f"  embedded {emb.shape[0]} points, rank-deficient: {deficient}")
print(f"  cluster means along first axis: "
      f"{[round(float(emb[i::3, 0].mean()), 3) for i in range(3)]}")

paths = export_metrics("/tmp/skillworld_demo_analysis",
                       {"seed": 0, "note": "demo run"}, mi=mi,
                       mds_embedding=emb, mds_ground=np.tile(s[:3, :1], (10, 2)))
print("\nwrote:", *paths, sep="\n  ")
