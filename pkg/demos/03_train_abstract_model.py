"""Learn an abstract model for a tiny world and inspect what it captured.

Uses the two-cell line world so the whole run takes seconds; swap in a Pinball
dataset (demos/02) and larger step counts for the real thing.
"""

import numpy as np

from skillworld.learning import TrainConfig, train_model
from skillworld.lineworld import LineWorldEnv
from skillworld.pinball import collect_dataset

env = LineWorldEnv(n_cells=2)
rng = np.random.default_rng(1)
ds = collect_dataset(env, 400, rng)
print(f"collected {len(ds)} option transitions from the 2-cell line world")

cfg = TrainConfig(d_z=2, hidden=(32, 32), critic_hidden=(32,), critic_emb=16,
                  sigma_enc=0.02, n_steps=3000, learning_rate=3e-3, log_every=500)
model, log = train_model(ds, cfg, np.random.default_rng(5))
print("\nstep   phi     init    trans   reward  dur     MI1    MI2")
for row in log:
    print(f"{row.step:<6d} {row.loss_phi:<7.3f} {row.loss_I:<7.4f} {row.loss_T:<7.3f} "
          f"{row.loss_R:<7.4f} {row.loss_tau:<7.4f} {row.mi_bound_1:<6.2f} {row.mi_bound_2:<6.2f}")

s, o, r, s2, tau, init, _ = ds.arrays()
z = model.encode(s)
acc = ((model.initiation_probs(z) > 0.5) == init).mean()
print(f"\ninitiation accuracy: {acc:.3f}")

zs = model.encode(np.array([[0.0], [1.0]]))
print(f"z(x=0) = {np.round(zs[0], 3)},  z(x=1) = {np.round(zs[1], 3)}")
for (xi, opt, xt) in [(0, 1, 1), (1, 0, 0)]:
    ctx = np.concatenate([zs[xi:xi + 1], np.eye(2)[opt:opt + 1]], axis=1)
    w, means, stds = model.transition.mixture_params_np(ctx)
    close = (np.abs(means[0] - zs[xt]) <= 3 * stds[0]).all(axis=-1)
    print(f"T(z'|x={xi}, opt {opt}): {w[0][close].sum():.1%} of mixture mass "
          f"within 3 sigma of z(x={xt})")

model.save("/tmp/skillworld_demo_model.ckpt")
print("\ncheckpoint written to /tmp/skillworld_demo_model.ckpt "
      f"(checksum {model.checksum()[:12]})")
