"""A tour of the Pinball domain: physics, options, datasets, rendering."""

import numpy as np

from skillworld.pinball import (
    OPTION_NAMES,
    PinballEnv,
    PinballState,
    collect_dataset,
    default_config,
)

env = PinballEnv(default_config())
rng = np.random.default_rng(0)

print("== elastic physics ==")
s = PinballState(0.97, 0.3, 1.0, 0.0)
s2, _ = env.step(s, [0, 0])
print(f"  head-on east wall: vx {s.vx:+.2f} -> {s2.vx:+.2f} (speed preserved)")

print("\n== option execution ==")
s = env.reset(rng)
avail = env.initiation_set(s)
print(f"  start ({s.x:.2f},{s.y:.2f}), available: "
      f"{[OPTION_NAMES[i] for i in np.flatnonzero(avail)]}")
for o in np.flatnonzero(avail)[:2]:
    sample, end = env.execute_option(s, int(o), rng)
    print(f"  {OPTION_NAMES[o]}: tau={sample.tau} r_gamma={sample.r_gamma:.1f} "
          f"landed ({end.x:.3f},{end.y:.3f})")

print("\n== dataset collection (uniform random options) ==")
ds = collect_dataset(env, 2000, rng)
s_arr, o_arr, r_arr, s2_arr, tau_arr, init_arr, newep = ds.arrays()
print(f"  {len(ds)} samples, {newep.sum()} episodes")
print(f"  tau: mean {tau_arr.mean():.1f}, p90 {np.percentile(tau_arr, 90):.0f}")
print(f"  r_gamma: mean {r_arr.mean():.1f}, min {r_arr.min():.1f}")
print(f"  option counts: {dict(zip(OPTION_NAMES, np.bincount(o_arr, minlength=4)))}")

print("\n== binary round trip ==")
ds.save("/tmp/skillworld_demo_dataset.bin")
from skillworld.datasets import TransitionDataset
back = TransitionDataset.load("/tmp/skillworld_demo_dataset.bin")
print(f"  saved and reloaded {len(back)} samples bit-exactly:",
      all((a == b).all() for a, b in zip(ds.arrays(), back.arrays())))

print("\n== rendering ==")
frame = env.render(env.reset(rng))
print(f"  50x50 frame, range [{frame.min():.1f}, {frame.max():.1f}], "
      f"obstacle pixels {(frame == 0.0).sum()}, ball pixels {(frame == 0.5).sum()}")
rows = (frame[::3, ::3] < 0.9)
print("  coarse view (x = obstacle or ball):")
for r in rows:
    print("   " + "".join("x" if v else "." for v in r))
