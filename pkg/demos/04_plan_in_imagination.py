"""The full planning loop on the line world: pretrain, imagine, act.

The agent never updates its policy on real transitions; real rollouts only
feed the goal head and the evaluation curve.
"""

import numpy as np

from skillworld.learning import TrainConfig
from skillworld.lineworld import LineWorldEnv
from skillworld.planner import DDQNConfig, GoalSpec, PlannerConfig, run_algorithm1

env = LineWorldEnv(n_cells=3)
goal = GoalSpec(center=np.array([1.0]), radius=0.1)

cfg = PlannerConfig(
    pretrain_samples=300,
    real_steps=40,
    refresh_every=10,
    imagination_steps=500,
    n_eval_episodes=10,
    eval_episode_cap=10,
    goal_samples=20,
    stop_at_success=1.0,
    model=TrainConfig(d_z=2, hidden=(32, 32), critic_hidden=(32,), critic_emb=16,
                      sigma_enc=0.02, n_steps=1500, learning_rate=3e-3,
                      log_every=500),
    ddqn=DDQNConfig(lr=3e-3, replay_start=100, buffer_size=5000,
                    target_update_interval=200, update_interval=1,
                    batch_size=32, exploration_fraction=0.5, rollout_len=10,
                    hidden=(32, 32)),
)

curve, model, agent, task = run_algorithm1(env, goal, cfg, seed=11)
print(f"imagined steps: {agent.imagined_steps}, agent updates: {agent.updates}")
print("\nreal steps | success | mean return | epsilon")
for p in curve:
    print(f"{p.ground_env_steps:>10d} | {p.success_rate:^7.2f} | {p.mean_return:>11.2f} "
          f"| {p.epsilon:.2f}")
