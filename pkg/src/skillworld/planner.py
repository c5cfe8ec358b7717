"""Goal-based planning in imagination with an options-aware Double DQN.

The task MDP augments the learned abstract model with a goal region in
z-space (calibrated ball, later a trained classifier) and a goal reward;
abstract goal states are absorbing. The agent trains exclusively on imagined
rollouts; the real environment is touched only to collect data for the
task heads and to evaluate.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, AdamState
from .learning import AbstractModel, TrainConfig, train_model, _onehot
from .nets import MLP
from .pinball import collect_dataset
from .rng import substream


@dataclass(frozen=True)
class GoalSpec:
    """Ground goal region: a ball around a position in ground coordinates."""

    center: np.ndarray
    radius: float

    def contains(self, position: np.ndarray) -> bool:
        return float(np.linalg.norm(np.asarray(position) - self.center)) <= self.radius


@dataclass
class DDQNConfig:
    lr: float = 1e-4
    replay_start: int = 1000
    buffer_size: int = 100000
    target_update_interval: int = 10000
    update_interval: int = 5
    batch_size: int = 32
    final_epsilon: float = 0.1
    eval_epsilon: float = 0.001
    exploration_fraction: float = 0.3
    init_threshold: float = 0.5
    rollout_len: int = 100
    hidden: tuple = (128, 128)


@dataclass
class PlannerConfig:
    pretrain_samples: int = 50000
    real_steps: int = 100000
    refresh_every: int = 1000            # H, in real primitive steps
    imagination_steps: int = 5000        # per refresh
    n_eval_episodes: int = 20
    eval_episode_cap: int = 50
    r_task: float = 100.0
    goal_samples: int = 100
    goal_classifier_steps: int = 300
    stop_at_success: float | None = None   # stop once an evaluation reaches this
    model: TrainConfig = field(default_factory=TrainConfig)
    ddqn: DDQNConfig = field(default_factory=DDQNConfig)


class TaskModel:
    """Abstract model plus goal membership and the augmented task reward.

    Goal membership starts as a calibrated z-ball (center = mean encoded goal
    sample, radius = 95th percentile distance) and switches to a trained
    classifier once real rollouts supply labels.
    """

    MIN_CLASSIFIER_POSITIVES = 20

    def __init__(self, model: AbstractModel, goal_z: np.ndarray, r_task: float,
                 gamma: float):
        if goal_z.shape[0] == 0:
            raise ValueError("goal region is empty after encoding")
        self.model = model
        self.r_task = r_task
        self.gamma = gamma
        self.goal_z = goal_z
        self.center = goal_z.mean(axis=0)
        d = np.linalg.norm(goal_z - self.center, axis=1)
        # tiny floor so degenerate sample sets (all identical) stay inside
        self.radius = max(float(np.percentile(d, 95)),
                          1e-9 * (1.0 + float(np.linalg.norm(self.center))))
        self.classifier = None

    def in_goal(self, z: np.ndarray) -> bool:
        if self.classifier is not None:
            logit = self.classifier.forward_np(np.atleast_2d(z))[0, 0]
            return logit >= 0.0
        return float(np.linalg.norm(z - self.center)) <= self.radius

    def fit_classifier(self, z: np.ndarray, labels: np.ndarray, steps: int,
                       rng: np.random.Generator, lr: float = 1e-2):
        """Logistic head on z; replaces the calibrated ball once enough real
        positives exist. The calibration encodings join as positives."""
        if labels.sum() < self.MIN_CLASSIFIER_POSITIVES or labels.all():
            return False
        z = np.concatenate([z, self.goal_z], axis=0)
        labels = np.concatenate([labels, np.ones(len(self.goal_z), dtype=bool)])
        clf = MLP(z.shape[1], (32,), 1, rng, name="goal_clf")
        opt = AdamState(lr=lr)
        y = labels.astype(np.float64)[:, None]
        w = np.where(y > 0.5, 0.5 / max(y.mean(), 1e-6), 0.5 / max(1 - y.mean(), 1e-6))
        params = clf.params()
        B = min(64, z.shape[0])
        for _ in range(steps):
            idx = rng.integers(0, z.shape[0], size=B)
            logits = clf.forward(Tensor(z[idx]))
            yt = Tensor(y[idx])
            nll = ad.add(ad.mul(yt, ad.softplus(ad.neg(logits))),
                         ad.mul(Tensor(1.0 - y[idx]), ad.softplus(logits)))
            loss = ad.mean_all(ad.mul(Tensor(w[idx]), nll))
            ad.zero_grads(params)
            ad.backward(loss)
            ad.adam_step(params, opt)
        self.classifier = clf
        return True


def make_task_mdp(model: AbstractModel, goal_observations: np.ndarray,
                  r_task: float, gamma: float) -> TaskModel:
    """Encode ground goal samples and calibrate the z-space goal ball."""
    goal_z = model.encode(np.atleast_2d(goal_observations))
    return TaskModel(model, goal_z, r_task, gamma)


@dataclass(frozen=True)
class AbstractTupleState:
    """Planner-side abstract state (z_prev, o_prev, z); o_prev = n_options is
    the initial sentinel and z_prev is the zero vector then."""

    z_prev: np.ndarray
    o_prev: int
    z: np.ndarray


def initial_tuple(z0: np.ndarray, n_options: int) -> AbstractTupleState:
    return AbstractTupleState(z_prev=np.zeros_like(z0), o_prev=n_options, z=z0)


def tuple_features(s: AbstractTupleState, n_options: int) -> np.ndarray:
    return np.concatenate([s.z_prev, _onehot([s.o_prev], n_options + 1)[0], s.z])


class ReplayBuffer:
    def __init__(self, capacity, feat_dim, n_options):
        self.capacity = capacity
        self.x = np.zeros((capacity, feat_dim))
        self.o = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.disc = np.zeros(capacity)
        self.x2 = np.zeros((capacity, feat_dim))
        self.terminal = np.zeros(capacity, dtype=bool)
        self.mask2 = np.zeros((capacity, n_options), dtype=bool)
        self.size = 0
        self.ptr = 0

    def add(self, x, o, r, disc, x2, terminal, mask2):
        i = self.ptr
        self.x[i] = x
        self.o[i] = o
        self.r[i] = r
        self.disc[i] = disc
        self.x2[i] = x2
        self.terminal[i] = terminal
        self.mask2[i] = mask2
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size, rng):
        idx = rng.integers(0, self.size, size=batch_size)
        return (self.x[idx], self.o[idx], self.r[idx], self.disc[idx],
                self.x2[idx], self.terminal[idx], self.mask2[idx])


class DDQNAgent:
    """Double DQN over abstract tuple features, masked by initiation probability."""

    def __init__(self, feat_dim: int, n_options: int, config: DDQNConfig,
                 rng: np.random.Generator):
        self.config = config
        self.n_options = n_options
        self.q_online = MLP(feat_dim, config.hidden, n_options, rng, name="q")
        self.q_target = MLP(feat_dim, config.hidden, n_options, rng, name="qt")
        self._sync_target()
        self.replay = ReplayBuffer(config.buffer_size, feat_dim, n_options)
        self.opt = AdamState(lr=config.lr)
        self.updates = 0
        self.imagined_steps = 0

    def _sync_target(self):
        for pt, po in zip(self.q_target.params(), self.q_online.params()):
            pt.values[...] = po.values

    def q_values(self, x: np.ndarray) -> np.ndarray:
        return self.q_online.forward_np(np.atleast_2d(x))[0]

    def act(self, x: np.ndarray, mask: np.ndarray, epsilon: float,
            rng: np.random.Generator) -> int:
        """Epsilon-greedy among masked options; greedy ties go to the lowest index."""
        avail = np.flatnonzero(mask)
        if avail.size == 0:
            raise ValueError("no available option to act on")
        if rng.random() < epsilon:
            return int(rng.choice(avail))
        q = self.q_values(x).copy()
        q[~mask] = -np.inf
        return int(np.argmax(q))

    def epsilon(self, total_steps: int) -> float:
        decay = max(1, int(self.config.exploration_fraction * total_steps))
        frac = min(1.0, self.imagined_steps / decay)
        return 1.0 + frac * (self.config.final_epsilon - 1.0)


def ddqn_update(agent: DDQNAgent, batch) -> float:
    """One Double-DQN step: online argmax over available options picks the
    bootstrap action, the target net scores it, discount is gamma**tau_hat."""
    x, o, r, disc, x2, terminal, mask2 = batch
    q_next_online = agent.q_online.forward_np(x2)
    q_next_online[~mask2] = -np.inf
    a_star = np.argmax(q_next_online, axis=1)
    q_next_target = agent.q_target.forward_np(x2)
    rows = np.arange(x2.shape[0])
    bootstrap = q_next_target[rows, a_star]
    bootstrap[~mask2.any(axis=1)] = 0.0
    y = r + np.where(terminal, 0.0, disc * bootstrap)

    params = agent.q_online.params()
    q = ad.take_per_row(agent.q_online.forward(Tensor(x)), o)
    loss = ad.mean_all(ad.square(ad.sub(q, Tensor(y))))
    ad.zero_grads(params)
    ad.backward(loss)
    ad.adam_step(params, agent.opt)
    agent.updates += 1
    if agent.updates % agent.config.target_update_interval == 0:
        agent._sync_target()
    return float(loss.values)


def imagine_rollout(task: TaskModel, agent: DDQNAgent, start: AbstractTupleState,
                    max_len: int, rng: np.random.Generator, epsilon: float,
                    collect: bool = True):
    """Roll the learned model forward from an encoded real start state.

    Options are masked by the initiation head; goal states absorb with reward
    R_theta + r_task; rollouts truncate (flagged) when no option clears the
    threshold. Returns (trajectory, truncated_flag).
    """
    model = task.model
    n_opt = model.n_options
    thr = agent.config.init_threshold
    traj = []
    s = start
    mask = model.initiation_probs(s.z)[0] >= thr
    for _ in range(max_len):
        if not mask.any():
            return traj, True
        feat = tuple_features(s, n_opt)
        o = agent.act(feat, mask, epsilon, rng)
        pair = model.pair_context(s.z_prev, s.o_prev, s.z, o)
        r_base = model.predict_reward(pair)
        if task.in_goal(s.z):
            r = r_base + task.r_task
            nxt_feat = np.zeros_like(feat)
            traj.append((feat, o, r, 1.0, nxt_feat, True, np.zeros(n_opt, dtype=bool)))
            if collect:
                agent.replay.add(*traj[-1])
            agent.imagined_steps += 1
            return traj, False
        tau_hat = max(1.0, model.predict_duration(pair))
        disc = task.gamma ** tau_hat
        z_next = model.sample_next_z(s.z, o, rng)
        s_next = AbstractTupleState(z_prev=s.z, o_prev=o, z=z_next)
        mask_next = model.initiation_probs(z_next)[0] >= thr
        step = (feat, o, r_base, disc, tuple_features(s_next, n_opt), False, mask_next)
        traj.append(step)
        if collect:
            agent.replay.add(*step)
        agent.imagined_steps += 1
        s = s_next
        mask = mask_next
    return traj, False


def evaluate_success(env, agent: DDQNAgent, model: AbstractModel, goal: GoalSpec,
                     n_episodes: int, rng: np.random.Generator,
                     episode_cap: int = 50):
    """Greedy rollouts in the real environment; success = ground position
    enters the goal region within the episode cap. Never touches the learned
    transition head."""
    if n_episodes <= 0:
        raise ValueError("n_episodes must be positive")
    eps = agent.config.eval_epsilon
    thr = agent.config.init_threshold
    successes = 0
    returns = []
    for _ in range(n_episodes):
        state = env.reset(rng)
        z = model.encode(env.observe(state))
        s = initial_tuple(z, env.n_options)
        ep_return = 0.0
        if goal.contains(env.ground_position(state)):
            successes += 1
            returns.append(0.0)
            continue
        for _ in range(episode_cap):
            true_avail = env.initiation_set(state)
            if not true_avail.any():
                break
            mask = true_avail & (model.initiation_probs(s.z)[0] >= thr)
            if not mask.any():
                mask = true_avail
            o = agent.act(tuple_features(s, env.n_options), mask, eps, rng)
            sample, state = env.execute_option(state, o, rng)
            ep_return += sample.r_gamma
            z_next = model.encode(sample.s_next)
            s = AbstractTupleState(z_prev=s.z, o_prev=o, z=z_next)
            if goal.contains(env.ground_position(state)):
                successes += 1
                break
        returns.append(ep_return)
    return successes / n_episodes, float(np.mean(returns))


@dataclass
class CurvePoint:
    ground_env_steps: int
    success_rate: float
    mean_return: float
    epsilon: float


def run_algorithm1(env, goal: GoalSpec, config: PlannerConfig, seed: int,
                   model: AbstractModel | None = None,
                   pretrain_dataset=None):
    """The full planning loop: pretrain the abstract model, build the task MDP,
    then alternate real rollouts (task data) with imagination training.

    Returns (curve, model, agent, task). Only the goal head retrains after
    pretraining; encoder, transition, initiation, reward, and duration stay
    fixed.
    """
    env_rng = substream(seed, "env")
    init_rng = substream(seed, "model-init")
    train_rng = substream(seed, "training")
    imag_rng = substream(seed, "imagination")
    eval_rng = substream(seed, "eval")
    goal_rng = substream(seed, "goal")

    if model is None:
        if pretrain_dataset is None:
            pretrain_dataset = collect_dataset(env, config.pretrain_samples, env_rng)
        model, _ = train_model(pretrain_dataset, config.model, train_rng)

    goal_obs = sample_goal_observations(env, goal, config.goal_samples, goal_rng)
    task = make_task_mdp(model, goal_obs, config.r_task, env.gamma)

    feat_dim = 2 * model.config.d_z + env.n_options + 1
    agent = DDQNAgent(feat_dim, env.n_options, config.ddqn, init_rng)

    start_buffer = []
    if pretrain_dataset is not None and len(pretrain_dataset) > 0:
        s_arr, _, _, _, _, _, newep = pretrain_dataset.arrays()
        starts = s_arr[newep][:256]
        for row in model.encode(starts):
            start_buffer.append(row)

    labeled_z = []
    labeled_y = []
    total_imagination = max(
        1, config.imagination_steps * (config.real_steps // max(1, config.refresh_every)))

    curve = []
    real_steps = 0
    next_refresh = config.refresh_every

    def evaluate(step_count):
        sr, mr = evaluate_success(env, agent, model, goal, config.n_eval_episodes,
                                  eval_rng, episode_cap=config.eval_episode_cap)
        curve.append(CurvePoint(step_count, sr, mr,
                                agent.epsilon(total_imagination)))

    evaluate(0)
    thr = config.ddqn.init_threshold

    def reached_target():
        return (config.stop_at_success is not None
                and curve[-1].success_rate >= config.stop_at_success)

    while real_steps < config.real_steps and not reached_target():
        # line 5: roll out one real episode with the current policy
        state = env.reset(env_rng)
        z = model.encode(env.observe(state))
        start_buffer.append(z)
        s = initial_tuple(z, env.n_options)
        labeled_z.append(z)
        labeled_y.append(goal.contains(env.ground_position(state)))
        for _ in range(getattr(env.config, "episode_option_cap", 50)):
            true_avail = env.initiation_set(state)
            if not true_avail.any():
                break
            mask = true_avail & (model.initiation_probs(s.z)[0] >= thr)
            if not mask.any():
                mask = true_avail
            eps = agent.epsilon(total_imagination)
            o = agent.act(tuple_features(s, env.n_options), mask, eps, env_rng)
            sample, state = env.execute_option(state, o, env_rng)
            real_steps += sample.tau
            z_next = model.encode(sample.s_next)
            s = AbstractTupleState(z_prev=s.z, o_prev=o, z=z_next)
            labeled_z.append(z_next)
            labeled_y.append(goal.contains(env.ground_position(state)))
            if labeled_y[-1]:
                break
            if real_steps >= config.real_steps:
                break

        if real_steps >= next_refresh or real_steps >= config.real_steps:
            # line 7: refresh the task head from new data
            zs = np.array(labeled_z)
            ys = np.array(labeled_y)
            task.fit_classifier(zs, ys, config.goal_classifier_steps,
                                substream(seed, "goal-classifier", len(curve)))
            # line 8: train the agent in imagination
            steps_done = 0
            while steps_done < config.imagination_steps:
                z0 = start_buffer[int(imag_rng.integers(len(start_buffer)))]
                before = agent.imagined_steps
                imagine_rollout(task, agent, initial_tuple(z0, env.n_options),
                                config.ddqn.rollout_len, imag_rng,
                                agent.epsilon(total_imagination))
                steps_done += agent.imagined_steps - before
                while (agent.replay.size >= config.ddqn.replay_start
                       and agent.updates < agent.imagined_steps // config.ddqn.update_interval):
                    ddqn_update(agent, agent.replay.sample(config.ddqn.batch_size, imag_rng))
            next_refresh += config.refresh_every
            evaluate(real_steps)

    return curve, model, agent, task


def random_policy_success(env, goal: GoalSpec, n_episodes: int,
                          rng: np.random.Generator, episode_cap: int = 50) -> float:
    """Success rate of uniform-random option selection; the untrained baseline."""
    if n_episodes <= 0:
        raise ValueError("n_episodes must be positive")
    successes = 0
    for _ in range(n_episodes):
        state = env.reset(rng)
        if goal.contains(env.ground_position(state)):
            successes += 1
            continue
        for _ in range(episode_cap):
            avail = env.initiation_set(state)
            if not avail.any():
                break
            o = int(rng.choice(np.flatnonzero(avail)))
            _, state = env.execute_option(state, o, rng)
            if goal.contains(env.ground_position(state)):
                successes += 1
                break
    return successes / n_episodes


def sample_goal_observations(env, goal: GoalSpec, n: int, rng: np.random.Generator):
    """Observations of valid ground states inside the goal region."""
    out = []
    attempts = 0
    while len(out) < n and attempts < 100000:
        attempts += 1
        state = env.sample_state_near(goal.center, goal.radius, rng)
        if state is not None and goal.contains(env.ground_position(state)):
            out.append(env.observe(state))
    if not out:
        raise ValueError("could not sample any ground state inside the goal region")
    return np.array(out)


def write_curve_csv(path, curve):
    """Deterministic curve file: ground_env_steps, success_rate, mean_return, epsilon."""
    with open(path, "w", newline="") as f:
        f.write("ground_env_steps,success_rate,mean_return,epsilon\n")
        for p in curve:
            f.write(f"{p.ground_env_steps},{repr(p.success_rate)},"
                    f"{repr(p.mean_return)},{repr(p.epsilon)}\n")
