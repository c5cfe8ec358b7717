"""Contrastive learning of the abstract model from option-transition data.

The encoder is trained with two InfoNCE bounds (next abstract state from
(z, o); abstract state from the raw next observation) plus the initiation
cross-entropy and the transition density loss. Reward and duration heads
regress in symlog / log space on consecutive-pair contexts with the encoder
frozen.
"""

import csv
from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, AdamState, symlog, symexp
from .datasets import TransitionDataset, slice_pairs
from .nets import MLP, MoGHead, save_checkpoint, load_checkpoint, checkpoint_checksum


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    d_z: int = 4
    sigma_enc: float = 0.1
    hidden: tuple = (128, 128)
    encoder_activation: str = "relu"    # silu for the pixel-mode encoder
    critic_hidden: tuple = (64,)
    critic_emb: int = 32
    n_components: int = 4
    beta_info: float = 1.0
    beta_I: float = 1.0
    beta_T: float = 1.0
    beta_R: float = 1.0
    beta_tau: float = 1.0
    batch_size: int = 16
    learning_rate: float = 1e-4
    buffer_size: int = 100000
    train_every: int = 8
    max_rollout_length: int = 64
    n_steps: int = 20000
    class_weight_cap: float = 100.0
    log_every: int = 100

    def __post_init__(self):
        if self.batch_size < 2 or self.learning_rate <= 0:
            raise ValueError("need batch_size >= 2 and positive learning rate")
        for name in ("beta_info", "beta_I", "beta_T", "beta_R", "beta_tau"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


class BilinearCritic:
    """Separable score u(ctx)^T W v(tgt) with small MLP embedders.

    W starts small so initial scores sit near zero: a fresh critic then rates
    independent pairs at a bound near 0 instead of a large negative value,
    and early InfoNCE gradients stay well-scaled.
    """

    def __init__(self, ctx_dim, tgt_dim, rng, hidden=(64,), emb=32, name="critic"):
        self.ctx_mlp = MLP(ctx_dim, hidden, emb, rng, name=f"{name}.ctx")
        self.tgt_mlp = MLP(tgt_dim, hidden, emb, rng, name=f"{name}.tgt")
        self.W = Tensor(rng.standard_normal((emb, emb)) * (0.1 / emb))
        self.name = name

    def scores(self, ctx: Tensor, tgt: Tensor) -> Tensor:
        u = self.ctx_mlp.forward(ctx)
        v = self.tgt_mlp.forward(tgt)
        return ad.matmul(ad.matmul(u, self.W), ad.transpose(v))

    def params(self):
        return self.ctx_mlp.params() + self.tgt_mlp.params() + [self.W]

    def named_params(self):
        out = self.ctx_mlp.named_params()
        out.update(self.tgt_mlp.named_params())
        out[f"{self.name}.W"] = self.W
        return out


def infonce_bound(critic: BilinearCritic, ctx: Tensor, tgt: Tensor) -> Tensor:
    """In-batch InfoNCE lower bound (nats): mean_i [s_ii - logsumexp_j s_ij] + log B.

    Never exceeds log B. Requires B >= 2 so each positive has negatives.
    """
    B = ctx.shape[0]
    if B < 2:
        raise ValueError(f"InfoNCE needs a batch of >= 2, got {B}")
    S = critic.scores(ctx, tgt)
    return ad.add_scalar(ad.mean_all(ad.sub(ad.diag_part(S), ad.logsumexp_last(S))),
                         float(np.log(B)))


class AbstractModel:
    """Learned bundle: encoder, transition MoG, initiation, reward, duration, critics."""

    def __init__(self, obs_dim: int, n_options: int, config: TrainConfig,
                 rng: np.random.Generator):
        self.obs_dim = obs_dim
        self.n_options = n_options
        self.config = config
        # decode guards, set from the training data; symexp extrapolates violently
        self.reward_range = (-np.inf, np.inf)
        self.duration_range = (1.0, np.inf)
        d_z = config.d_z
        h = tuple(config.hidden)
        self.encoder = MLP(obs_dim, h, d_z, rng,
                           activation=config.encoder_activation, name="enc")
        self.transition = MoGHead(d_z + n_options, d_z, rng,
                                  n_components=config.n_components, hidden=h,
                                  name="trans")
        self.initiation = MLP(d_z, h, n_options, rng, name="init")
        pair_dim = d_z + (n_options + 1) + d_z + n_options
        self.reward = MLP(pair_dim, h, 1, rng, name="reward")
        self.duration = MLP(pair_dim, h, 1, rng, name="duration")
        self.critic_zz = BilinearCritic(d_z + n_options, d_z, rng,
                                        hidden=tuple(config.critic_hidden),
                                        emb=config.critic_emb, name="critic_zz")
        self.critic_sz = BilinearCritic(obs_dim, d_z, rng,
                                        hidden=tuple(config.critic_hidden),
                                        emb=config.critic_emb, name="critic_sz")

    # -- parameters ---------------------------------------------------------

    def modules(self):
        return [self.encoder, self.transition, self.initiation, self.reward,
                self.duration, self.critic_zz, self.critic_sz]

    def params(self):
        out = []
        for m in self.modules():
            out.extend(m.params())
        return out

    def named_params(self):
        out = {}
        for m in self.modules():
            out.update(m.named_params())
        return out

    def checksum(self) -> str:
        return checkpoint_checksum({k: v.values for k, v in self.named_params().items()})

    def save(self, path):
        meta = {
            "obs_dim": self.obs_dim,
            "n_options": self.n_options,
            "reward_range": [float(x) for x in self.reward_range],
            "duration_range": [float(x) for x in self.duration_range],
            "config": {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in asdict(self.config).items()},
        }
        save_checkpoint(path, {k: v.values for k, v in self.named_params().items()},
                        meta=meta)

    @classmethod
    def load(cls, path) -> "AbstractModel":
        arrays, meta = load_checkpoint(path, with_meta=True)
        if meta is None:
            raise ValueError("checkpoint has no model meta block")
        cfg_kwargs = dict(meta["config"])
        for key in ("hidden", "critic_hidden"):
            cfg_kwargs[key] = tuple(cfg_kwargs[key])
        config = TrainConfig(**cfg_kwargs)
        model = cls(meta["obs_dim"], meta["n_options"], config,
                    np.random.default_rng(0))
        if "reward_range" in meta:
            model.reward_range = tuple(meta["reward_range"])
        if "duration_range" in meta:
            model.duration_range = tuple(meta["duration_range"])
        named = model.named_params()
        if set(named) != set(arrays):
            raise ValueError("checkpoint layers do not match the model architecture")
        for k, t in named.items():
            t.values[...] = arrays[k]
        return model

    # -- encoding -----------------------------------------------------------

    def encode_graph(self, obs: Tensor, noise: np.ndarray | None = None) -> Tensor:
        z = self.encoder.forward(obs)
        if noise is not None:
            z = ad.add(z, Tensor(noise))
        return z

    def encode(self, obs: np.ndarray, mode: str = "eval",
               rng: np.random.Generator | None = None) -> np.ndarray:
        """Deterministic in eval mode; train mode adds N(0, sigma_enc^2) noise."""
        obs = np.asarray(obs, dtype=np.float64)
        squeeze = obs.ndim == 1
        if squeeze:
            obs = obs[None, :]
        if obs.shape[1] != self.obs_dim:
            raise ValueError(f"observation dim {obs.shape[1]} != {self.obs_dim}")
        z = self.encoder.forward_np(obs)
        if mode == "train":
            if rng is None:
                raise ValueError("train-mode encoding needs an rng")
            z = z + self.config.sigma_enc * rng.standard_normal(z.shape)
        elif mode != "eval":
            raise ValueError(f"unknown encode mode {mode!r}")
        return z[0] if squeeze else z

    # -- numpy inference for planning ----------------------------------------

    def initiation_probs(self, z: np.ndarray) -> np.ndarray:
        logits = self.initiation.forward_np(np.atleast_2d(z))
        return 1.0 / (1.0 + np.exp(-logits))

    def sample_next_z(self, z: np.ndarray, option: int,
                      rng: np.random.Generator) -> np.ndarray:
        ctx = np.concatenate([np.atleast_2d(z), _onehot([option], self.n_options)], axis=1)
        return self.transition.sample_np(ctx, rng)[0]

    def pair_context(self, z_prev, o_prev, z, option) -> np.ndarray:
        """(z_prev, o_prev, z, o) features; o_prev = n_options is the sentinel."""
        zp = np.atleast_2d(z_prev)
        zc = np.atleast_2d(z)
        return np.concatenate([
            zp, _onehot([o_prev], self.n_options + 1),
            zc, _onehot([option], self.n_options)], axis=1)

    def predict_reward(self, pair_ctx: np.ndarray) -> float:
        raw = float(symexp(self.reward.forward_np(pair_ctx))[0, 0])
        return float(np.clip(raw, *self.reward_range))

    def predict_duration(self, pair_ctx: np.ndarray) -> float:
        raw = float(np.exp(np.clip(self.duration.forward_np(pair_ctx)[0, 0], -20, 20)))
        return float(np.clip(raw, *self.duration_range))


def _onehot(idx, n) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    out = np.zeros((idx.shape[0], n))
    out[np.arange(idx.shape[0]), idx] = 1.0
    return out


def initiation_class_weights(initiation: np.ndarray, cap: float = 100.0) -> np.ndarray:
    """Inverse-class-frequency weights per (option, class), capped.

    weights[o, c] = 1 / (2 * freq_c); balanced labels give weight 1 for both
    classes. Single-class options get the cap on the absent class.
    """
    n_options = initiation.shape[1]
    w = np.ones((n_options, 2))
    for o in range(n_options):
        p = float(initiation[:, o].mean())
        w[o, 1] = min(cap, 1.0 / (2.0 * p)) if p > 0 else cap
        w[o, 0] = min(cap, 1.0 / (2.0 * (1.0 - p))) if p < 1 else cap
    return w


# -- loss graphs (pure given pre-drawn noise) -------------------------------------


def loss_phi(model: AbstractModel, s, o, s_next, noise_z, noise_znext):
    """-InfoNCE(z' ; z, o) - InfoNCE(z' ; s'): both bounds share one set of
    noisy encodings; gradients reach the encoder and both critics."""
    z = model.encode_graph(Tensor(s), noise_z)
    z_next = model.encode_graph(Tensor(s_next), noise_znext)
    ctx = ad.concat_last([z, Tensor(_onehot(o, model.n_options))])
    b1 = infonce_bound(model.critic_zz, ctx, z_next)
    b2 = infonce_bound(model.critic_sz, Tensor(s_next), z_next)
    return ad.neg(ad.add(b1, b2)), b1, b2


def loss_initiation(model: AbstractModel, s, labels, weights):
    """Per-option weighted binary cross-entropy on initiation logits.

    The classifier reads the plain (unsmoothed) encoding: availability
    boundaries are sharp in the ground state, and the gradient still reaches
    the encoder. Smoothing stays on the infomax and density losses, which are
    the terms whose entropies need it."""
    z = model.encode_graph(Tensor(s))
    logits = model.initiation.forward(z)
    y = np.asarray(labels, dtype=np.float64)
    w = weights[np.arange(model.n_options)[None, :], y.astype(np.int64)]
    yt = Tensor(y)
    pos = ad.mul(yt, ad.softplus(ad.neg(logits)))
    neg = ad.mul(Tensor(1.0 - y), ad.softplus(logits))
    return ad.mean_all(ad.mul(Tensor(w), ad.add(pos, neg)))


def loss_transition(model: AbstractModel, s, o, s_next, noise_z, noise_znext):
    """Mean negative MoG log-likelihood of the smoothed z' given noisy (z, o).

    The target carries the same Gaussian smoothing as the encoder: a noiseless
    target lets the density head shrink its stds without bound once the
    encoder flattens, which is exactly the collapse the smoothing exists to
    prevent."""
    z = model.encode_graph(Tensor(s), noise_z)
    z_next = model.encode_graph(Tensor(s_next), noise_znext)
    ctx = ad.concat_last([z, Tensor(_onehot(o, model.n_options))])
    return ad.neg(ad.mean_all(model.transition.log_prob(ctx, z_next)))


def _pair_context_graph(model, prev_s, prev_o, has_prev, s, o):
    """Sentinel-aware pair features with the encoder detached."""
    z_prev = ad.stop_gradient(model.encode_graph(Tensor(prev_s)))
    z_cur = ad.stop_gradient(model.encode_graph(Tensor(s)))
    mask = np.asarray(has_prev, dtype=np.float64)[:, None]
    zp = ad.mul(z_prev, Tensor(np.broadcast_to(mask, z_prev.shape).copy()))
    o_prev = np.where(has_prev, prev_o, model.n_options)
    return ad.concat_last([
        zp, Tensor(_onehot(o_prev, model.n_options + 1)),
        z_cur, Tensor(_onehot(o, model.n_options))])


def loss_reward(model, prev_s, prev_o, has_prev, s, o, r_gamma):
    """Squared error in symlog space; no gradient into the encoder."""
    ctx = _pair_context_graph(model, prev_s, prev_o, has_prev, s, o)
    pred = model.reward.forward(ctx)
    target = Tensor(symlog(np.asarray(r_gamma))[:, None])
    return ad.mean_all(ad.square(ad.sub(pred, target)))


def loss_duration(model, prev_s, prev_o, has_prev, s, o, tau):
    """Squared error in log space; no gradient into the encoder."""
    tau = np.asarray(tau, dtype=np.float64)
    if (tau <= 0).any():
        raise ValueError("durations must be positive")
    ctx = _pair_context_graph(model, prev_s, prev_o, has_prev, s, o)
    pred = model.duration.forward(ctx)
    target = Tensor(np.log(tau)[:, None])
    return ad.mean_all(ad.square(ad.sub(pred, target)))


# -- trainer ----------------------------------------------------------------------


@dataclass
class TrainLogRow:
    step: int
    loss_total: float
    loss_phi: float
    loss_I: float
    loss_T: float
    loss_R: float
    loss_tau: float
    mi_bound_1: float
    mi_bound_2: float


TRAIN_LOG_COLUMNS = ["step", "loss_total", "loss_phi", "loss_I", "loss_T",
                     "loss_R", "loss_tau", "mi_bound_1", "mi_bound_2"]


def write_training_log(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(TRAIN_LOG_COLUMNS)
        for r in rows:
            w.writerow([r.step, repr(r.loss_total), repr(r.loss_phi), repr(r.loss_I),
                        repr(r.loss_T), repr(r.loss_R), repr(r.loss_tau),
                        repr(r.mi_bound_1), repr(r.mi_bound_2)])


def train_model(dataset: TransitionDataset, config: TrainConfig,
                rng: np.random.Generator, model: AbstractModel | None = None,
                diverged_path: str | None = None):
    """Minimize the beta-weighted sum of all five losses with Adam.

    Returns (model, log rows). A NaN loss aborts with a diagnostic checkpoint
    when diverged_path is given.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    n = min(len(dataset), config.buffer_size)
    s, o, r, s2, tau, init, _ = dataset.arrays()
    s, o, r, s2, tau, init = (a[-n:] for a in (s, o, r, s2, tau, init))
    prev_s, prev_o, ps, po, pr, ptau, has_prev = slice_pairs(dataset)
    prev_s, prev_o, ps, po, pr, ptau, has_prev = (
        a[-n:] for a in (prev_s, prev_o, ps, po, pr, ptau, has_prev))

    if model is None:
        model = AbstractModel(dataset.obs_dim, dataset.n_options, config, rng)
    model.reward_range = (float(r.min()), float(r.max()))
    model.duration_range = (max(1.0, float(tau.min())), float(tau.max()))
    weights = initiation_class_weights(init, cap=config.class_weight_cap)
    params = model.params()
    opt = AdamState(lr=config.learning_rate)
    log = []
    B = config.batch_size
    d_z = config.d_z

    for step in range(config.n_steps):
        idx = rng.integers(0, n, size=B)
        pidx = rng.integers(0, n, size=B)
        noise_z = config.sigma_enc * rng.standard_normal((B, d_z))
        noise_zn = config.sigma_enc * rng.standard_normal((B, d_z))
        noise_zt = config.sigma_enc * rng.standard_normal((B, d_z))

        l_phi, b1, b2 = loss_phi(model, s[idx], o[idx], s2[idx], noise_z, noise_zn)
        l_i = loss_initiation(model, s[idx], init[idx], weights)
        l_t = loss_transition(model, s[idx], o[idx], s2[idx], noise_z, noise_zt)
        l_r = loss_reward(model, prev_s[pidx], prev_o[pidx], has_prev[pidx],
                          ps[pidx], po[pidx], pr[pidx])
        l_tau = loss_duration(model, prev_s[pidx], prev_o[pidx], has_prev[pidx],
                              ps[pidx], po[pidx], ptau[pidx])

        total = l_phi
        if config.beta_info != 1.0:
            total = ad.mul_scalar(total, config.beta_info)
        for beta, term in ((config.beta_I, l_i), (config.beta_T, l_t),
                           (config.beta_R, l_r), (config.beta_tau, l_tau)):
            total = ad.add(total, ad.mul_scalar(term, beta) if beta != 1.0 else term)

        if not np.isfinite(total.values):
            if diverged_path:
                model.save(diverged_path)
            raise TrainingDiverged(
                f"loss became non-finite at step {step}"
                + (f"; checkpoint at {diverged_path}" if diverged_path else ""))

        ad.zero_grads(params)
        ad.backward(total)
        ad.adam_step(params, opt)

        if step % config.log_every == 0 or step == config.n_steps - 1:
            log.append(TrainLogRow(
                step=step, loss_total=float(total.values),
                loss_phi=float(l_phi.values), loss_I=float(l_i.values),
                loss_T=float(l_t.values), loss_R=float(l_r.values),
                loss_tau=float(l_tau.values), mi_bound_1=float(b1.values),
                mi_bound_2=float(b2.values)))
    return model, log
