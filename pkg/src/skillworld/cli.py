"""Single entry point: seeded runs, TOML config, manifest-first artifact output.

Subcommands: verify (tabular certificates), collect (datasets), train-model,
plan (the full planning loop), eval-mi (MI matrix), mds (embedding export).
Exit codes: 0 success, 1 validation failure, 2 runtime fault. A manifest is
written before any computation starts.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__
from .rng import substream


class ConfigError(ValueError):
    pass


# allowed keys and defaults per section; None marks "required or optional-path"
GLOBAL_SCHEMA = {"seed": 0, "out": None, "obs_mode": "state"}
COMMAND_SCHEMAS = {
    "verify": {"instances": 50, "horizon": 4, "value_loss_scale": 0.05,
               "n_policies": 5},
    "collect": {"n": 10000, "layout": None, "csv": False, "episode_cap": 50},
    "train-model": {"dataset": None, "steps": 20000, "d_z": 4, "sigma_enc": 0.1,
                    "batch_size": 16, "learning_rate": 1e-4},
    "plan": {"goal": None, "goal_radius": 0.06, "pretrain_samples": 50000,
             "real_steps": 100000, "imagination_steps": 5000,
             "refresh_every": 1000, "r_task": 100.0, "model": None,
             "dataset": None, "n_eval_episodes": 20, "eval_episode_cap": 50,
             "model_steps": 20000, "env": "pinball"},
    "eval-mi": {"model": None, "dataset": None, "k": 3, "max_samples": 5000},
    "mds": {"model": None, "dataset": None, "n": 500},
}


def load_config_file(path) -> dict:
    with open(path, "rb") as f:
        return tomllib.load(f)


def merge_config(command: str, file_cfg: dict, flag_values: dict) -> dict:
    """defaults < TOML < CLI flags; unknown keys in any layer are errors."""
    schema = dict(GLOBAL_SCHEMA)
    schema.update(COMMAND_SCHEMAS[command])
    merged = dict(schema)

    for section, content in file_cfg.items():
        if section == "global":
            allowed = GLOBAL_SCHEMA
        elif section in COMMAND_SCHEMAS:
            if section != command:
                continue
            allowed = COMMAND_SCHEMAS[section]
        else:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in content.items():
            if key not in allowed:
                raise ConfigError(f"unknown config key {key!r} in section [{section}]")
            merged[key] = value

    for key, value in flag_values.items():
        if value is None:
            continue
        if key not in merged:
            raise ConfigError(f"unknown option {key!r} for command {command}")
        merged[key] = value
    return merged


def resolve_out(command: str, cfg: dict) -> str:
    out = cfg.get("out") or f"runs/{command}"
    root = os.environ.get("SKILLWORLD_OUT")
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    return out


def write_manifest(outdir: str, payload: dict):
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "manifest.json"), "w") as f:
        json.dump(payload, f, indent=2, default=str)


# -- subcommands --------------------------------------------------------------


def cmd_verify(cfg: dict, outdir: str) -> int:
    from .abstraction import (build_abstract_model, check_dynamics_preserving,
                              check_value_preservation, max_rollout_gap,
                              random_abstract_policy, value_loss_experiment)
    from .instances import random_preserving_instance, random_nonpreserving_instance

    cert_dir = os.path.join(outdir, "certificates")
    os.makedirs(cert_dir, exist_ok=True)
    seed = int(cfg["seed"])
    summary = {"n": 0, "preserving_correct": 0}
    for i in range(int(cfg["instances"])):
        instance_seed = seed + i
        expect_preserving = i % 2 == 0
        if expect_preserving:
            mdp, amap = random_preserving_instance(instance_seed)
        else:
            mdp, amap, _ = random_nonpreserving_instance(instance_seed)
        report = check_dynamics_preserving(mdp, amap)
        model = build_abstract_model(mdp, amap, force=True)
        gap, _, _ = max_rollout_gap(model, horizon=int(cfg["horizon"]),
                                    stop_above=np.inf if report.preserving else 1e-6)
        cert = {
            "instance_seed": instance_seed,
            "preserving": bool(report.preserving),
            "max_Bt_gap": float(gap),
            "value_residual": None,
            "value_loss": None,
        }
        if report.preserving:
            rng = substream(instance_seed, "verify-policy")
            vrep = check_value_preservation(model, random_abstract_policy(model, rng))
            vloss = value_loss_experiment(model, float(cfg["value_loss_scale"]),
                                          n_policies=int(cfg["n_policies"]),
                                          rng=substream(instance_seed, "verify-perturb"))
            cert["value_residual"] = float(vrep.max_residual)
            cert["value_loss"] = {"eps_T": vloss.eps_T, "eps_R": vloss.eps_R,
                                  "gap": vloss.measured_gap, "bound": vloss.bound}
        with open(os.path.join(cert_dir, f"instance_{instance_seed}.json"), "w") as f:
            json.dump(cert, f, indent=2)
        summary["n"] += 1
        summary["preserving_correct"] += int(report.preserving == expect_preserving)
    with open(os.path.join(outdir, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2)
    print(f"wrote {summary['n']} certificates to {cert_dir} "
          f"({summary['preserving_correct']} labels correct)")
    return 0


def _build_env(cfg: dict):
    from .pinball import PinballEnv, PinballConfig, load_obstacles
    obstacles = load_obstacles(cfg.get("layout"))
    return PinballEnv(PinballConfig(obstacles=obstacles, obs_mode=cfg["obs_mode"]))


def cmd_collect(cfg: dict, outdir: str) -> int:
    from .pinball import collect_dataset

    env = _build_env(cfg)
    rng = substream(int(cfg["seed"]), "env")
    ds = collect_dataset(env, int(cfg["n"]), rng, episode_cap=int(cfg["episode_cap"]))
    path = os.path.join(outdir, "dataset.bin")
    ds.save(path)
    print(f"wrote {len(ds)} samples to {path}")
    if cfg["csv"]:
        ds.to_csv(os.path.join(outdir, "dataset.csv"))
    return 0


def cmd_train_model(cfg: dict, outdir: str) -> int:
    from .datasets import TransitionDataset
    from .learning import TrainConfig, train_model, write_training_log

    if not cfg["dataset"]:
        raise ConfigError("train-model needs dataset=<path>")
    ds = TransitionDataset.load(cfg["dataset"])
    tc = TrainConfig(d_z=int(cfg["d_z"]), sigma_enc=float(cfg["sigma_enc"]),
                     batch_size=int(cfg["batch_size"]),
                     learning_rate=float(cfg["learning_rate"]),
                     n_steps=int(cfg["steps"]),
                     encoder_activation="silu" if ds.obs_mode == "pixel" else "relu")
    rng = substream(int(cfg["seed"]), "training")
    model, log = train_model(ds, tc, rng,
                             diverged_path=os.path.join(outdir, "diverged.ckpt"))
    model.save(os.path.join(outdir, "model.ckpt"))
    write_training_log(os.path.join(outdir, "training_log.csv"), log)
    print(f"trained {tc.n_steps} steps; checkpoint {model.checksum()[:12]} "
          f"written to {outdir}/model.ckpt")
    return 0


def cmd_plan(cfg: dict, outdir: str) -> int:
    from .datasets import TransitionDataset
    from .learning import AbstractModel, TrainConfig
    from .planner import GoalSpec, PlannerConfig, run_algorithm1, write_curve_csv

    if cfg["goal"] is None:
        raise ConfigError("plan needs goal=x,y")
    goal_vals = [float(v) for v in str(cfg["goal"]).split(",")]
    if cfg["env"] == "pinball":
        env = _build_env(cfg)
        if len(goal_vals) != 2:
            raise ConfigError("pinball goals are x,y pairs")
    elif cfg["env"] == "lineworld":
        from .lineworld import LineWorldEnv
        env = LineWorldEnv()
        if len(goal_vals) != 1:
            raise ConfigError("lineworld goals are a single x")
    else:
        raise ConfigError(f"unknown env {cfg['env']!r}")
    goal = GoalSpec(center=np.array(goal_vals), radius=float(cfg["goal_radius"]))

    model = None
    if cfg["model"]:
        model = AbstractModel.load(cfg["model"])
    dataset = None
    if cfg["dataset"]:
        dataset = TransitionDataset.load(cfg["dataset"])

    pc = PlannerConfig(
        pretrain_samples=int(cfg["pretrain_samples"]),
        real_steps=int(cfg["real_steps"]),
        refresh_every=int(cfg["refresh_every"]),
        imagination_steps=int(cfg["imagination_steps"]),
        n_eval_episodes=int(cfg["n_eval_episodes"]),
        eval_episode_cap=int(cfg["eval_episode_cap"]),
        r_task=float(cfg["r_task"]),
        model=TrainConfig(n_steps=int(cfg["model_steps"]),
                          encoder_activation="silu" if cfg["obs_mode"] == "pixel" else "relu"),
    )
    curve, model, agent, task = run_algorithm1(env, goal, pc, int(cfg["seed"]),
                                               model=model, pretrain_dataset=dataset)
    write_curve_csv(os.path.join(outdir, "curves.csv"), curve)
    model.save(os.path.join(outdir, "model.ckpt"))
    final = curve[-1]
    print(f"final success rate {final.success_rate:.3f} at "
          f"{final.ground_env_steps} real steps; curves.csv written")
    return 0


def _load_state_dataset(cfg):
    from .datasets import TransitionDataset
    if not cfg["dataset"]:
        raise ConfigError("this command needs dataset=<path>")
    ds = TransitionDataset.load(cfg["dataset"])
    if ds.obs_mode != "state":
        raise ConfigError("ground features require a state-mode dataset")
    return ds


def cmd_eval_mi(cfg: dict, outdir: str) -> int:
    from .analysis import mi_matrix, write_mi_matrix_csv
    from .learning import AbstractModel

    if not cfg["model"]:
        raise ConfigError("eval-mi needs model=<path>")
    model = AbstractModel.load(cfg["model"])
    ds = _load_state_dataset(cfg)
    s = ds.arrays()[0][: int(cfg["max_samples"])]
    z = model.encode(s)
    labels = ["x", "y", "vx", "vy"][: s.shape[1]]
    mi = mi_matrix(s, z, k=int(cfg["k"]), row_labels=labels,
                   col_labels=[f"z{i}" for i in range(z.shape[1])])
    write_mi_matrix_csv(os.path.join(outdir, "mi_matrix.csv"), mi)
    print(f"MI matrix written; row maxima: "
          f"{dict(zip(mi.rows, np.round(mi.row_max(), 3)))}")
    return 0


def cmd_mds(cfg: dict, outdir: str) -> int:
    from .analysis import classical_mds, write_mds_csv
    from .learning import AbstractModel

    if not cfg["model"]:
        raise ConfigError("mds needs model=<path>")
    model = AbstractModel.load(cfg["model"])
    ds = _load_state_dataset(cfg)
    s = ds.arrays()[0][: int(cfg["n"])]
    z = model.encode(s)
    emb, deficient = classical_mds(z, 2)
    write_mds_csv(os.path.join(outdir, "mds.csv"), emb, s[:, :2])
    if deficient:
        print("warning: embedding is rank-deficient; second axis zero-padded")
    print(f"mds.csv written ({emb.shape[0]} points)")
    return 0


COMMANDS = {
    "verify": cmd_verify,
    "collect": cmd_collect,
    "train-model": cmd_train_model,
    "plan": cmd_plan,
    "eval-mi": cmd_eval_mi,
    "mds": cmd_mds,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skillworld",
                                     description="Skill-driven abstract world models")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in COMMAND_SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="TOML config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--obs-mode", dest="obs_mode", choices=["state", "pixel"],
                       default=None)
        for key, default in schema.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(default, bool):
                p.add_argument(flag, dest=key, action="store_true", default=None)
            elif isinstance(default, int):
                p.add_argument(flag, dest=key, type=int, default=None)
            elif isinstance(default, float):
                p.add_argument(flag, dest=key, type=float, default=None)
            else:
                p.add_argument(flag, dest=key, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1

    command = args.command
    flag_values = {k: v for k, v in vars(args).items()
                   if k not in ("command", "config")}
    try:
        file_cfg = load_config_file(args.config) if args.config else {}
        cfg = merge_config(command, file_cfg, flag_values)
        outdir = resolve_out(command, cfg)
    except (ConfigError, OSError, tomllib.TOMLDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    manifest = {
        "command": command,
        "config": {k: v for k, v in cfg.items()},
        "skillworld_version": __version__,
        "status": "running",
    }
    write_manifest(outdir, manifest)
    t0 = time.monotonic()
    try:
        code = COMMANDS[command](cfg, outdir)
    except (ConfigError, FileNotFoundError) as e:
        manifest["status"] = "failed"
        manifest["error"] = str(e)
        write_manifest(outdir, manifest)
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # runtime fault
        manifest["status"] = "failed"
        manifest["error"] = f"{type(e).__name__}: {e}"
        write_manifest(outdir, manifest)
        print(f"runtime fault: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    manifest["status"] = "completed"
    manifest["elapsed_s"] = round(time.monotonic() - t0, 3)
    write_manifest(outdir, manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
