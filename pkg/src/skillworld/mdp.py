"""Finite ground MDPs at option granularity.

States are integers, options are integers. Each available (s, o) pair carries
a next-state distribution, an accumulated discounted option reward, and an
expected execution time tau >= 1; discounting enters values as gamma**tau.
"""

import json
from dataclasses import dataclass, field

import numpy as np

ROW_TOL = 1e-12
PRUNE_EPS = 1e-15


class UnavailableOptionError(ValueError):
    """Raised when a policy or caller selects an option outside its initiation set."""


@dataclass(frozen=True)
class FiniteGroundMDP:
    """Tabular MDP over options under the expected-length model.

    Arrays:
        transition: (S, O, S) rows over next states; rows of unavailable
            pairs are unused.
        reward:     (S, O) accumulated discounted option reward.
        duration:   (S, O) expected execution time, >= 1 where available.
        initiation: (S, O) bool availability.
        p0:         (S,) initial distribution.
    """

    transition: np.ndarray
    reward: np.ndarray
    duration: np.ndarray
    initiation: np.ndarray
    p0: np.ndarray
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "transition", np.asarray(self.transition, dtype=np.float64))
        object.__setattr__(self, "reward", np.asarray(self.reward, dtype=np.float64))
        object.__setattr__(self, "duration", np.asarray(self.duration, dtype=np.float64))
        object.__setattr__(self, "initiation", np.asarray(self.initiation, dtype=bool))
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=np.float64))
        self.validate()

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_options(self) -> int:
        return self.transition.shape[1]

    def validate(self):
        S, O = self.reward.shape
        if self.transition.shape != (S, O, S):
            raise ValueError(f"transition shape {self.transition.shape} != {(S, O, S)}")
        if self.duration.shape != (S, O) or self.initiation.shape != (S, O):
            raise ValueError("reward/duration/initiation shapes disagree")
        if self.p0.shape != (S,):
            raise ValueError(f"p0 shape {self.p0.shape} != ({S},)")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError(f"gamma {self.gamma} outside [0, 1)")
        if abs(self.p0.sum() - 1.0) > ROW_TOL or (self.p0 < 0).any():
            raise ValueError("p0 is not a probability vector")
        avail = self.initiation
        if avail.any():
            sums = self.transition[avail].sum(axis=1)
            if np.abs(sums - 1.0).max() > ROW_TOL:
                raise ValueError("an available transition row does not sum to 1")
            if (self.transition[avail] < 0).any():
                raise ValueError("negative transition probability")
            if (self.duration[avail] < 1.0).any():
                raise ValueError("duration < 1 on an available pair")

    # -- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_options": self.n_options,
            "gamma": self.gamma,
            "p0": self.p0.tolist(),
            "transition": self.transition.tolist(),
            "reward": self.reward.tolist(),
            "duration": self.duration.tolist(),
            "initiation": self.initiation.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FiniteGroundMDP":
        return cls(
            transition=np.array(d["transition"], dtype=np.float64),
            reward=np.array(d["reward"], dtype=np.float64),
            duration=np.array(d["duration"], dtype=np.float64),
            initiation=np.array(d["initiation"], dtype=bool),
            p0=np.array(d["p0"], dtype=np.float64),
            gamma=float(d["gamma"]),
        )

    def save_json(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f)

    @classmethod
    def load_json(cls, path) -> "FiniteGroundMDP":
        with open(path) as f:
            return cls.from_json_dict(json.load(f))


@dataclass(frozen=True)
class TabularPolicy:
    """Deterministic option choice per state (ground or abstract index)."""

    choice: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "choice", np.asarray(self.choice, dtype=np.int64))

    def validate_against(self, initiation: np.ndarray):
        """Check choice(s) is available at every state of the given table."""
        n = initiation.shape[0]
        if self.choice.shape != (n,):
            raise ValueError(f"policy covers {self.choice.shape[0]} states, table has {n}")
        ok = initiation[np.arange(n), self.choice]
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise UnavailableOptionError(
                f"policy selects unavailable option {int(self.choice[bad])} at state {bad}"
            )


@dataclass
class DistributionRollout:
    """Exact joint over state sequences (s_0..s_t) for a fixed option sequence."""

    horizon: int
    option_sequence: tuple
    joint: dict = field(default_factory=dict)

    def total_mass(self) -> float:
        return float(sum(self.joint.values()))

    def marginal(self, t: int, n_states: int) -> np.ndarray:
        """Marginal distribution of s_t over retained sequences."""
        m = np.zeros(n_states)
        for seq, p in self.joint.items():
            m[seq[t]] += p
        return m


def evaluate_policy(mdp: FiniteGroundMDP, policy: TabularPolicy, tol: float = 1e-10,
                    max_sweeps: int = 10**6) -> np.ndarray:
    """Iterative policy evaluation under the expected-length model.

    v(s) = R(s, pi(s)) + gamma**tau(s, pi(s)) * sum_s' T(s'|s, pi(s)) v(s').
    Returns v with sup-norm Bellman residual <= tol.
    """
    policy.validate_against(mdp.initiation)
    idx = np.arange(mdp.n_states)
    T_pi = mdp.transition[idx, policy.choice]          # (S, S)
    R_pi = mdp.reward[idx, policy.choice]              # (S,)
    G_pi = mdp.gamma ** mdp.duration[idx, policy.choice]

    v = np.zeros(mdp.n_states)
    for _ in range(max_sweeps):
        v_new = R_pi + G_pi * (T_pi @ v)
        if np.max(np.abs(v_new - v)) <= tol:
            return v_new
        v = v_new
    residual = float(np.max(np.abs(R_pi + G_pi * (T_pi @ v) - v)))
    raise RuntimeError(f"policy evaluation did not converge; residual {residual:.3e}")


def solve_policy_values(mdp: FiniteGroundMDP, policy: TabularPolicy) -> np.ndarray:
    """Exact policy values via the dense linear system (I - Gamma T_pi) v = R_pi."""
    policy.validate_against(mdp.initiation)
    idx = np.arange(mdp.n_states)
    T_pi = mdp.transition[idx, policy.choice]
    R_pi = mdp.reward[idx, policy.choice]
    G_pi = mdp.gamma ** mdp.duration[idx, policy.choice]
    A = np.eye(mdp.n_states) - G_pi[:, None] * T_pi
    return np.linalg.solve(A, R_pi)


def rollout_distribution(mdp: FiniteGroundMDP, option_sequence) -> DistributionRollout:
    """Exact joint over ground state sequences induced by an option sequence.

    joint(s_0..s_t) = p0(s_0) * prod_i T(s_i | s_{i-1}, o_{i-1}); mass through
    states where the executed option is unavailable is dropped. Sequence
    probabilities below 1e-15 are pruned.
    """
    option_sequence = tuple(int(o) for o in option_sequence)
    for o in option_sequence:
        if not (0 <= o < mdp.n_options):
            raise ValueError(f"option index {o} out of range")
        if not mdp.initiation[:, o].any():
            raise ValueError(f"option {o} has an empty initiation set")

    joint = {(s,): float(mdp.p0[s]) for s in range(mdp.n_states) if mdp.p0[s] > PRUNE_EPS}
    for o in option_sequence:
        nxt = {}
        for seq, p in joint.items():
            s = seq[-1]
            if not mdp.initiation[s, o]:
                continue
            row = mdp.transition[s, o]
            for s2 in np.flatnonzero(row):
                p2 = p * row[s2]
                if p2 > PRUNE_EPS:
                    nxt[seq + (int(s2),)] = p2
        joint = nxt
    return DistributionRollout(horizon=len(option_sequence),
                               option_sequence=option_sequence, joint=joint)


def sample_transition(mdp: FiniteGroundMDP, s: int, o: int, rng: np.random.Generator):
    """Draw (s', r, tau) for executing option o at state s."""
    if not mdp.initiation[s, o]:
        raise UnavailableOptionError(f"option {o} unavailable at state {s}")
    s2 = int(rng.choice(mdp.n_states, p=mdp.transition[s, o]))
    return s2, float(mdp.reward[s, o]), float(mdp.duration[s, o])


def reachable_states(mdp: FiniteGroundMDP) -> np.ndarray:
    """States reachable with positive probability from supp(p0) under available options."""
    seen = np.zeros(mdp.n_states, dtype=bool)
    frontier = list(np.flatnonzero(mdp.p0 > 0))
    for s in frontier:
        seen[s] = True
    while frontier:
        s = frontier.pop()
        for o in np.flatnonzero(mdp.initiation[s]):
            for s2 in np.flatnonzero(mdp.transition[s, o] > 0):
                if not seen[s2]:
                    seen[s2] = True
                    frontier.append(int(s2))
    return seen
