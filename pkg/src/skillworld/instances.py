"""Seeded generators for tabular verification instances.

Preserving instances are built by construction: draw a cell-level MDP over an
abstract alphabet, then blow each cell up into ground states sharing the
cell's transition row, initiation flags, and duration (rewards vary freely
within a cell). Non-preserving and subgoal-violating variants perturb one
state's row so the defect is detectable at horizon 1.
"""

import numpy as np

from .mdp import FiniteGroundMDP
from .abstraction import AbstractionMap


def _cell_sizes(rng, K, max_ground):
    sizes = rng.integers(1, 4, size=K)
    while sizes.sum() > max_ground:
        i = int(rng.integers(K))
        if sizes[i] > 1:
            sizes[i] -= 1
    if (sizes == 1).all():
        sizes[int(rng.integers(K))] = 2
    return sizes


def _sparse_row(rng, n):
    keep = rng.random(n) < 0.6
    if not keep.any():
        keep[int(rng.integers(n))] = True
    row = np.zeros(n)
    row[keep] = rng.dirichlet(np.ones(int(keep.sum())))
    return row


def random_preserving_instance(seed: int, max_K: int = 4, max_options: int = 4,
                               max_ground: int = 12, cell_rewards: bool = False):
    """A dynamics-preserving (mdp, phi) pair, seeded and exact by construction.

    Rewards vary freely within cells by default (value preservation only needs
    the grounding-weighted mean); cell_rewards=True makes them cell-constant,
    which the zero-perturbation value-loss case requires to be exact.
    """
    rng = np.random.default_rng(seed)
    K = int(rng.integers(2, max_K + 1))
    n_options = int(rng.integers(2, max_options + 1))
    sizes = _cell_sizes(rng, K, max_ground)
    S = int(sizes.sum())
    phi = np.repeat(np.arange(K), sizes)

    z_avail = rng.random((K, n_options)) < 0.75
    for z in range(K):
        if not z_avail[z].any():
            z_avail[z, int(rng.integers(n_options))] = True
    for o in range(n_options):
        if not z_avail[:, o].any():
            z_avail[int(rng.integers(K)), o] = True

    transition = np.zeros((S, n_options, S))
    duration = np.ones((S, n_options))
    initiation = np.zeros((S, n_options), dtype=bool)
    for z in range(K):
        members = np.flatnonzero(phi == z)
        for o in range(n_options):
            if not z_avail[z, o]:
                continue
            row = _sparse_row(rng, S)
            tau = 1.0 + rng.uniform(0.0, 2.0)
            for s in members:
                transition[s, o] = row
                duration[s, o] = tau
                initiation[s, o] = True

    if cell_rewards:
        cell_r = rng.uniform(-1.0, 1.0, size=(K, n_options))
        reward = cell_r[phi]
    else:
        reward = rng.uniform(-1.0, 1.0, size=(S, n_options))
    p0 = 0.3 + rng.random(S)
    p0 /= p0.sum()
    gamma = float(rng.uniform(0.5, 0.95))

    mdp = FiniteGroundMDP(transition=transition, reward=reward, duration=duration,
                          initiation=initiation, p0=p0, gamma=gamma)
    return mdp, AbstractionMap(phi=phi, K=K)


def random_nonpreserving_instance(seed: int, **kwargs):
    """Perturb one cell-mate's row of a preserving instance; same phi.

    Returns (mdp, phi, witness) where witness = (s1, s2, o) is the planted
    violation. p0 has full support, so the rollout gap shows at horizon 1.
    """
    mdp, amap = random_preserving_instance(seed, **kwargs)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBAD]))
    candidates = []
    for z in range(amap.K):
        members = np.flatnonzero(amap.phi == z)
        if members.size >= 2:
            for o in np.flatnonzero(mdp.initiation[members[0]]):
                candidates.append((int(members[0]), int(members[1]), int(o)))
    s1, s2, o = candidates[int(rng.integers(len(candidates)))]

    transition = mdp.transition.copy()
    row = transition[s2, o]
    # shift mass toward a low-probability target; never the dominant entry,
    # so deterministic rows actually change
    j = int(np.argmin(row + 10.0 * (row >= 0.9)))
    point = np.zeros_like(row)
    point[j] = 1.0
    transition[s2, o] = 0.6 * row + 0.4 * point
    bad = FiniteGroundMDP(transition=transition, reward=mdp.reward, duration=mdp.duration,
                          initiation=mdp.initiation, p0=mdp.p0, gamma=mdp.gamma)
    return bad, amap, (s1, s2, o)


def random_strong_subgoal_instance(seed: int, max_options: int = 4,
                                   max_ground: int = 12):
    """Every option resets to an option-specific distribution from anywhere in
    its initiation set: the strong subgoal property holds by construction."""
    rng = np.random.default_rng(seed)
    S = int(rng.integers(4, max_ground + 1))
    n_options = int(rng.integers(2, max_options + 1))

    # initiation depends on the state; signatures form the expected partition
    initiation = rng.random((S, n_options)) < 0.7
    for s in range(S):
        if not initiation[s].any():
            initiation[s, int(rng.integers(n_options))] = True
    for o in range(n_options):
        if not initiation[:, o].any():
            initiation[int(rng.integers(S)), o] = True

    transition = np.zeros((S, n_options, S))
    resets = [_sparse_row(rng, S) for _ in range(n_options)]
    for o in range(n_options):
        for s in range(S):
            if initiation[s, o]:
                transition[s, o] = resets[o]

    duration = np.ones((S, n_options))
    for o in range(n_options):
        duration[:, o] = 1.0 + rng.uniform(0.0, 2.0)
    reward = rng.uniform(-1.0, 1.0, size=(S, n_options))
    p0 = 0.3 + rng.random(S)
    p0 /= p0.sum()
    gamma = float(rng.uniform(0.5, 0.95))
    mdp = FiniteGroundMDP(transition=transition, reward=reward, duration=duration,
                          initiation=initiation, p0=p0, gamma=gamma)
    return mdp


def random_subgoal_violating_instance(seed: int, **kwargs):
    """A strong-subgoal instance with one state-dependent option planted.

    Returns (mdp, option) where the named option violates Pr(s'|s,o) = Pr(s'|o).
    """
    mdp = random_strong_subgoal_instance(seed, **kwargs)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xFEED]))
    while True:
        o = int(rng.integers(mdp.n_options))
        members = np.flatnonzero(mdp.initiation[:, o])
        if members.size >= 2:
            break
    s2 = int(members[1])
    transition = mdp.transition.copy()
    row = transition[s2, o]
    j = int(np.argmin(row + 10.0 * (row >= 0.9)))
    point = np.zeros_like(row)
    point[j] = 1.0
    transition[s2, o] = 0.6 * row + 0.4 * point
    bad = FiniteGroundMDP(transition=transition, reward=mdp.reward, duration=mdp.duration,
                          initiation=mdp.initiation, p0=mdp.p0, gamma=mdp.gamma)
    return bad, o
