"""Grounded abstract models over finite MDPs and their exact certification.

An abstraction map phi sends ground states to an abstract alphabet Z. When phi
is dynamics-preserving (next-state rows and initiation flags depend on s only
through phi(s), over reachable states), the tuple construction over
Z x O x Z with sentinel initial tuples yields an abstract MDP plus grounding
whose simulated trajectory distributions match the ground MDP exactly. This
module builds that construction and measures everything the claims promise:
rollout-distribution gaps, value preservation, perturbation value-loss bounds,
and grounding-error propagation.
"""

from dataclasses import dataclass, field

import numpy as np

from .mdp import (
    FiniteGroundMDP,
    TabularPolicy,
    DistributionRollout,
    PRUNE_EPS,
    reachable_states,
)


@dataclass(frozen=True)
class AbstractionMap:
    """Total map from ground state index to abstract index in {0..K-1}."""

    phi: np.ndarray
    K: int

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=np.int64))
        if self.phi.ndim != 1:
            raise ValueError("phi must be a vector over ground states")
        if self.phi.size and not ((self.phi >= 0) & (self.phi < self.K)).all():
            raise ValueError("phi values outside {0..K-1}")


@dataclass
class Violation:
    """One witness that two same-cell states disagree for an option."""

    s1: int
    s2: int
    option: int
    gap: float


@dataclass
class PreservationReport:
    preserving: bool
    violations: list


def check_dynamics_preserving(mdp: FiniteGroundMDP, phi: AbstractionMap,
                              tol: float = 1e-9) -> PreservationReport:
    """Verify transition rows and initiation flags are constant on each phi-cell.

    Only states reachable with positive probability are compared. Returns a
    verdict plus every offending (s1, s2, o) pair with its sup-norm row gap.
    """
    reach = reachable_states(mdp)
    violations = []
    for z in range(phi.K):
        members = np.flatnonzero((phi.phi == z) & reach)
        if members.size < 2:
            continue
        ref = int(members[0])
        for s in members[1:]:
            s = int(s)
            for o in range(mdp.n_options):
                if mdp.initiation[ref, o] != mdp.initiation[s, o]:
                    violations.append(Violation(ref, s, o, float("inf")))
                    continue
                if not mdp.initiation[ref, o]:
                    continue
                gap = float(np.max(np.abs(mdp.transition[ref, o] - mdp.transition[s, o])))
                if gap > tol:
                    violations.append(Violation(ref, s, o, gap))
    return PreservationReport(preserving=not violations, violations=violations)


@dataclass
class GroundedAbstractModel:
    """Exact triple (ground MDP, abstract MDP over tuples, grounding table).

    Abstract states are tuples (z_prev, o_prev, z); initial states use the
    sentinels z_prev = K, o_prev = n_options. Grounding rows are supported on
    the phi-cell of each tuple's final z and sum to 1.
    """

    ground: FiniteGroundMDP
    phi: AbstractionMap
    tuples: list                    # [(z_prev, o_prev, z)]
    tuple_index: dict               # (z_prev, o_prev, z) -> row
    z_last: np.ndarray              # (A,) final z per tuple
    grounding: np.ndarray           # (A, S)
    abstract_transition: np.ndarray  # (A, O, A)
    abstract_reward: np.ndarray     # (A, O)
    abstract_duration: np.ndarray   # (A, O)
    availability: np.ndarray        # (A, O) bool
    abstract_p0: np.ndarray         # (A,)
    z_rows: np.ndarray              # (K, O, S) per-cell ground rows
    z_transition: np.ndarray        # (K, O, K) cell-level kernel
    z_avail: np.ndarray             # (K, O) bool
    z_p0: np.ndarray                # (K,)

    @property
    def n_abstract(self) -> int:
        return len(self.tuples)

    @property
    def sentinel_z(self) -> int:
        return self.phi.K

    @property
    def sentinel_o(self) -> int:
        return self.ground.n_options


def build_abstract_model(mdp: FiniteGroundMDP, phi: AbstractionMap,
                         tol: float = 1e-9, force: bool = False) -> GroundedAbstractModel:
    """Construct the grounded abstract model for a dynamics-preserving phi.

    p0(z) and T(z'|z,o) aggregate the cell rows; grounding rows are the
    conditional distributions T(s'|z,o) 1[phi(s')=z'] / T(z'|z,o) (p0 variant
    for initial tuples); abstract reward/duration are grounding-weighted
    expectations. Abstract states are exactly the reachable tuples plus the
    sentinel-prefixed initial ones.

    With force=True the preservation check is skipped and each cell's row is
    the uniform average of its members' rows; that is the natural completion
    used to exhibit rollout gaps for non-preserving maps.
    """
    report = check_dynamics_preserving(mdp, phi, tol)
    if not report.preserving and not force:
        v = report.violations[0]
        raise ValueError(
            f"phi is not dynamics-preserving: states {v.s1},{v.s2} differ on option {v.option}"
        )

    S, O, K = mdp.n_states, mdp.n_options, phi.K
    reach = reachable_states(mdp)
    cells = [np.flatnonzero((phi.phi == z) & reach) for z in range(K)]

    z_rows = np.zeros((K, O, S))
    z_avail = np.zeros((K, O), dtype=bool)
    for z in range(K):
        if cells[z].size == 0:
            continue
        members = cells[z]
        ref = int(members[0])
        for o in range(O):
            # initiation flags agree across the cell when preserving
            if mdp.initiation[ref, o]:
                z_avail[z, o] = True
                if force:
                    z_rows[z, o] = mdp.transition[members, o].mean(axis=0)
                else:
                    z_rows[z, o] = mdp.transition[ref, o]

    z_transition = np.zeros((K, O, K))
    for z in range(K):
        for o in range(O):
            if z_avail[z, o]:
                for z2 in range(K):
                    if cells[z2].size:
                        z_transition[z, o, z2] = z_rows[z, o, cells[z2]].sum()

    z_p0 = np.zeros(K)
    for z in range(K):
        if cells[z].size:
            z_p0[z] = mdp.p0[cells[z]].sum()

    # tuple closure: initial tuples for supp(p0), then (z, o, z') via BFS
    tuples = []
    tuple_index = {}

    def add_tuple(t):
        if t not in tuple_index:
            tuple_index[t] = len(tuples)
            tuples.append(t)
            return True
        return False

    z_seen = np.zeros(K, dtype=bool)
    frontier = []
    for z0 in range(K):
        if z_p0[z0] > 0:
            add_tuple((K, O, z0))
            if not z_seen[z0]:
                z_seen[z0] = True
                frontier.append(z0)
    while frontier:
        z = frontier.pop(0)
        for o in range(O):
            if not z_avail[z, o]:
                continue
            for z2 in range(K):
                if z_transition[z, o, z2] > 0:
                    add_tuple((z, o, z2))
                    if not z_seen[z2]:
                        z_seen[z2] = True
                        frontier.append(z2)

    A = len(tuples)
    z_last = np.array([t[2] for t in tuples], dtype=np.int64)

    grounding = np.zeros((A, S))
    for a, (zp, op, z) in enumerate(tuples):
        members = cells[z]
        if zp == K:
            grounding[a, members] = mdp.p0[members] / z_p0[z]
        else:
            grounding[a, members] = z_rows[zp, op, members] / z_transition[zp, op, z]

    availability = z_avail[z_last]

    abstract_transition = np.zeros((A, O, A))
    for a in range(A):
        y = int(z_last[a])
        for o in range(O):
            if not availability[a, o]:
                continue
            for z2 in range(K):
                p = z_transition[y, o, z2]
                if p > 0:
                    abstract_transition[a, o, tuple_index[(y, o, z2)]] = p

    abstract_reward = np.zeros((A, O))
    abstract_duration = np.ones((A, O))
    for a in range(A):
        for o in range(O):
            if availability[a, o]:
                abstract_reward[a, o] = grounding[a] @ mdp.reward[:, o]
                abstract_duration[a, o] = grounding[a] @ mdp.duration[:, o]

    abstract_p0 = np.zeros(A)
    for a, (zp, op, z) in enumerate(tuples):
        if zp == K:
            abstract_p0[a] = z_p0[z]

    return GroundedAbstractModel(
        ground=mdp, phi=phi, tuples=tuples, tuple_index=tuple_index, z_last=z_last,
        grounding=grounding, abstract_transition=abstract_transition,
        abstract_reward=abstract_reward, abstract_duration=abstract_duration,
        availability=availability, abstract_p0=abstract_p0,
        z_rows=z_rows, z_transition=z_transition, z_avail=z_avail, z_p0=z_p0,
    )


def grounded_rollout_distribution(model: GroundedAbstractModel,
                                  option_sequence) -> DistributionRollout:
    """Exact grounded joint over ground sequences, simulated through the abstract model.

    Runs the joint (ground sequence, abstract state) recursion and marginalizes
    the abstract trajectory at the end.
    """
    option_sequence = tuple(int(o) for o in option_sequence)
    state = {}
    for a in range(model.n_abstract):
        if model.abstract_p0[a] <= 0:
            continue
        for s in np.flatnonzero(model.grounding[a]):
            p = model.abstract_p0[a] * model.grounding[a, s]
            if p > PRUNE_EPS:
                state[((int(s),), a)] = p
    for o in option_sequence:
        nxt = {}
        for (seq, a), p in state.items():
            if not model.availability[a, o]:
                continue
            row = model.abstract_transition[a, o]
            for a2 in np.flatnonzero(row):
                w = p * row[a2]
                g = model.grounding[a2]
                for s2 in np.flatnonzero(g):
                    p2 = w * g[s2]
                    if p2 > PRUNE_EPS:
                        key = (seq + (int(s2),), int(a2))
                        nxt[key] = nxt.get(key, 0.0) + p2
        state = nxt
    joint = {}
    for (seq, _a), p in state.items():
        joint[seq] = joint.get(seq, 0.0) + p
    return DistributionRollout(horizon=len(option_sequence),
                               option_sequence=option_sequence, joint=joint)


def _ground_step_matrices(mdp: FiniteGroundMDP) -> list:
    """Per-option (S, S) kernels with unavailable rows zeroed."""
    mats = []
    for o in range(mdp.n_options):
        A = mdp.transition[:, o, :].copy()
        A[~mdp.initiation[:, o]] = 0.0
        mats.append(A)
    return mats


def _grounded_step_matrices(model: GroundedAbstractModel) -> list:
    """Per-option (S, S) kernels of the grounded simulation.

    U_o[s, s'] = T(z'|z, o) G(s'|z, o, z') with z = phi(s), z' = phi(s'): the
    abstract trajectory is pinned to the phi-path because grounding rows are
    supported on their own cell.
    """
    S = model.ground.n_states
    phi = model.phi.phi
    mats = []
    for o in range(model.ground.n_options):
        U = np.zeros((S, S))
        for s in range(S):
            z = int(phi[s])
            if not model.z_avail[z, o]:
                continue
            for z2 in range(model.phi.K):
                w = model.z_transition[z, o, z2]
                if w <= 0:
                    continue
                idx = model.tuple_index.get((z, o, z2))
                if idx is None:
                    continue
                U[s] += w * model.grounding[idx]
        mats.append(U)
    return mats


def _grounded_base(model: GroundedAbstractModel) -> np.ndarray:
    q0 = np.zeros(model.ground.n_states)
    for a in range(model.n_abstract):
        if model.abstract_p0[a] > 0:
            q0 += model.abstract_p0[a] * model.grounding[a]
    return q0


def max_rollout_gap(model: GroundedAbstractModel, horizon: int,
                    stop_above: float = np.inf):
    """Exact max |B_t - B_t_grounded| over every option sequence up to a horizon.

    Walks the option-sequence tree depth-first, carrying the dense joint of
    both models over state paths (shared prefixes are computed once). Returns
    (max_gap, option_sequence, path) of the arg-max. Stops early once the gap
    exceeds stop_above.
    """
    mdp = model.ground
    S = mdp.n_states
    A_mats = _ground_step_matrices(mdp)
    U_mats = _grounded_step_matrices(model)
    b = mdp.p0.copy()
    bbar = _grounded_base(model)
    last = np.arange(S)

    best = {"gap": 0.0, "seq": (), "path": None}

    def visit(b_flat, bbar_flat, last_idx, seq):
        diff = np.abs(b_flat - bbar_flat)
        i = int(np.argmax(diff))
        if diff[i] > best["gap"]:
            best["gap"] = float(diff[i])
            best["seq"] = seq
            best["path"] = i
        if best["gap"] > stop_above or len(seq) >= horizon:
            return
        n = b_flat.shape[0]
        for o in range(mdp.n_options):
            nb = (b_flat[:, None] * A_mats[o][last_idx, :]).ravel()
            nbbar = (bbar_flat[:, None] * U_mats[o][last_idx, :]).ravel()
            nlast = np.tile(np.arange(S), n)
            visit(nb, nbbar, nlast, seq + (o,))
            if best["gap"] > stop_above:
                return

    visit(b, bbar, last, ())
    return best["gap"], best["seq"], best["path"]


# -- value preservation -------------------------------------------------------


def _next_tuple_table(model: GroundedAbstractModel) -> np.ndarray:
    """next_a[a, o, s'] = index of tuple (z_last(a), o, phi(s')), or -1."""
    S = model.ground.n_states
    O = model.ground.n_options
    A = model.n_abstract
    phi = model.phi.phi
    table = np.full((A, O, S), -1, dtype=np.int64)
    for a in range(A):
        y = int(model.z_last[a])
        for o in range(O):
            if not model.availability[a, o]:
                continue
            for s2 in range(S):
                key = (y, o, int(phi[s2]))
                idx = model.tuple_index.get(key)
                if idx is not None:
                    table[a, o, s2] = idx
    return table


def abstract_policy_values(model: GroundedAbstractModel, policy: TabularPolicy) -> np.ndarray:
    """Exact policy values in the abstract tuple MDP (linear solve)."""
    policy.validate_against(model.availability)
    A = model.n_abstract
    idx = np.arange(A)
    T_pi = model.abstract_transition[idx, policy.choice]
    R_pi = model.abstract_reward[idx, policy.choice]
    G_pi = model.ground.gamma ** model.abstract_duration[idx, policy.choice]
    return np.linalg.solve(np.eye(A) - G_pi[:, None] * T_pi, R_pi)


def product_ground_values(model: GroundedAbstractModel, policy: TabularPolicy):
    """Ground values of an abstract policy, lifted through phi-tuples.

    The evaluated chain lives on pairs (tuple a, ground state s in the cell of
    a's final z); the next pair after executing o at s is
    ((z_last(a), o, phi(s')), s'). Returns (pair list, pair index dict, values).
    """
    policy.validate_against(model.availability)
    mdp = model.ground
    reach = reachable_states(mdp)
    phi = model.phi.phi
    pairs = []
    pair_index = {}
    for a in range(model.n_abstract):
        members = np.flatnonzero((phi == model.z_last[a]) & reach)
        for s in members:
            pair_index[(a, int(s))] = len(pairs)
            pairs.append((a, int(s)))
    N = len(pairs)
    next_table = _next_tuple_table(model)

    P = np.zeros((N, N))
    R = np.zeros(N)
    D = np.zeros(N)
    for i, (a, s) in enumerate(pairs):
        o = int(policy.choice[a])
        R[i] = mdp.reward[s, o]
        D[i] = mdp.gamma ** mdp.duration[s, o]
        row = mdp.transition[s, o]
        for s2 in np.flatnonzero(row):
            a2 = int(next_table[a, o, s2])
            P[i, pair_index[(a2, int(s2))]] += row[s2]
    w = np.linalg.solve(np.eye(N) - D[:, None] * P, R)
    return pairs, pair_index, w


@dataclass
class ValuePreservationReport:
    max_residual: float
    residuals: np.ndarray
    ok: bool


def check_value_preservation(model: GroundedAbstractModel, policy: TabularPolicy,
                             tol: float = 1e-8) -> ValuePreservationReport:
    """Compare abstract values against grounding-weighted ground values.

    residual(a) = |v_abstract(a) - sum_s G_a(s) v_ground(a, s)| where the
    ground evaluation runs the abstract policy lifted through phi-tuples.
    """
    v_bar = abstract_policy_values(model, policy)
    pairs, pair_index, w = product_ground_values(model, policy)
    A = model.n_abstract
    residuals = np.zeros(A)
    for a in range(A):
        blend = 0.0
        for s in np.flatnonzero(model.grounding[a]):
            blend += model.grounding[a, s] * w[pair_index[(a, int(s))]]
        residuals[a] = abs(v_bar[a] - blend)
    mx = float(residuals.max()) if A else 0.0
    return ValuePreservationReport(max_residual=mx, residuals=residuals, ok=mx <= tol)


# -- strong subgoal -----------------------------------------------------------


@dataclass
class SubgoalRefusal:
    """Witness that some option's outcome depends on its start state."""

    option: int
    s1: int
    s2: int
    gap: float


def strong_subgoal_partition(mdp: FiniteGroundMDP, tol: float = 1e-12):
    """Partition states by initiation signature when every option is a strong subgoal.

    If some option's transition row varies across its initiation set (beyond
    tol), returns a SubgoalRefusal naming a violating (s1, s2, o) instead.
    """
    reach = reachable_states(mdp)
    for o in range(mdp.n_options):
        members = np.flatnonzero(mdp.initiation[:, o] & reach)
        if members.size < 2:
            continue
        ref = int(members[0])
        for s in members[1:]:
            gap = float(np.max(np.abs(mdp.transition[ref, o] - mdp.transition[int(s), o])))
            if gap > tol:
                return SubgoalRefusal(option=o, s1=ref, s2=int(s), gap=gap)

    signatures = {}
    phi = np.zeros(mdp.n_states, dtype=np.int64)
    for s in range(mdp.n_states):
        sig = tuple(bool(x) for x in mdp.initiation[s])
        if sig not in signatures:
            signatures[sig] = len(signatures)
        phi[s] = signatures[sig]
    return AbstractionMap(phi=phi, K=len(signatures))


# -- value loss under perturbation ---------------------------------------------


@dataclass
class ValueLossReport:
    eps_T: float
    eps_R: float
    vmax: float
    measured_gap: float
    bound: float


def random_abstract_policy(model: GroundedAbstractModel, rng: np.random.Generator) -> TabularPolicy:
    """Uniform choice among available options per abstract state."""
    choice = np.zeros(model.n_abstract, dtype=np.int64)
    for a in range(model.n_abstract):
        opts = np.flatnonzero(model.availability[a])
        choice[a] = int(rng.choice(opts))
    return TabularPolicy(choice=choice)


def perturb_abstract_model(model: GroundedAbstractModel, scale: float,
                           rng: np.random.Generator):
    """Dirichlet-jitter abstract transition rows, uniform-jitter abstract rewards.

    Rows stay on the simplex over their original support (convex combination
    with a Dirichlet draw). Returns (perturbed transition, perturbed reward).
    """
    if not (0.0 <= scale <= 1.0):
        raise ValueError(f"perturbation scale {scale} outside [0, 1]")
    T = model.abstract_transition.copy()
    R = model.abstract_reward.copy()
    if scale == 0.0:
        return T, R
    A, O, _ = T.shape
    for a in range(A):
        for o in range(O):
            if not model.availability[a, o]:
                continue
            support = np.flatnonzero(T[a, o])
            if support.size > 1:
                d = rng.dirichlet(np.ones(support.size))
                T[a, o, support] = (1.0 - scale) * T[a, o, support] + scale * d
            R[a, o] += scale * rng.uniform(-1.0, 1.0)
    return T, R


def _perturbed_abstract_values(model, T_pert, R_pert, policy):
    idx = np.arange(model.n_abstract)
    T_pi = T_pert[idx, policy.choice]
    R_pi = R_pert[idx, policy.choice]
    G_pi = model.ground.gamma ** model.abstract_duration[idx, policy.choice]
    return np.linalg.solve(np.eye(model.n_abstract) - G_pi[:, None] * T_pi, R_pi)


def value_loss_experiment(model: GroundedAbstractModel, perturb_scale: float,
                          n_policies: int = 20,
                          rng: np.random.Generator | None = None) -> ValueLossReport:
    """Perturb the abstract model, measure realized errors, and compare the
    worst exact Q gap over random probe policies against the closed-form bound.

    eps_T is the worst squared L1 distance between ground rows and the grounded
    one-step prediction of the perturbed model; eps_R the worst squared reward
    deviation over grounding supports. The bound asserted downstream is
    (sqrt(eps_R) + gamma VMax sqrt(eps_T)) / (1 - gamma) with VMax = RMax/(1-gamma).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    mdp = model.ground
    gamma = mdp.gamma
    T_pert, R_pert = perturb_abstract_model(model, perturb_scale, rng)

    # realized epsilon_T / epsilon_R, measured over (tuple, support, option)
    eps_T = 0.0
    eps_R = 0.0
    for a in range(model.n_abstract):
        y = int(model.z_last[a])
        support = np.flatnonzero(model.grounding[a])
        for o in range(mdp.n_options):
            if not model.availability[a, o]:
                continue
            tilde = T_pert[a, o] @ model.grounding      # (S,)
            l1 = float(np.abs(model.z_rows[y, o] - tilde).sum())
            eps_T = max(eps_T, l1 * l1)
            dr = float(np.max(np.abs(mdp.reward[support, o] - R_pert[a, o])))
            eps_R = max(eps_R, dr * dr)

    rmax = float(np.max(np.abs(mdp.reward[mdp.initiation])))
    vmax = rmax / (1.0 - gamma)

    gap = 0.0
    next_table = _next_tuple_table(model)
    for _ in range(n_policies):
        policy = random_abstract_policy(model, rng)
        _, pair_index, w = product_ground_values(model, policy)
        v_tilde = _perturbed_abstract_values(model, T_pert, R_pert, policy)
        for a in range(model.n_abstract):
            support = np.flatnonzero(model.grounding[a])
            for o in range(mdp.n_options):
                if not model.availability[a, o]:
                    continue
                q_bar = R_pert[a, o] + (gamma ** model.abstract_duration[a, o]) * (
                    T_pert[a, o] @ v_tilde
                )
                for s in support:
                    s = int(s)
                    row = mdp.transition[s, o]
                    cont = 0.0
                    for s2 in np.flatnonzero(row):
                        a2 = int(next_table[a, o, s2])
                        cont += row[s2] * w[pair_index[(a2, int(s2))]]
                    q = mdp.reward[s, o] + (gamma ** mdp.duration[s, o]) * cont
                    gap = max(gap, abs(q - q_bar))

    bound = (np.sqrt(eps_R) + gamma * vmax * np.sqrt(eps_T)) / (1.0 - gamma)
    return ValueLossReport(eps_T=eps_T, eps_R=eps_R, vmax=vmax,
                           measured_gap=float(gap), bound=float(bound))


# -- grounding error propagation ------------------------------------------------


@dataclass
class GroundingErrorReport:
    delta: float
    max_transition_l1: float
    max_reward_err: float
    rmax: float
    eps_T: float
    eps_R: float
    transition_ok: bool
    reward_ok: bool


def grounding_error_propagation(model: GroundedAbstractModel, delta_scale: float,
                                rng: np.random.Generator | None = None) -> GroundingErrorReport:
    """Perturb every grounding row and verify the error chain it implies:
    ||T - T_tilde||_1 <= sqrt(delta) and |R_bar - R_tilde| <= RMax sqrt(delta),
    with delta the measured worst squared L1 grounding gap.

    T_tilde is the one-step ground prediction rebuilt from the perturbed
    groundings; the Minkowski-combined reward bound
    sqrt(eps_R) = sqrt(delta) + RMax sqrt(delta) is reported as eps_R.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    mdp = model.ground

    G_pert = model.grounding.copy()
    if delta_scale > 0:
        for a in range(model.n_abstract):
            support = np.flatnonzero(G_pert[a])
            jitter = rng.uniform(-1.0, 1.0, size=support.size)
            vals = np.maximum(G_pert[a, support] * (1.0 + delta_scale * jitter), 0.0)
            if vals.sum() <= 0:
                raise ValueError("grounding perturbation wiped out the support")
            G_pert[a, support] = vals / vals.sum()

    delta = float(np.max(np.abs(G_pert - model.grounding).sum(axis=1) ** 2))

    max_t = 0.0
    max_r = 0.0
    rmax = float(np.max(np.abs(mdp.reward[mdp.initiation])))
    for a in range(model.n_abstract):
        y = int(model.z_last[a])
        for o in range(mdp.n_options):
            if not model.availability[a, o]:
                continue
            tilde = model.abstract_transition[a, o] @ G_pert   # (S,)
            max_t = max(max_t, float(np.abs(model.z_rows[y, o] - tilde).sum()))
            r_tilde = G_pert[a] @ mdp.reward[:, o]
            max_r = max(max_r, abs(model.abstract_reward[a, o] - r_tilde))

    root = float(np.sqrt(delta))
    sqrt_eps_R = root + rmax * root
    slack = 1e-12
    return GroundingErrorReport(
        delta=delta, max_transition_l1=max_t, max_reward_err=max_r, rmax=rmax,
        eps_T=max_t * max_t, eps_R=sqrt_eps_R * sqrt_eps_R,
        transition_ok=max_t <= root + slack,
        reward_ok=max_r <= rmax * root + slack,
    )
