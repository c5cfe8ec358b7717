"""Continuous Pinball domain with PI position-controller options.

A ball of fixed radius moves in the unit square among convex polygonal
obstacles. Primitive actions are velocity increments in [-1, 1]^2; motion uses
a continuous collision sweep with elastic reflection, per-step drag, and a
-5 * ||action|| reward. Four coordinate-direction options displace the ball by
a fixed step size under a PI controller with Gaussian stochastic termination.
"""

import json
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .datasets import TransitionSample, TransitionDataset
from .mdp import UnavailableOptionError

DIRECTIONS = {
    0: np.array([0.0, 1.0]),    # north
    1: np.array([0.0, -1.0]),   # south
    2: np.array([1.0, 0.0]),    # east
    3: np.array([-1.0, 0.0]),   # west
}
OPTION_NAMES = ["N", "S", "E", "W"]


@dataclass(frozen=True)
class PinballState:
    x: float
    y: float
    vx: float
    vy: float

    @property
    def pos(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def vel(self) -> np.ndarray:
        return np.array([self.vx, self.vy])


@dataclass(frozen=True)
class OptionSpec:
    option_id: int
    direction: np.ndarray
    step_size: float = 0.04
    kp: float = 50.0
    ki: float = 8.0
    term_sigma: float = 0.01
    timeout: int = 200

    def __post_init__(self):
        if self.step_size <= 0 or self.timeout < 1:
            raise ValueError("step_size must be > 0 and timeout >= 1")


@dataclass
class PinballConfig:
    obstacles: list = field(default_factory=list)   # list of (V, 2) vertex arrays
    ball_radius: float = 0.02
    drag: float = 0.995
    dt: float = 0.02          # a max-velocity ball crosses 1/50 of the arena per step
    action_cost: float = 5.0
    gamma: float = 0.9997
    step_size: float = 0.04
    kp: float = 50.0
    ki: float = 8.0
    term_sigma: float = 0.01
    timeout: int = 200
    obs_mode: str = "state"
    render_size: int = 50
    render_ball_radius: float = 0.06
    episode_option_cap: int = 50

    def __post_init__(self):
        if self.ball_radius <= 0 or not (0.0 < self.drag <= 1.0):
            raise ValueError("ball_radius must be > 0 and drag in (0, 1]")
        if self.obs_mode not in ("state", "pixel"):
            raise ValueError(f"unknown obs_mode {self.obs_mode!r}")
        self.obstacles = [_orient_ccw(np.asarray(p, dtype=np.float64))
                          for p in self.obstacles]
        for poly in self.obstacles:
            if (poly < 0).any() or (poly > 1).any():
                raise ValueError("obstacle vertices must lie inside the unit square")


def _orient_ccw(poly: np.ndarray) -> np.ndarray:
    a = poly
    b = np.roll(poly, -1, axis=0)
    area2 = float(np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))
    return poly if area2 >= 0 else poly[::-1].copy()


def load_obstacles(path=None) -> list:
    """Obstacle polygons from a JSON list of vertex lists; default packaged layout."""
    if path is None:
        text = resources.files("skillworld").joinpath(
            "layouts/pinball_obstacles.json").read_text()
    else:
        with open(path) as f:
            text = f.read()
    return [np.asarray(p, dtype=np.float64) for p in json.loads(text)]


def default_config(**overrides) -> PinballConfig:
    cfg = PinballConfig(obstacles=load_obstacles(), **overrides)
    return cfg


class PinballEnv:
    """Stateless physics core plus option execution; callers own states and RNG."""

    def __init__(self, config: PinballConfig):
        self.config = config
        self.n_options = 4
        self.options = [OptionSpec(option_id=i, direction=DIRECTIONS[i],
                                   step_size=config.step_size, kp=config.kp,
                                   ki=config.ki, term_sigma=config.term_sigma,
                                   timeout=config.timeout)
                        for i in range(4)]
        self._build_geometry()

    # -- geometry ---------------------------------------------------------

    def _build_geometry(self):
        a_list, b_list, n_list = [], [], []
        verts = []
        starts = []
        for poly in self.config.obstacles:
            m = poly.shape[0]
            starts.append(len(a_list))
            for i in range(m):
                A = poly[i]
                B = poly[(i + 1) % m]
                d = B - A
                # CCW interior on the left; outward normal points right of d
                n = np.array([d[1], -d[0]])
                n /= np.linalg.norm(n)
                a_list.append(A)
                b_list.append(B)
                n_list.append(n)
            verts.extend(poly)
        self._edge_a = np.array(a_list).reshape(-1, 2)
        self._edge_b = np.array(b_list).reshape(-1, 2)
        self._edge_n = np.array(n_list).reshape(-1, 2)
        self._edge_d = self._edge_b - self._edge_a
        self._edge_len2 = np.maximum((self._edge_d ** 2).sum(axis=1), 1e-300)
        self._verts = np.array(verts).reshape(-1, 2)
        self._poly_starts = np.array(starts, dtype=np.int64)

    def _inside_any(self, p) -> bool:
        """True when p lies inside some obstacle (all edge crosses >= 0)."""
        if self._edge_a.shape[0] == 0:
            return False
        cross = (self._edge_d[:, 0] * (p[1] - self._edge_a[:, 1])
                 - self._edge_d[:, 1] * (p[0] - self._edge_a[:, 0]))
        return bool((np.minimum.reduceat(cross, self._poly_starts) >= 0.0).any())

    def _point_inside_poly(self, p, poly) -> bool:
        a = poly
        b = np.roll(poly, -1, axis=0)
        cross = (b[:, 0] - a[:, 0]) * (p[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (p[0] - a[:, 0])
        return bool((cross >= 0).all())

    def _point_obstacle_distance(self, p) -> float:
        """Distance from a point to the nearest obstacle boundary; 0 if inside one."""
        if self._edge_a.shape[0] == 0:
            return np.inf
        if self._inside_any(p):
            return 0.0
        t = np.clip(((p - self._edge_a) * self._edge_d).sum(axis=1) / self._edge_len2, 0.0, 1.0)
        closest = self._edge_a + t[:, None] * self._edge_d
        return float(np.sqrt(((p - closest) ** 2).sum(axis=1).min()))

    def state_valid(self, state: PinballState) -> bool:
        rb = self.config.ball_radius
        p = state.pos
        if not (rb <= p[0] <= 1 - rb and rb <= p[1] <= 1 - rb):
            return False
        return self._point_obstacle_distance(p) >= rb - 1e-12

    def _sweep(self, p, d):
        """Earliest contact along p -> p + d; returns (t, unit normal) or None."""
        rb = self.config.ball_radius
        best_t = np.inf
        best_n = None

        # walls
        for axis in (0, 1):
            if d[axis] < 0:
                t = (rb - p[axis]) / d[axis]
                if -1e-12 <= t <= 1.0 and t < best_t:
                    n = np.zeros(2)
                    n[axis] = 1.0
                    best_t, best_n = max(t, 0.0), n
            if d[axis] > 0:
                t = (1.0 - rb - p[axis]) / d[axis]
                if -1e-12 <= t <= 1.0 and t < best_t:
                    n = np.zeros(2)
                    n[axis] = -1.0
                    best_t, best_n = max(t, 0.0), n

        if self._edge_a.shape[0]:
            # offset edges
            denom = self._edge_n @ d
            approaching = denom < -1e-15
            if approaching.any():
                off = self._edge_a + rb * self._edge_n
                t = ((off - p) * self._edge_n).sum(axis=1) / np.where(approaching, denom, -1.0)
                q = p + t[:, None] * d
                proj = ((q - off) * self._edge_d).sum(axis=1) / self._edge_len2
                valid = approaching & (t >= -1e-12) & (t <= 1.0) & (proj >= 0.0) & (proj <= 1.0)
                if valid.any():
                    i = int(np.flatnonzero(valid)[np.argmin(t[valid])])
                    if t[i] < best_t:
                        best_t, best_n = max(float(t[i]), 0.0), self._edge_n[i].copy()

            # vertex caps
            rel = p - self._verts
            a_q = float(d @ d)
            if a_q > 0:
                b_q = 2.0 * (rel @ d)
                c_q = (rel ** 2).sum(axis=1) - rb * rb
                disc = b_q * b_q - 4.0 * a_q * c_q
                ok = (disc >= 0) & (b_q < 0)
                if ok.any():
                    t = np.full(rel.shape[0], np.inf)
                    t[ok] = (-b_q[ok] - np.sqrt(disc[ok])) / (2.0 * a_q)
                    valid = ok & (t >= -1e-12) & (t <= 1.0)
                    if valid.any():
                        i = int(np.flatnonzero(valid)[np.argmin(t[valid])])
                        if t[i] < best_t:
                            tc = max(float(t[i]), 0.0)
                            contact = p + tc * d - self._verts[i]
                            norm = np.linalg.norm(contact)
                            if norm > 0:
                                best_t, best_n = tc, contact / norm

        if best_n is None:
            return None
        return best_t, best_n

    # -- dynamics ------------------------------------------------------------

    def _clearance(self, p) -> float:
        """Distance the ball surface can travel freely from p in any direction."""
        rb = self.config.ball_radius
        wall = min(p[0] - rb, 1.0 - rb - p[0], p[1] - rb, 1.0 - rb - p[1])
        return min(wall, self._point_obstacle_distance(p) - rb)

    def step(self, state: PinballState, action):
        """One primitive step: velocity kick, swept integration with elastic
        reflections, drag, and reward -5 * ||action||."""
        cfg = self.config
        a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        v = np.clip(state.vel + a, -1.0, 1.0)
        p = state.pos
        disp = v * cfg.dt
        # fast path: the whole step fits inside the free clearance
        if float(np.abs(disp).sum()) < self._clearance(p):
            p = p + disp
        else:
            remaining = 1.0
            for _ in range(10):
                disp = v * cfg.dt * remaining
                hit = self._sweep(p, disp)
                if hit is None:
                    p = p + disp
                    break
                t, n = hit
                p = p + disp * t + n * 1e-9
                v = v - 2.0 * float(v @ n) * n
                remaining *= (1.0 - t)
                if remaining <= 1e-12:
                    break
        v = np.clip(v * cfg.drag, -1.0, 1.0)
        reward = -cfg.action_cost * float(np.linalg.norm(a))
        return PinballState(float(p[0]), float(p[1]), float(v[0]), float(v[1])), reward

    def reset(self, rng: np.random.Generator) -> PinballState:
        """Uniform free position with zero velocity."""
        rb = self.config.ball_radius
        for _ in range(10000):
            p = rng.uniform(rb, 1 - rb, size=2)
            if self._point_obstacle_distance(p) >= rb:
                return PinballState(float(p[0]), float(p[1]), 0.0, 0.0)
        raise RuntimeError("could not sample a free position; obstacles too dense")

    def sample_state_near(self, center, radius: float, rng: np.random.Generator):
        """A valid zero-velocity state within radius of center, or None."""
        rb = self.config.ball_radius
        center = np.asarray(center, dtype=np.float64)
        for _ in range(200):
            ang = rng.uniform(0.0, 2.0 * np.pi)
            rad = radius * np.sqrt(rng.random())
            p = center + rad * np.array([np.cos(ang), np.sin(ang)])
            if (rb <= p[0] <= 1 - rb and rb <= p[1] <= 1 - rb
                    and self._point_obstacle_distance(p) >= rb):
                return PinballState(float(p[0]), float(p[1]), 0.0, 0.0)
        return None

    # -- options ---------------------------------------------------------------

    def _segment_obstacle_distance(self, p0, p1) -> float:
        if self._edge_a.shape[0] == 0:
            return np.inf
        if self._inside_any(p0) or self._inside_any(p1):
            return 0.0
        d1 = p1 - p0
        a = float(d1 @ d1)
        if a < 1e-300:
            return self._point_obstacle_distance(p0)
        d2 = self._edge_d
        r = p0 - self._edge_a
        e = self._edge_len2
        b = d2 @ d1
        c = r @ d1
        f = (d2 * r).sum(axis=1)
        denom = a * e - b * b
        s = np.where(denom > 1e-300, np.clip((b * f - c * e) / np.where(denom > 1e-300, denom, 1.0), 0.0, 1.0), 0.0)
        t = (b * s + f) / e
        t_cl = np.clip(t, 0.0, 1.0)
        s = np.clip((b * t_cl - c) / a, 0.0, 1.0)
        pa = p0 + s[:, None] * d1
        pb = self._edge_a + t_cl[:, None] * d2
        return float(np.sqrt(((pa - pb) ** 2).sum(axis=1).min()))

    def initiation_set(self, state: PinballState) -> np.ndarray:
        """Option o is available iff the disc swept by step_size along its
        direction stays inside the unit square and clears every obstacle."""
        rb = self.config.ball_radius
        p = state.pos
        out = np.zeros(self.n_options, dtype=bool)
        for o, spec in enumerate(self.options):
            q = p + spec.step_size * spec.direction
            if not (rb <= q[0] <= 1 - rb and rb <= q[1] <= 1 - rb):
                continue
            out[o] = self._segment_obstacle_distance(p, q) >= rb
        return out

    def execute_option(self, state: PinballState, option_id: int,
                       rng: np.random.Generator):
        """Run the PI controller toward pos + step_size * direction until the
        Gaussian termination draw fires or the step budget runs out.

        Returns (TransitionSample, end_state). The discounted option reward
        uses exponents 0..tau-1.
        """
        initiation = self.initiation_set(state)
        if not initiation[option_id]:
            raise UnavailableOptionError(
                f"option {OPTION_NAMES[option_id]} unavailable at ({state.x:.3f}, {state.y:.3f})")
        cfg = self.config
        spec = self.options[option_id]
        start_obs = self.observe(state)
        target = state.pos + spec.step_size * spec.direction
        integral = np.zeros(2)
        disc = 1.0
        r_acc = 0.0
        tau = 0
        cur = state
        two_sig2 = 2.0 * spec.term_sigma ** 2
        while tau < spec.timeout:
            err = target - cur.pos
            integral += err
            a = np.clip(spec.kp * err + spec.ki * integral, -1.0, 1.0)
            cur, r = self.step(cur, a)
            r_acc += disc * r
            disc *= cfg.gamma
            tau += 1
            dist2 = float(((cur.pos - target) ** 2).sum())
            if rng.random() < np.exp(-dist2 / two_sig2):
                break
        sample = TransitionSample(s=start_obs, o=option_id, r_gamma=r_acc,
                                  s_next=self.observe(cur), tau=tau,
                                  initiation=initiation)
        return sample, cur

    # -- observations ---------------------------------------------------------

    @property
    def obs_dim(self) -> int:
        if self.config.obs_mode == "pixel":
            return self.config.render_size ** 2
        return 4

    @property
    def gamma(self) -> float:
        return self.config.gamma

    def observe(self, state: PinballState) -> np.ndarray:
        if self.config.obs_mode == "pixel":
            return self.render(state).ravel()
        return np.array([state.x, state.y, state.vx, state.vy])

    def render(self, state: PinballState) -> np.ndarray:
        """Top-view grayscale frame: light background, dark obstacles, gray ball disc.

        A function of position only; velocities do not appear.
        """
        W = self.config.render_size
        centers = (np.arange(W) + 0.5) / W
        X, Y = np.meshgrid(centers, 1.0 - centers)    # row 0 is the top (y near 1)
        frame = np.ones((W, W))
        for poly in self.config.obstacles:
            a = poly
            b = np.roll(poly, -1, axis=0)
            inside = np.ones((W, W), dtype=bool)
            for i in range(poly.shape[0]):
                cross = (b[i, 0] - a[i, 0]) * (Y - a[i, 1]) - (b[i, 1] - a[i, 1]) * (X - a[i, 0])
                inside &= cross >= 0
            frame[inside] = 0.0
        rr = self.config.render_ball_radius
        ball = (X - state.x) ** 2 + (Y - state.y) ** 2 <= rr * rr
        frame[ball] = 0.5
        return frame

    def ground_position(self, state: PinballState) -> np.ndarray:
        return state.pos


def collect_dataset(env: PinballEnv, n_samples: int, rng: np.random.Generator,
                    episode_cap: int | None = None) -> TransitionDataset:
    """Roll out a uniform-random-option behavior policy.

    Episodes reset when no option is available (stuck) or after the per-episode
    option cap.
    """
    cap = episode_cap if episode_cap is not None else env.config.episode_option_cap
    ds = TransitionDataset(obs_dim=env.obs_dim, n_options=env.n_options,
                           obs_mode=env.config.obs_mode)
    state = env.reset(rng)
    in_episode = 0
    new_episode = True
    while len(ds) < n_samples:
        avail = env.initiation_set(state)
        if not avail.any() or in_episode >= cap:
            state = env.reset(rng)
            in_episode = 0
            new_episode = True
            continue
        o = int(rng.choice(np.flatnonzero(avail)))
        sample, state = env.execute_option(state, o, rng)
        ds.append(sample, new_episode=new_episode)
        new_episode = False
        in_episode += 1
    return ds
