"""Option-transition datasets: the in-memory container and its file formats.

One sample records a single option execution: observation, option index,
accumulated discounted reward, terminal observation, primitive-step count, and
the full initiation vector at the start state. A per-sample new_episode flag
preserves trajectory boundaries so consecutive pairs can be sliced later.
"""

import base64
import csv
import json
from dataclasses import dataclass

import numpy as np

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TransitionSample:
    s: np.ndarray
    o: int
    r_gamma: float
    s_next: np.ndarray
    tau: int
    initiation: np.ndarray


class TransitionDataset:
    """Columnar store of TransitionSamples with episode boundaries."""

    def __init__(self, obs_dim: int, n_options: int, obs_mode: str = "state"):
        self.obs_dim = obs_dim
        self.n_options = n_options
        self.obs_mode = obs_mode
        self._s = []
        self._o = []
        self._r = []
        self._s2 = []
        self._tau = []
        self._init = []
        self._new_ep = []
        self._frozen = None

    def __len__(self):
        return len(self._o)

    def append(self, sample: TransitionSample, new_episode: bool):
        if sample.tau < 1:
            raise ValueError(f"tau {sample.tau} < 1")
        if not sample.initiation[sample.o]:
            raise ValueError("executed option not marked available in the sample")
        self._s.append(np.asarray(sample.s, dtype=np.float64))
        self._o.append(int(sample.o))
        self._r.append(float(sample.r_gamma))
        self._s2.append(np.asarray(sample.s_next, dtype=np.float64))
        self._tau.append(int(sample.tau))
        self._init.append(np.asarray(sample.initiation, dtype=bool))
        self._new_ep.append(bool(new_episode))
        self._frozen = None

    def arrays(self):
        """Columns as arrays: (s, o, r_gamma, s_next, tau, initiation, new_episode)."""
        if self._frozen is None:
            self._frozen = (
                np.array(self._s, dtype=np.float64).reshape(len(self), self.obs_dim),
                np.array(self._o, dtype=np.int64),
                np.array(self._r, dtype=np.float64),
                np.array(self._s2, dtype=np.float64).reshape(len(self), self.obs_dim),
                np.array(self._tau, dtype=np.int64),
                np.array(self._init, dtype=bool).reshape(len(self), self.n_options),
                np.array(self._new_ep, dtype=bool),
            )
        return self._frozen

    def sample_at(self, i: int) -> TransitionSample:
        return TransitionSample(s=self._s[i], o=self._o[i], r_gamma=self._r[i],
                                s_next=self._s2[i], tau=self._tau[i],
                                initiation=self._init[i])

    # -- binary record stream ------------------------------------------------

    def save(self, path):
        """JSON header line, then fixed-layout little-endian float64 records.

        Record layout: s | o | r_gamma | s_next | tau | initiation | new_episode.
        """
        s, o, r, s2, tau, init, newep = self.arrays()
        n = len(self)
        header = {
            "obs_mode": self.obs_mode,
            "n": n,
            "schema_version": SCHEMA_VERSION,
            "obs_dim": self.obs_dim,
            "n_options": self.n_options,
        }
        rec = np.concatenate(
            [s, o[:, None].astype(np.float64), r[:, None], s2,
             tau[:, None].astype(np.float64), init.astype(np.float64),
             newep[:, None].astype(np.float64)], axis=1)
        with open(path, "wb") as f:
            f.write(json.dumps(header).encode("utf-8"))
            f.write(b"\n")
            f.write(np.ascontiguousarray(rec, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "TransitionDataset":
        with open(path, "rb") as f:
            header = json.loads(f.readline().decode("utf-8"))
            blob = f.read()
        if header["schema_version"] != SCHEMA_VERSION:
            raise ValueError(f"unsupported dataset schema {header['schema_version']}")
        d = header["obs_dim"]
        k = header["n_options"]
        n = header["n"]
        width = 2 * d + 3 + k + 1
        rec = np.frombuffer(blob, dtype="<f8").reshape(n, width)
        ds = cls(obs_dim=d, n_options=k, obs_mode=header["obs_mode"])
        for i in range(n):
            row = rec[i]
            ds.append(TransitionSample(
                s=row[:d].copy(),
                o=int(row[d]),
                r_gamma=float(row[d + 1]),
                s_next=row[d + 2:2 * d + 2].copy(),
                tau=int(row[2 * d + 2]),
                initiation=row[2 * d + 3:2 * d + 3 + k] > 0.5,
            ), new_episode=bool(row[-1] > 0.5))
        return ds

    # -- CSV export ------------------------------------------------------------

    def to_csv(self, path):
        """One row per sample; pixel-mode frames are base64-encoded float64 blobs."""
        s, o, r, s2, tau, init, newep = self.arrays()
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            if self.obs_mode == "pixel":
                obs_cols = ["s_b64", "s_next_b64"]
            else:
                obs_cols = [f"s_{i}" for i in range(self.obs_dim)] + \
                           [f"s_next_{i}" for i in range(self.obs_dim)]
            w.writerow(obs_cols + ["o", "r_gamma", "tau"] +
                       [f"init_{i}" for i in range(self.n_options)] + ["new_episode"])
            for i in range(len(self)):
                if self.obs_mode == "pixel":
                    obs = [base64.b64encode(s[i].tobytes()).decode("ascii"),
                           base64.b64encode(s2[i].tobytes()).decode("ascii")]
                else:
                    obs = [repr(float(x)) for x in s[i]] + [repr(float(x)) for x in s2[i]]
                w.writerow(obs + [int(o[i]), repr(float(r[i])), int(tau[i])] +
                           [int(b) for b in init[i]] + [int(newep[i])])


def slice_pairs(dataset: TransitionDataset):
    """Consecutive-pair views for reward/duration learning.

    Returns (prev_s, prev_o, s, o, r_gamma, tau, has_prev): row i pairs sample
    i with its predecessor in the same episode (prev_s is where the previous
    option started); episode-opening samples get has_prev = False and should
    be fed the sentinel context.
    """
    s, o, r, s2, tau, init, newep = dataset.arrays()
    n = len(dataset)
    prev_s = np.zeros_like(s)
    prev_o = np.zeros(n, dtype=np.int64)
    has_prev = np.zeros(n, dtype=bool)
    for i in range(n):
        if i > 0 and not newep[i]:
            prev_s[i] = s[i - 1]
            prev_o[i] = o[i - 1]
            has_prev[i] = True
    return prev_s, prev_o, s, o, r, tau, has_prev
