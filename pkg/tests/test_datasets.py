import csv

import numpy as np
import pytest

from skillworld.datasets import TransitionDataset, TransitionSample, slice_pairs


def make_sample(rng, obs_dim=4, n_options=4, o=None, tau=3):
    o = int(rng.integers(n_options)) if o is None else o
    init = rng.random(n_options) < 0.7
    init[o] = True
    return TransitionSample(s=rng.random(obs_dim), o=o, r_gamma=float(rng.normal()),
                            s_next=rng.random(obs_dim), tau=tau, initiation=init)


class TestContainer:
    def test_append_and_arrays(self):
        rng = np.random.default_rng(0)
        ds = TransitionDataset(4, 4)
        for i in range(10):
            ds.append(make_sample(rng), new_episode=(i % 5 == 0))
        s, o, r, s2, tau, init, newep = ds.arrays()
        assert s.shape == (10, 4) and init.shape == (10, 4)
        assert newep.sum() == 2

    def test_rejects_bad_tau(self):
        rng = np.random.default_rng(1)
        ds = TransitionDataset(4, 4)
        sample = make_sample(rng, tau=0)
        with pytest.raises(ValueError):
            ds.append(sample, new_episode=True)

    def test_rejects_unavailable_executed_option(self):
        rng = np.random.default_rng(2)
        ds = TransitionDataset(4, 4)
        s = make_sample(rng, o=1)
        s.initiation[1] = False
        with pytest.raises(ValueError):
            ds.append(s, new_episode=True)


class TestBinaryFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        ds = TransitionDataset(4, 4)
        for i in range(25):
            ds.append(make_sample(rng), new_episode=(i % 7 == 0))
        path = tmp_path / "d.bin"
        ds.save(path)
        loaded = TransitionDataset.load(path)
        for a, b in zip(ds.arrays(), loaded.arrays()):
            assert (a == b).all()
        assert loaded.obs_mode == ds.obs_mode

    def test_header_fields(self, tmp_path):
        import json
        ds = TransitionDataset(4, 4, obs_mode="state")
        path = tmp_path / "d.bin"
        ds.save(path)
        with open(path, "rb") as f:
            header = json.loads(f.readline())
        assert header["obs_mode"] == "state"
        assert header["n"] == 0
        assert header["schema_version"] == 1


class TestCSVExport:
    def test_state_mode_parse_back(self, tmp_path):
        rng = np.random.default_rng(4)
        ds = TransitionDataset(4, 4)
        for i in range(8):
            ds.append(make_sample(rng), new_episode=(i == 0))
        path = tmp_path / "d.csv"
        ds.to_csv(path)
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        s = ds.arrays()[0]
        for i, row in enumerate(rows):
            for j in range(4):
                assert float(row[f"s_{j}"]) == s[i, j]

    def test_pixel_mode_base64(self, tmp_path):
        import base64
        rng = np.random.default_rng(5)
        ds = TransitionDataset(9, 2, obs_mode="pixel")
        init = np.array([True, True])
        ds.append(TransitionSample(s=rng.random(9), o=0, r_gamma=-1.0,
                                   s_next=rng.random(9), tau=2, initiation=init),
                  new_episode=True)
        path = tmp_path / "p.csv"
        ds.to_csv(path)
        with open(path, newline="") as f:
            row = list(csv.DictReader(f))[0]
        decoded = np.frombuffer(base64.b64decode(row["s_b64"]), dtype=np.float64)
        assert (decoded == ds.arrays()[0][0]).all()


class TestSlicePairs:
    def test_episode_boundaries_respected(self):
        rng = np.random.default_rng(6)
        ds = TransitionDataset(4, 4)
        for i in range(6):
            ds.append(make_sample(rng), new_episode=(i in (0, 3)))
        prev_s, prev_o, s, o, r, tau, has_prev = slice_pairs(ds)
        assert not has_prev[0] and not has_prev[3]
        assert has_prev[1] and has_prev[2] and has_prev[4] and has_prev[5]
        all_s = ds.arrays()[0]
        all_o = ds.arrays()[1]
        assert (prev_s[1] == all_s[0]).all()
        assert prev_o[2] == all_o[1]
