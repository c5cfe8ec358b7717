import numpy as np
import pytest

from skillworld import autodiff as ad
from skillworld.autodiff import Tensor
from skillworld.nets import (
    MLP,
    MoGHead,
    STD_FLOOR,
    checkpoint_checksum,
    load_checkpoint,
    save_checkpoint,
)
from test_autodiff import check_gradients


class TestMLP:
    def test_forward_np_matches_graph(self):
        rng = np.random.default_rng(0)
        mlp = MLP(3, [8, 8], 2, rng)
        x = rng.standard_normal((5, 3))
        assert np.allclose(mlp.forward(Tensor(x)).values, mlp.forward_np(x), atol=1e-14)

    def test_gradients(self):
        rng = np.random.default_rng(1)
        mlp = MLP(3, [6], 2, rng)
        x = Tensor(rng.standard_normal((4, 3)))
        check_gradients(lambda: ad.mean_all(ad.square(mlp.forward(x))), mlp.params())

    def test_silu_variant(self):
        rng = np.random.default_rng(2)
        mlp = MLP(4, [6], 2, rng, activation="silu")
        x = Tensor(rng.standard_normal((3, 4)))
        check_gradients(lambda: ad.mean_all(ad.square(mlp.forward(x))), mlp.params())

    def test_unknown_activation(self):
        with pytest.raises(ValueError):
            MLP(2, [4], 1, np.random.default_rng(0), activation="tanhh")


class TestMoGLogProb:
    def test_single_component_peak(self):
        # push all weight to one component with unit std and target at its mean:
        # density = 1/sqrt(2*pi)
        rng = np.random.default_rng(3)
        head = MoGHead(2, 1, rng, hidden=(8,))
        ctx = np.zeros((1, 2))
        out = head.trunk.forward_np(ctx)[0]
        C = head.n_components
        # solve for trunk bias so logits favor comp 0 and its params are (mean 0, std 1)
        final_b = head.trunk.biases[-1]
        final_b.values[:C] += np.array([50.0, 0, 0, 0]) - out[:C]
        final_b.values[C:2 * C] += -out[C:2 * C]           # means 0
        raw_for_unit = np.log(np.expm1(1.0 - STD_FLOOR))   # softplus^-1(1 - floor)
        final_b.values[2 * C:] += raw_for_unit - out[2 * C:]
        ll = head.log_prob(Tensor(ctx), Tensor(np.zeros((1, 1)))).values[0]
        assert ll == pytest.approx(np.log(1.0 / np.sqrt(2 * np.pi)), abs=1e-6)

    def test_matches_direct_summation(self):
        rng = np.random.default_rng(4)
        head = MoGHead(3, 2, rng, hidden=(8,))
        ctx = rng.standard_normal((6, 3))
        tgt = rng.standard_normal((6, 2))
        ll = head.log_prob(Tensor(ctx), Tensor(tgt)).values
        w, means, stds = head.mixture_params_np(ctx)
        for i in range(6):
            dens = 0.0
            for c in range(4):
                q = np.prod(np.exp(-0.5 * ((tgt[i] - means[i, c]) / stds[i, c]) ** 2))
                q /= np.prod(stds[i, c]) * (2 * np.pi)
                dens += w[i, c] * q
            assert ll[i] == pytest.approx(np.log(dens), abs=1e-10)

    def test_gradients(self):
        rng = np.random.default_rng(5)
        head = MoGHead(2, 2, rng, hidden=(6,))
        ctx = Tensor(rng.standard_normal((4, 2)))
        tgt = Tensor(rng.standard_normal((4, 2)))
        check_gradients(lambda: ad.neg(ad.mean_all(head.log_prob(ctx, tgt))),
                        head.params())

    def test_dimension_mismatch(self):
        head = MoGHead(2, 2, np.random.default_rng(0), hidden=(6,))
        with pytest.raises(ValueError):
            head.log_prob(Tensor(np.zeros((2, 2))), Tensor(np.zeros((2, 3))))


class TestMoGSample:
    def test_degenerate_std_returns_mean(self):
        rng = np.random.default_rng(6)
        head = MoGHead(2, 2, rng, hidden=(8,))
        # force stds to the floor
        C, D = head.n_components, head.dim
        head.trunk.biases[-1].values[C + C * D:] = -40.0
        head.trunk.weights[-1].values[:, C + C * D:] = 0.0
        ctx = rng.standard_normal((64, 2))
        w, means, stds = head.mixture_params_np(ctx)
        assert stds.max() <= STD_FLOOR * 1.001
        draws = head.sample_np(ctx, np.random.default_rng(0))
        rows = np.arange(64)
        best = np.abs(draws[:, None, :] - means).max(axis=2).min(axis=1)
        assert best.max() < 5 * STD_FLOOR

    def test_component_frequencies(self):
        rng = np.random.default_rng(7)
        head = MoGHead(1, 1, rng, hidden=(8,))
        ctx = np.zeros((10**5, 1))
        w, means, stds = head.mixture_params_np(ctx[:1])
        # separate the means so draws are attributable
        C = head.n_components
        head.trunk.biases[-1].values[C:2 * C] = np.array([-30.0, -10.0, 10.0, 30.0]) - \
            head.trunk.forward_np(ctx[:1])[0, C:2 * C] + head.trunk.biases[-1].values[C:2 * C]
        w, means, stds = head.mixture_params_np(ctx[:1])
        draws = head.sample_np(ctx, np.random.default_rng(1))
        centers = means[0, :, 0]
        assign = np.argmin(np.abs(draws - centers[None, :]), axis=1)
        freq = np.bincount(assign, minlength=4) / len(draws)
        assert np.max(np.abs(freq - w[0])) < 0.01

    def test_sample_mean_clt(self):
        rng = np.random.default_rng(8)
        head = MoGHead(1, 1, rng, hidden=(8,))
        ctx = np.zeros((10**5, 1))
        w, means, stds = head.mixture_params_np(ctx[:1])
        mean_true = float((w[0] * means[0, :, 0]).sum())
        var_comp = float((w[0] * (stds[0, :, 0] ** 2 + means[0, :, 0] ** 2)).sum()
                         - mean_true ** 2)
        draws = head.sample_np(ctx, np.random.default_rng(2))
        se = np.sqrt(var_comp / len(draws))
        assert abs(draws.mean() - mean_true) < 3 * se + 1e-12

    def test_reparameterized_gradients(self):
        rng = np.random.default_rng(9)
        head = MoGHead(2, 1, rng, hidden=(6,))
        ctx = Tensor(rng.standard_normal((4, 2)))
        sample_rng = np.random.default_rng(11)
        state = sample_rng.bit_generator.state

        def loss_fn():
            sample_rng.bit_generator.state = state
            return ad.mean_all(ad.square(head.sample(ctx, sample_rng)))

        check_gradients(loss_fn, head.params())


class TestCheckpoints:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(10)
        named = {"a.w": rng.standard_normal((3, 2)), "b": rng.standard_normal(5)}
        path = tmp_path / "ck.bin"
        save_checkpoint(path, named, meta={"note": 1})
        loaded, meta = load_checkpoint(path, with_meta=True)
        assert meta == {"note": 1}
        for k in named:
            assert (loaded[k] == named[k]).all()

    def test_corruption_detected(self, tmp_path):
        path = tmp_path / "ck.bin"
        save_checkpoint(path, {"x": np.arange(4.0)})
        raw = path.read_bytes()
        path.write_bytes(raw[:-1] + bytes([raw[-1] ^ 1]))
        with pytest.raises(ValueError):
            load_checkpoint(path)

    def test_checksum_sensitivity(self):
        a = {"x": np.arange(4.0)}
        b = {"x": np.arange(4.0)}
        assert checkpoint_checksum(a) == checkpoint_checksum(b)
        b["x"] = b["x"] + 1e-15
        assert checkpoint_checksum(a) != checkpoint_checksum(b)
