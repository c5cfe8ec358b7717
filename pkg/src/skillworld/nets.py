"""MLPs, the mixture-of-Gaussians density head, and parameter checkpoints."""

import hashlib
import json

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, LOG_2PI

STD_FLOOR = 1e-4

_ACTIVATIONS = {"relu": ad.relu, "silu": ad.silu}
_ACTIVATIONS_NP = {
    "relu": lambda x: np.maximum(x, 0.0),
    "silu": lambda x: x / (1.0 + np.exp(-x)),
}


class MLP:
    """Fully connected network; He-scaled init, relu or silu hidden activations."""

    def __init__(self, in_dim, hidden, out_dim, rng, activation="relu", name="mlp"):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.activation = activation
        self.name = name
        dims = [in_dim] + list(hidden) + [out_dim]
        self.weights = []
        self.biases = []
        for i in range(len(dims) - 1):
            scale = np.sqrt(2.0 / dims[i])
            self.weights.append(Tensor(rng.standard_normal((dims[i], dims[i + 1])) * scale))
            self.biases.append(Tensor(np.zeros(dims[i + 1])))

    def forward(self, x: Tensor) -> Tensor:
        act = _ACTIVATIONS[self.activation]
        h = x
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = ad.add(ad.matmul(h, w), b)
            if i < len(self.weights) - 1:
                h = act(h)
        return h

    def forward_np(self, x: np.ndarray) -> np.ndarray:
        """Graph-free forward pass on the current parameter values."""
        act = _ACTIVATIONS_NP[self.activation]
        h = np.asarray(x, dtype=np.float64)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.values + b.values
            if i < len(self.weights) - 1:
                h = act(h)
        return h

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def named_params(self):
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{self.name}.w{i}"] = w
            out[f"{self.name}.b{i}"] = b
        return out


def _split_mog(out: Tensor, n_components: int, dim: int):
    C, D = n_components, dim
    logits = ad.slice_last(out, 0, C)
    means = ad.reshape(ad.slice_last(out, C, C + C * D), (-1, C, D))
    raw = ad.reshape(ad.slice_last(out, C + C * D, C + 2 * C * D), (-1, C, D))
    stds = ad.add_scalar(ad.softplus(raw), STD_FLOOR)
    return logits, means, stds


class MoGHead:
    """Conditional mixture of diagonal Gaussians (4 components by default).

    An MLP trunk maps the context to mixture logits, means, and raw stds;
    stds are softplus-shifted above a 1e-4 floor.
    """

    def __init__(self, ctx_dim, dim, rng, n_components=4, hidden=(128, 128),
                 activation="relu", name="mog"):
        self.dim = dim
        self.n_components = n_components
        self.trunk = MLP(ctx_dim, hidden, n_components * (1 + 2 * dim), rng,
                         activation=activation, name=f"{name}.trunk")

    def log_prob(self, ctx: Tensor, target: Tensor) -> Tensor:
        """Per-row log density of target under the mixture; shape (B,).

        logsumexp over components of (log weight + diagonal Gaussian log
        density), computed in log space throughout.
        """
        if target.shape[-1] != self.dim:
            raise ValueError(f"target dim {target.shape[-1]} != head dim {self.dim}")
        C, D = self.n_components, self.dim
        logits, means, stds = _split_mog(self.trunk.forward(ctx), C, D)
        tgt = ad.expand_component(target, C)                       # (B, C, D)
        zs = ad.div(ad.sub(tgt, means), stds)
        quad = ad.mul_scalar(ad.sum_last(ad.square(zs)), -0.5)     # (B, C)
        logdet = ad.neg(ad.sum_last(ad.log(stds)))                 # (B, C)
        comp = ad.add_scalar(ad.add(quad, logdet), -0.5 * D * LOG_2PI)
        logmix = ad.sub(logits, ad.expand_last(ad.logsumexp_last(logits), C))
        return ad.logsumexp_last(ad.add(comp, logmix))             # (B,)

    def sample(self, ctx: Tensor, rng: np.random.Generator) -> Tensor:
        """Reparameterized draw: component from the mixture weights, then
        mean + std * eps; the pathwise gradient flows through mean and std."""
        C, D = self.n_components, self.dim
        logits, means, stds = _split_mog(self.trunk.forward(ctx), C, D)
        B = logits.shape[0]
        lv = logits.values
        w = np.exp(lv - lv.max(axis=1, keepdims=True))
        w /= w.sum(axis=1, keepdims=True)
        u = rng.random(B)
        comp = (np.cumsum(w, axis=1) < u[:, None]).sum(axis=1)
        comp = np.minimum(comp, C - 1)
        eps = rng.standard_normal((B, D))
        mean_k = ad.take_component(means, comp)
        std_k = ad.take_component(stds, comp)
        return ad.add(mean_k, ad.mul(std_k, Tensor(eps)))

    def mixture_params_np(self, ctx: np.ndarray):
        """Graph-free (weights, means, stds) for a batch of contexts."""
        C, D = self.n_components, self.dim
        out = self.trunk.forward_np(ctx)
        logits = out[:, :C]
        means = out[:, C:C + C * D].reshape(-1, C, D)
        raw = out[:, C + C * D:].reshape(-1, C, D)
        stds = np.logaddexp(0.0, raw) + STD_FLOOR
        w = np.exp(logits - logits.max(axis=1, keepdims=True))
        w /= w.sum(axis=1, keepdims=True)
        return w, means, stds

    def sample_np(self, ctx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        w, means, stds = self.mixture_params_np(ctx)
        B = w.shape[0]
        u = rng.random(B)
        comp = (np.cumsum(w, axis=1) < u[:, None]).sum(axis=1)
        comp = np.minimum(comp, self.n_components - 1)
        rows = np.arange(B)
        eps = rng.standard_normal((B, self.dim))
        return means[rows, comp] + stds[rows, comp] * eps

    def params(self):
        return self.trunk.params()

    def named_params(self):
        return self.trunk.named_params()


# -- checkpoints -----------------------------------------------------------------


def save_checkpoint(path, named_arrays: dict, meta: dict | None = None):
    """Single-file checkpoint: JSON manifest line, then little-endian float64 blobs.

    The manifest lists layer names and shapes in order plus a sha256 of the
    binary section, so identical parameters give identical files. An optional
    meta dict rides along in the manifest.
    """
    names = list(named_arrays.keys())
    blob = b"".join(np.ascontiguousarray(named_arrays[n], dtype="<f8").tobytes()
                    for n in names)
    manifest = {
        "layers": [{"name": n, "shape": list(np.shape(named_arrays[n]))} for n in names],
        "dtype": "<f8",
        "checksum": hashlib.sha256(blob).hexdigest(),
    }
    if meta is not None:
        manifest["meta"] = meta
    with open(path, "wb") as f:
        f.write(json.dumps(manifest).encode("utf-8"))
        f.write(b"\n")
        f.write(blob)


def load_checkpoint(path, with_meta: bool = False):
    with open(path, "rb") as f:
        manifest = json.loads(f.readline().decode("utf-8"))
        blob = f.read()
    if hashlib.sha256(blob).hexdigest() != manifest["checksum"]:
        raise ValueError(f"checkpoint {path} is corrupt (checksum mismatch)")
    out = {}
    offset = 0
    for layer in manifest["layers"]:
        shape = tuple(layer["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        out[layer["name"]] = arr.reshape(shape).astype(np.float64)
        offset += count * 8
    if with_meta:
        return out, manifest.get("meta")
    return out


def checkpoint_checksum(named_arrays: dict) -> str:
    blob = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                    for a in named_arrays.values())
    return hashlib.sha256(blob).hexdigest()
