"""Hand-written MLP with batch normalization, trained by plain SGD.

Hidden blocks are Dense -> BatchNorm -> ReLU; the output layer is a linear
Dense. Everything is float64. Backprop is derived by hand and checked
against central finite differences in the test suite.
"""
from __future__ import annotations

import copy
import io
import json
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

WEIGHTS_MAGIC = b"DRLOCWT\x00"
WEIGHTS_VERSION = 1


class DegenerateBatch(ValueError):
    pass


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.001

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")


class Dense:
    def __init__(self, weights: np.ndarray, biases: np.ndarray):
        if weights.ndim != 2 or biases.shape != (weights.shape[0],):
            raise ValueError(f"dense shapes inconsistent: W{weights.shape}, b{biases.shape}")
        self.weights = np.asarray(weights, dtype=np.float64)
        self.biases = np.asarray(biases, dtype=np.float64)

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]


class BatchNorm:
    def __init__(self, features: int, momentum: float = 0.99, epsilon: float = 1e-5):
        if not 0 < momentum < 1:
            raise ValueError("momentum must be in (0, 1)")
        self.gamma = np.ones(features)
        self.beta = np.zeros(features)
        self.running_mean = np.zeros(features)
        self.running_var = np.ones(features)
        self.momentum = momentum
        self.epsilon = epsilon

    def forward(self, h: np.ndarray, train: bool, update_stats: bool = True):
        if train:
            mu = h.mean(axis=0)
            var = h.var(axis=0)
            if update_stats:
                m = self.momentum
                self.running_mean = m * self.running_mean + (1.0 - m) * mu
                self.running_var = m * self.running_var + (1.0 - m) * var
        else:
            mu, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (h - mu) * inv_std
        return self.gamma * xhat + self.beta, (xhat, inv_std)

    def backward(self, dout: np.ndarray, cache):
        # batch-statistics path
        xhat, inv_std = cache
        n = dout.shape[0]
        dgamma = (dout * xhat).sum(axis=0)
        dbeta = dout.sum(axis=0)
        dxhat = dout * self.gamma
        dh = inv_std / n * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
        return dh, dgamma, dbeta


class Mlp:
    """Parameters in declared order: per hidden block W, b, gamma, beta; then output W, b."""

    def __init__(self, dense: Sequence[Dense], norms: Sequence[BatchNorm]):
        if len(norms) != len(dense) - 1:
            raise ValueError("need one batch-norm layer per hidden dense layer")
        for a, b in zip(dense, dense[1:]):
            if a.fan_out != b.fan_in:
                raise ValueError(f"layer dims do not chain: {a.fan_out} -> {b.fan_in}")
        for d, bn in zip(dense, norms):
            if bn.gamma.shape != (d.fan_out,):
                raise ValueError("batch-norm width must match its dense layer")
        self.dense = list(dense)
        self.norms = list(norms)
        self._cache = None

    @property
    def dims(self) -> list[int]:
        return [self.dense[0].fan_in] + [d.fan_out for d in self.dense]

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    @property
    def output_dim(self) -> int:
        return self.dims[-1]

    def params(self) -> list[np.ndarray]:
        out = []
        for d, bn in zip(self.dense, self.norms):
            out += [d.weights, d.biases, bn.gamma, bn.beta]
        out += [self.dense[-1].weights, self.dense[-1].biases]
        return out

    def buffers(self) -> list[np.ndarray]:
        out = []
        for bn in self.norms:
            out += [bn.running_mean, bn.running_var]
        return out

    def forward(self, x: np.ndarray, train: bool = False, update_stats: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"input width mismatch: expected (batch, {self.input_dim}), got {x.shape}")
        if train and self.norms and x.shape[0] < 2:
            raise DegenerateBatch("degenerate batch statistics: train mode needs batch size >= 2")
        cache = []
        h = x
        for d, bn in zip(self.dense, self.norms):
            z = h @ d.weights.T + d.biases
            zn, bn_cache = bn.forward(z, train, update_stats)
            a = np.maximum(zn, 0.0)
            cache.append((h, bn_cache, zn))
            h = a
        out = h @ self.dense[-1].weights.T + self.dense[-1].biases
        if train:
            cache.append(h)
            self._cache = cache
        return out

    def backward(self, dout: np.ndarray) -> list[np.ndarray]:
        """Gradients of the upstream loss wrt ``params()``; needs a prior train-mode forward."""
        if self._cache is None:
            raise RuntimeError("backward needs a train-mode forward first")
        cache = self._cache
        h_last = cache[-1]
        last = self.dense[-1]
        grads_out = [dout.T @ h_last, dout.sum(axis=0)]
        g = dout @ last.weights
        grads: list[list[np.ndarray]] = []
        for d, bn, (h_in, bn_cache, zn) in reversed(list(zip(self.dense, self.norms, cache[:-1]))):
            g = g * (zn > 0.0)
            dz, dgamma, dbeta = bn.backward(g, bn_cache)
            grads.append([dz.T @ h_in, dz.sum(axis=0), dgamma, dbeta])
            g = dz @ d.weights
        flat = [a for block in reversed(grads) for a in block]
        return flat + grads_out


def init_parameters(
    dims: Sequence[int], rng: np.random.Generator, momentum: float = 0.99, epsilon: float = 1e-5
) -> Mlp:
    """Glorot-uniform weights, zero biases, identity batch norm."""
    if len(dims) < 2 or any(int(d) < 1 for d in dims):
        raise ValueError(f"invalid layer dims {list(dims)}")
    dense, norms = [], []
    for k, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        dense.append(Dense(rng.uniform(-lim, lim, size=(fan_out, fan_in)), np.zeros(fan_out)))
        if k < len(dims) - 2:
            norms.append(BatchNorm(fan_out, momentum, epsilon))
    return Mlp(dense, norms)


def q_network(n_gateways: int, rng: np.random.Generator, hidden: int = 200, n_actions: int = 9) -> Mlp:
    return init_parameters([2 + n_gateways, hidden, hidden, n_actions], rng)


def forward(net: Mlp, batch: np.ndarray, mode: str = "infer") -> np.ndarray:
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    return net.forward(batch, train=(mode == "train"))


def loss_and_grad(
    net: Mlp, batch: np.ndarray, actions, targets, update_stats: bool = True
) -> tuple[float, list[np.ndarray]]:
    """Mean squared error between targets and the Q-value of each row's taken action."""
    actions = np.asarray(actions, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.float64)
    if not (len(batch) == len(actions) == len(targets)):
        raise ValueError(f"misaligned lengths: batch {len(batch)}, actions {len(actions)}, targets {len(targets)}")
    q = net.forward(batch, train=True, update_stats=update_stats)
    rows = np.arange(len(actions))
    err = q[rows, actions] - targets
    loss = float(np.mean(err**2))
    dq = np.zeros_like(q)
    dq[rows, actions] = 2.0 * err / len(err)
    return loss, net.backward(dq)


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_and_grad(
    net: Mlp, batch: np.ndarray, labels, update_stats: bool = True
) -> tuple[float, list[np.ndarray]]:
    """Mean softmax cross-entropy over class scores."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(batch) != len(labels):
        raise ValueError(f"misaligned lengths: batch {len(batch)}, labels {len(labels)}")
    z = net.forward(batch, train=True, update_stats=update_stats)
    zs = z - z.max(axis=1, keepdims=True)
    logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
    rows = np.arange(len(labels))
    loss = float(-logp[rows, labels].mean())
    dz = np.exp(logp)
    dz[rows, labels] -= 1.0
    return loss, net.backward(dz / len(labels))


def sgd_update(net: Mlp, grads: Sequence[np.ndarray], cfg: SgdConfig = SgdConfig()) -> Mlp:
    params = net.params()
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise ValueError("gradient shapes do not match parameter shapes")
    for p, g in zip(params, grads):
        p -= cfg.learning_rate * g
    return net


def clone_parameters(net: Mlp) -> Mlp:
    out = copy.deepcopy(net)
    out._cache = None
    return out


def copy_into(dst: Mlp, src: Mlp) -> None:
    """Overwrite ``dst`` parameters and running stats with ``src``'s, in place."""
    for a, b in zip(dst.params() + dst.buffers(), src.params() + src.buffers()):
        a[...] = b


# -- weights file -----------------------------------------------------------
#
# magic "DRLOCWT\0" | u32 version | u32 header length | JSON header (utf-8)
# | float64 little-endian arrays in params() order, then buffers() order.


def weights_bytes(net: Mlp, kind: str = "qnet", extra: dict | None = None) -> bytes:
    header = {
        "format_version": WEIGHTS_VERSION,
        "kind": kind,
        "dims": net.dims,
        "activation": "relu",
        "batchnorm": {"momentum": net.norms[0].momentum if net.norms else 0.99,
                      "epsilon": net.norms[0].epsilon if net.norms else 1e-5},
        "extra": extra or {},
    }
    hb = json.dumps(header, sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(WEIGHTS_MAGIC)
    buf.write(struct.pack("<II", WEIGHTS_VERSION, len(hb)))
    buf.write(hb)
    for a in net.params() + net.buffers():
        buf.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return buf.getvalue()


def weights_from_bytes(data: bytes) -> tuple[Mlp, dict]:
    if data[:8] != WEIGHTS_MAGIC:
        raise ValueError("not a weights file (bad magic)")
    version, hlen = struct.unpack_from("<II", data, 8)
    if version != WEIGHTS_VERSION:
        raise ValueError(f"weights format version {version}, expected {WEIGHTS_VERSION}")
    header = json.loads(data[16 : 16 + hlen])
    if header.get("activation") != "relu":
        raise ValueError(f"unsupported activation {header.get('activation')!r}")
    bn = header["batchnorm"]
    net = init_parameters(header["dims"], np.random.default_rng(0), bn["momentum"], bn["epsilon"])
    off = 16 + hlen
    for a in net.params() + net.buffers():
        nbytes = a.size * 8
        if off + nbytes > len(data):
            raise ValueError("weights file truncated")
        a[...] = np.frombuffer(data, dtype="<f8", count=a.size, offset=off).reshape(a.shape)
        off += nbytes
    if off != len(data):
        raise ValueError("trailing bytes in weights file")
    return net, header


def save_weights(path, net: Mlp, kind: str = "qnet", extra: dict | None = None) -> None:
    with open(path, "wb") as f:
        f.write(weights_bytes(net, kind, extra))


def load_weights(path) -> tuple[Mlp, dict]:
    with open(path, "rb") as f:
        return weights_from_bytes(f.read())
