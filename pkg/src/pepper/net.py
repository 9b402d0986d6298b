"""Feed-forward policy/value networks with exact backpropagation and Adam.

Four architectures share one parameter container. The "parts" variants
route the three feature sections (global 17, piece-centric 208,
square-centric 128) through separate first-layer blocks before a concat;
the "full" variants use one dense 353-wide first layer. "policy-val"
variants share the first stage between the policy and value heads;
"separate" variants duplicate it. Hidden activations are ReLU, the policy
head ends in a masked softmax over legal moves, the value head in tanh.

All training math is double precision so finite-difference gradient
checks are meaningful.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .features import N_FEATURES, POLICY_SIZE

ARCHITECTURES = ("policy-val-parts", "policy-val-full", "separate-parts", "separate-full")

_PARTS = lambda prefix: (
    (prefix + "g", 17, 32),
    (prefix + "p", 208, 512),
    (prefix + "q", 128, 480),
)
_POLICY_HEAD = (("policy_hidden", 1024, 2048), ("policy_out", 2048, POLICY_SIZE))
_VALUE_HEAD = (("value_hidden", 1024, 512), ("value_out", 512, 1))

ARCH_LAYERS: Dict[str, Tuple[Tuple[str, int, int], ...]] = {
    "policy-val-parts": _PARTS("") + _POLICY_HEAD + _VALUE_HEAD,
    "policy-val-full": (("full", N_FEATURES, 1024),) + _POLICY_HEAD + _VALUE_HEAD,
    "separate-parts": _PARTS("pol_") + _POLICY_HEAD + _PARTS("val_") + _VALUE_HEAD,
    "separate-full": (("pol_full", N_FEATURES, 1024),) + _POLICY_HEAD
                     + (("val_full", N_FEATURES, 1024),) + _VALUE_HEAD,
}

# First-stage layer names feeding each head, per architecture.
_POLICY_STAGE = {
    "policy-val-parts": ("g", "p", "q"),
    "policy-val-full": ("full",),
    "separate-parts": ("pol_g", "pol_p", "pol_q"),
    "separate-full": ("pol_full",),
}
_VALUE_STAGE = {
    "policy-val-parts": ("g", "p", "q"),
    "policy-val-full": ("full",),
    "separate-parts": ("val_g", "val_p", "val_q"),
    "separate-full": ("val_full",),
}

_SECTION_SLICES = (slice(0, 17), slice(17, 225), slice(225, 353))


class WeightsFormatError(ValueError):
    """Weights file is corrupt or does not match the expected architecture."""


class NetworkParams:
    """Weights and biases for one architecture, keyed by layer name."""

    def __init__(self, arch: str, layers: Dict[str, list]):
        if arch not in ARCH_LAYERS:
            raise ValueError(f"unknown architecture {arch!r}")
        self.arch = arch
        self.layers = layers

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.arch, {k: [w.copy(), b.copy()] for k, (w, b) in self.layers.items()})

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in self.layers.values())

    def allclose(self, other: "NetworkParams") -> bool:
        return self.arch == other.arch and all(
            np.array_equal(w, ow) and np.array_equal(b, ob)
            for (w, b), (ow, ob) in ((self.layers[k], other.layers[k]) for k in self.layers)
        )


def init_params(arch: str, seed: int) -> NetworkParams:
    """He-initialized weights (std sqrt(2/fan_in)), zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    layers = {}
    for name, fan_in, fan_out in ARCH_LAYERS[arch]:
        w = rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
        layers[name] = [w, np.zeros(fan_out)]
    return NetworkParams(arch, layers)


@dataclass
class NetworkOutput:
    policy: np.ndarray  # (5120,) or (B, 5120); exact zeros on unset mask bits
    value: np.ndarray   # scalar or (B,)


@dataclass
class LossBreakdown:
    total: float
    value_mse: float
    policy_ce: float
    l2: float


def _masked_log_softmax(logits: np.ndarray, mask: np.ndarray):
    """(probabilities, log-probabilities) over set mask bits; exact zeros elsewhere."""
    if not mask.any(axis=1).all():
        raise ValueError("legal mask has a row with no set bits")
    z = np.where(mask, logits, -np.inf)
    mx = z.max(axis=1, keepdims=True)
    e = np.exp(z - mx)
    s = e.sum(axis=1, keepdims=True)
    return e / s, z - (mx + np.log(s))


def _first_stage(params: NetworkParams, names, X, cache):
    """Dense+ReLU over the full input or the three feature sections, concatenated."""
    if len(names) == 1:
        w, b = params.layers[names[0]]
        pre = X @ w + b
        act = np.maximum(pre, 0.0)
        cache["pre_" + names[0]] = pre
        return act
    acts = []
    for name, sl in zip(names, _SECTION_SLICES):
        w, b = params.layers[name]
        pre = X[:, sl] @ w + b
        cache["pre_" + name] = pre
        acts.append(np.maximum(pre, 0.0))
    return np.concatenate(acts, axis=1)


def forward(params: NetworkParams, x: np.ndarray, mask: np.ndarray):
    """Evaluate the network. Returns (NetworkOutput, trace for backward/loss).

    Accepts a single feature vector with its mask, or batches of each.
    """
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    M = np.asarray(mask, dtype=bool)
    if M.ndim == 1:
        M = M[None, :]
    if X.shape[1] != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES} features, got {X.shape[1]}")
    if not np.isfinite(X).all():
        raise ValueError("non-finite feature input")

    cache = {"X": X, "mask": M, "single": single, "arch": params.arch}

    h_pol = _first_stage(params, _POLICY_STAGE[params.arch], X, cache)
    cache["h_pol"] = h_pol
    w, b = params.layers["policy_hidden"]
    pre_ph = h_pol @ w + b
    act_ph = np.maximum(pre_ph, 0.0)
    cache["pre_policy_hidden"] = pre_ph
    cache["act_policy_hidden"] = act_ph
    w, b = params.layers["policy_out"]
    logits = act_ph @ w + b
    cache["logits"] = logits

    shared = _VALUE_STAGE[params.arch] == _POLICY_STAGE[params.arch]
    if shared:
        h_val = h_pol
    else:
        h_val = _first_stage(params, _VALUE_STAGE[params.arch], X, cache)
    cache["h_val"] = h_val
    w, b = params.layers["value_hidden"]
    pre_vh = h_val @ w + b
    act_vh = np.maximum(pre_vh, 0.0)
    cache["pre_value_hidden"] = pre_vh
    cache["act_value_hidden"] = act_vh
    w, b = params.layers["value_out"]
    u = (act_vh @ w + b)[:, 0]
    value = np.tanh(u)
    cache["value"] = value

    probs, _ = _masked_log_softmax(logits, M)
    if single:
        return NetworkOutput(probs[0], float(value[0])), cache
    return NetworkOutput(probs, value), cache


def l2_norm_sq(params: NetworkParams) -> float:
    """Sum of squared weight-matrix entries (biases excluded)."""
    return float(sum(np.sum(w * w) for w, _ in params.layers.values()))


def _prepare_targets(cache, target_pi, z):
    M = cache["mask"]
    P = np.asarray(target_pi, dtype=np.float64)
    if P.ndim == 1:
        P = P[None, :]
    Z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if P.shape != cache["logits"].shape or Z.shape[0] != P.shape[0]:
        raise ValueError("target shapes do not match the forward trace")
    if (P[~M] != 0).any():
        raise ValueError("target policy places mass on masked-out moves")
    return M, P, Z


def loss(cache, target_pi, z, lam: float, params: NetworkParams) -> LossBreakdown:
    """J = (v - z)^2 - pi^T log softmax(legal logits) + lam * ||W||^2.

    MSE and cross entropy are batch means; the L2 term is over weights only.
    """
    M, P, Z = _prepare_targets(cache, target_pi, z)
    _, logp = _masked_log_softmax(cache["logits"], M)
    ce = float(-(P * np.where(M, logp, 0.0)).sum(axis=1).mean())
    mse = float(((cache["value"] - Z) ** 2).mean())
    l2 = l2_norm_sq(params)
    return LossBreakdown(mse + ce + lam * l2, mse, ce, l2)


def backward(cache, target_pi, z, lam: float, params: NetworkParams) -> Dict[str, list]:
    """Exact gradients of J w.r.t. every parameter, keyed like params.layers."""
    M, P, Z = _prepare_targets(cache, target_pi, z)
    B = P.shape[0]
    arch = cache["arch"]
    grads = {name: [None, None] for name in params.layers}

    probs, _ = _masked_log_softmax(cache["logits"], M)
    dlogits = np.where(M, probs - P, 0.0) / B

    v = cache["value"]
    du = (2.0 * (v - Z) / B) * (1.0 - v * v)  # through tanh

    def dense_backward(name, inp, dout):
        w, _ = params.layers[name]
        grads[name][0] = inp.T @ dout
        grads[name][1] = dout.sum(axis=0)
        return dout @ w.T

    d_act_ph = dense_backward("policy_out", cache["act_policy_hidden"], dlogits)
    d_pre_ph = d_act_ph * (cache["pre_policy_hidden"] > 0)
    d_hpol = dense_backward("policy_hidden", cache["h_pol"], d_pre_ph)

    d_act_vh = dense_backward("value_out", cache["act_value_hidden"], du[:, None])
    d_pre_vh = d_act_vh * (cache["pre_value_hidden"] > 0)
    d_hval = dense_backward("value_hidden", cache["h_val"], d_pre_vh)

    def first_stage_backward(names, d_h):
        X = cache["X"]
        if len(names) == 1:
            name = names[0]
            d_pre = d_h * (cache["pre_" + name] > 0)
            w, _ = params.layers[name]
            grads[name][0] = _accum(grads[name][0], X.T @ d_pre)
            grads[name][1] = _accum(grads[name][1], d_pre.sum(axis=0))
            return
        offset = 0
        for name, sl in zip(names, _SECTION_SLICES):
            width = params.layers[name][0].shape[1]
            d_pre = d_h[:, offset:offset + width] * (cache["pre_" + name] > 0)
            grads[name][0] = _accum(grads[name][0], X[:, sl].T @ d_pre)
            grads[name][1] = _accum(grads[name][1], d_pre.sum(axis=0))
            offset += width

    if _POLICY_STAGE[arch] == _VALUE_STAGE[arch]:
        first_stage_backward(_POLICY_STAGE[arch], d_hpol + d_hval)
    else:
        first_stage_backward(_POLICY_STAGE[arch], d_hpol)
        first_stage_backward(_VALUE_STAGE[arch], d_hval)

    # L2 term: d(lam * ||W||^2)/dW = 2 lam W; biases are not regularized.
    for name, (w, b) in params.layers.items():
        if grads[name][0] is None:
            grads[name][0] = np.zeros_like(w)
            grads[name][1] = np.zeros_like(b)
        if lam:
            grads[name][0] += 2.0 * lam * w
    return grads


def _accum(cur, new):
    return new if cur is None else cur + new


@dataclass
class AdamState:
    """First/second-moment accumulators plus hyperparameters."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Dict[str, list] = field(default_factory=dict)
    v: Dict[str, list] = field(default_factory=dict)

    @staticmethod
    def for_params(params: NetworkParams, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        for name, (w, b) in params.layers.items():
            state.m[name] = [np.zeros_like(w), np.zeros_like(b)]
            state.v[name] = [np.zeros_like(w), np.zeros_like(b)]
        return state

    def copy(self) -> "AdamState":
        out = AdamState(lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps, t=self.t)
        out.m = {k: [a.copy(), b.copy()] for k, (a, b) in self.m.items()}
        out.v = {k: [a.copy(), b.copy()] for k, (a, b) in self.v.items()}
        return out


def adam_step(params: NetworkParams, grads: Dict[str, list], state: AdamState):
    """Standard bias-corrected Adam update, in place. Returns (params, state)."""
    for name in params.layers:
        for g in grads[name]:
            if not np.isfinite(g).all():
                raise ValueError(f"non-finite gradient in layer {name!r}")
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for name, (w, b) in params.layers.items():
        for i, (arr, g) in enumerate(((w, grads[name][0]), (b, grads[name][1]))):
            m = state.m[name][i]
            v = state.v[name][i]
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            arr -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# ---------------------------------------------------------------------------
# Weight persistence: magic "DPPR", version, architecture tag, then per-layer
# (rows, cols, row-major float64 weights, biases), all little-endian.

_MAGIC = b"DPPR"
_VERSION = 1


def save_weights(params: NetworkParams, path) -> None:
    spec = ARCH_LAYERS[params.arch]
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<B", ARCHITECTURES.index(params.arch)))
        f.write(struct.pack("<I", len(spec)))
        for name, fan_in, fan_out in spec:
            w, b = params.layers[name]
            f.write(struct.pack("<II", fan_in, fan_out))
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_weights(path, expect_arch: str | None = None) -> NetworkParams:
    with open(path, "rb") as f:
        data = f.read()
    off = 0

    def take(n):
        nonlocal off
        if off + n > len(data):
            raise WeightsFormatError(f"truncated weights file (need {off + n} bytes, have {len(data)})")
        chunk = data[off:off + n]
        off += n
        return chunk

    if take(4) != _MAGIC:
        raise WeightsFormatError("bad magic bytes (not a weights file)")
    version = struct.unpack("<I", take(4))[0]
    if version != _VERSION:
        raise WeightsFormatError(f"unsupported weights version {version}")
    tag = struct.unpack("<B", take(1))[0]
    if tag >= len(ARCHITECTURES):
        raise WeightsFormatError(f"unknown architecture tag {tag}")
    arch = ARCHITECTURES[tag]
    if expect_arch is not None and arch != expect_arch:
        raise WeightsFormatError(f"weights are for {arch!r}, expected {expect_arch!r}")
    spec = ARCH_LAYERS[arch]
    n_layers = struct.unpack("<I", take(4))[0]
    if n_layers != len(spec):
        raise WeightsFormatError(f"architecture {arch!r} needs {len(spec)} layers, file has {n_layers}")
    layers = {}
    for name, fan_in, fan_out in spec:
        rows, cols = struct.unpack("<II", take(8))
        if (rows, cols) != (fan_in, fan_out):
            raise WeightsFormatError(
                f"layer {name!r}: shape {rows}x{cols} does not match expected {fan_in}x{fan_out}")
        w = np.frombuffer(take(rows * cols * 8), dtype="<f8").reshape(rows, cols).copy()
        b = np.frombuffer(take(cols * 8), dtype="<f8").copy()
        layers[name] = [w, b]
    if off != len(data):
        raise WeightsFormatError(f"{len(data) - off} trailing bytes after last layer")
    return NetworkParams(arch, layers)
