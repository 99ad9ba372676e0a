"""The two-network architecture: a wave net phi(x, t) and a radiation net u_r(t).

Both nets share the same layout: an input affine layer up to ``n_nodes``
channels, an activation, ``n_blocks`` residual FC blocks (two affine maps
with an activation between, skip connection added before the final
activation), an affine output layer down to one channel, and a fixed output
gain.  The default activation is snake, f(a) = a + sin^2 a; tanh/sin/identity
variants exist for ablation studies.

``eval_with_input_derivs`` runs the forward pass while propagating first and
pure second derivative channels with respect to the (normalized) inputs, all
recorded on an autodiff tape, so every derivative is itself differentiable
with respect to the parameters.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import DerivBundle, ParameterSet, Tape

__all__ = [
    "ArchitectureConfig",
    "NetworkParams",
    "snake",
    "init_network",
    "eval_with_input_derivs",
    "forward_w",
    "forward_r",
    "wave_param_count",
    "radiation_param_count",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass(frozen=True)
class ArchitectureConfig:
    """Shared sizing/gain settings for both networks."""

    n_nodes: int = 200
    n_blocks: int = 5
    alpha_phi: float = 0.002
    alpha_u: float = 3.4e-5
    seed: int = 0
    activation: str = "snake"

    def __post_init__(self):
        if self.n_nodes < 1 or self.n_blocks < 1:
            raise ValueError("n_nodes and n_blocks must be >= 1")
        if self.alpha_phi == 0.0 or self.alpha_u == 0.0:
            raise ValueError("output gains must be nonzero")
        if self.activation not in ad.ACTIVATIONS:
            raise ValueError(f"activation must be one of {ad.ACTIVATIONS}")


class NetworkParams(ParameterSet):
    """Trainable tensors of both networks plus any registered physics scalars."""

    def __init__(self, config: ArchitectureConfig):
        super().__init__()
        self.config = config


def _layer_plan(net: str, config: ArchitectureConfig):
    """(name, fan_in, fan_out) triples in forward order."""
    nf = config.n_nodes
    n_in = 2 if net == "wave" else 1
    plan = [(f"{net}.in", n_in, nf)]
    for i in range(config.n_blocks):
        plan.append((f"{net}.block{i}.fc1", nf, nf))
        plan.append((f"{net}.block{i}.fc2", nf, nf))
    plan.append((f"{net}.out", nf, 1))
    return plan


def init_network(config: ArchitectureConfig) -> NetworkParams:
    """Fan-in uniform weights, zero biases, fully determined by config.seed."""
    rng = np.random.default_rng(config.seed)
    params = NetworkParams(config)
    for net in ("wave", "rad"):
        for name, fan_in, fan_out in _layer_plan(net, config):
            bound = 1.0 / np.sqrt(fan_in)
            params.add(f"{name}.W", rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            params.add(f"{name}.b", np.zeros(fan_out))
    return params


def wave_param_count(config: ArchitectureConfig) -> int:
    return sum(fi * fo + fo for _, fi, fo in _layer_plan("wave", config))


def radiation_param_count(config: ArchitectureConfig) -> int:
    return sum(fi * fo + fo for _, fi, fo in _layer_plan("rad", config))


def snake(a):
    """f(a) = a + sin^2 a, elementwise; works on floats, arrays and tape nodes."""
    if isinstance(a, ad.Node):
        f, _, _ = ad.act_triple(a, "snake")
        return f
    a = np.asarray(a, dtype=np.float64)
    s = np.sin(a)
    out = a + s * s
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# bundle propagation
# ---------------------------------------------------------------------------
# A channel dict maps "v", "dx", "dt", "dxx", "dtt" to tape nodes; None means
# the channel is identically zero (or not requested), which skips work.


def _affine(tape: Tape, params, name: str, ch: dict) -> dict:
    W = tape.leaf(params[f"{name}.W"])
    b = tape.leaf(params[f"{name}.b"])
    out = {"v": ad.add(ad.matmul(ch["v"], W), b)}
    for k in ("dx", "dt", "dxx", "dtt"):
        q = ch.get(k)
        out[k] = None if q is None else ad.matmul(q, W)
    return out


def _activation(ch: dict, kind: str) -> dict:
    f, d1, d2 = ad.act_triple(ch["v"], kind)
    out = {"v": f}

    def chain2(first, second):
        # (f o g)'' = f''(g) g'^2 + f'(g) g''
        parts = []
        if first is not None:
            parts.append(ad.mul(d2, ad.square(first)))
        if second is not None:
            parts.append(ad.mul(d1, second))
        if not parts:
            return None
        return parts[0] if len(parts) == 1 else ad.add(parts[0], parts[1])

    out["dx"] = None if ch.get("dx") is None else ad.mul(d1, ch["dx"])
    out["dt"] = None if ch.get("dt") is None else ad.mul(d1, ch["dt"])
    out["dxx"] = chain2(ch.get("dx"), ch.get("dxx"))
    out["dtt"] = chain2(ch.get("dt"), ch.get("dtt"))
    return out


def _add_ch(a: dict, b: dict) -> dict:
    out = {}
    for k in ("v", "dx", "dt", "dxx", "dtt"):
        x, y = a.get(k), b.get(k)
        if x is None and y is None:
            out[k] = None
        elif x is None:
            out[k] = y
        elif y is None:
            out[k] = x
        else:
            out[k] = ad.add(x, y)
    return out


def _scale_ch(ch: dict, factor: float) -> dict:
    return {k: (None if v is None else ad.mul(v, factor)) for k, v in ch.items()}


def _block(tape: Tape, params, name: str, ch: dict, kind: str) -> dict:
    h = _activation(_affine(tape, params, f"{name}.fc1", ch), kind)
    h = _affine(tape, params, f"{name}.fc2", h)
    return _activation(_add_ch(h, ch), kind)


def _check_range(arr, what):
    arr = np.asarray(arr, dtype=np.float64)
    if arr.size and (arr.min() < -1.0 - 1e-9 or arr.max() > 1.0 + 1e-9):
        raise ValueError(f"{what} must lie in [-1, 1] (normalized coordinates)")
    return arr


def eval_with_input_derivs(
    tape: Tape,
    params: NetworkParams,
    net: str,
    x_norm=None,
    t_norm=None,
) -> DerivBundle:
    """Forward pass with first/second input-derivative channels, on tape.

    net="wave" consumes (x_norm, t_norm) and returns all five channels;
    net="radiation" consumes t_norm only (its x slots stay None).  Shapes
    are (n, 1).  A non-finite output triggers a tape scan that names the
    offending primitive.
    """
    config = params.config
    kind = config.activation
    if net == "wave":
        x = _check_range(x_norm, "x_norm").reshape(-1, 1)
        t = _check_range(t_norm, "t_norm").reshape(-1, 1)
        if x.shape != t.shape:
            raise ValueError("x_norm and t_norm must have equal length")
        n = x.shape[0]
        X = np.concatenate([x, t], axis=1)
        ch = {
            "v": tape.constant(X),
            "dx": tape.constant(np.tile(np.array([[1.0, 0.0]]), (n, 1))),
            "dt": tape.constant(np.tile(np.array([[0.0, 1.0]]), (n, 1))),
            "dxx": None,
            "dtt": None,
        }
        gain = config.alpha_phi
        prefix = "wave"
    elif net == "radiation":
        t = _check_range(t_norm, "t_norm").reshape(-1, 1)
        n = t.shape[0]
        ch = {
            "v": tape.constant(t),
            "dx": None,
            "dt": tape.constant(np.ones((n, 1))),
            "dxx": None,
            "dtt": None,
        }
        gain = config.alpha_u
        prefix = "rad"
    else:
        raise ValueError("net must be 'wave' or 'radiation'")

    ch = _activation(_affine(tape, params, f"{prefix}.in", ch), kind)
    for i in range(config.n_blocks):
        ch = _block(tape, params, f"{prefix}.block{i}", ch, kind)
    ch = _affine(tape, params, f"{prefix}.out", ch)
    ch = _scale_ch(ch, gain)

    bundle = DerivBundle(
        value=ch["v"],
        d_dx=ch["dx"],
        d_dt=ch["dt"],
        d2_dx2=ch["dxx"],
        d2_dt2=ch["dtt"],
    )
    for entry in (bundle.value, bundle.d_dx, bundle.d_dt, bundle.d2_dx2, bundle.d2_dt2):
        if entry is not None and not np.isfinite(entry.value).all():
            tape.assert_finite()
    return bundle


def _plain_forward(params: NetworkParams, net: str, X: np.ndarray) -> np.ndarray:
    """Value-only forward in plain numpy (prediction fast path)."""
    config = params.config
    kind = config.activation
    prefix = "wave" if net == "wave" else "rad"

    def act(a):
        if kind == "snake":
            s = np.sin(a)
            return a + s * s
        if kind == "tanh":
            return np.tanh(a)
        if kind == "sin":
            return np.sin(a)
        return a

    def affine(name, h):
        return h @ params[f"{name}.W"].value + params[f"{name}.b"].value

    h = act(affine(f"{prefix}.in", X))
    for i in range(config.n_blocks):
        z = affine(f"{prefix}.block{i}.fc2", act(affine(f"{prefix}.block{i}.fc1", h)))
        h = act(z + h)
    out = affine(f"{prefix}.out", h)
    gain = config.alpha_phi if net == "wave" else config.alpha_u
    return gain * out


def forward_w(params: NetworkParams, x_norm, t_norm) -> np.ndarray:
    """Velocity-potential prediction phi_hat(x_norm, t_norm), shape (n,)."""
    x = _check_range(x_norm, "x_norm").reshape(-1, 1)
    t = _check_range(t_norm, "t_norm").reshape(-1, 1)
    if x.shape != t.shape:
        raise ValueError("x_norm and t_norm must have equal length")
    return _plain_forward(params, "wave", np.concatenate([x, t], axis=1))[:, 0]


def forward_r(params: NetworkParams, t_norm) -> np.ndarray:
    """Radiation volume-velocity prediction u_r_hat(t_norm), shape (n,)."""
    t = _check_range(t_norm, "t_norm").reshape(-1, 1)
    return _plain_forward(params, "radiation", t)[:, 0]


# ---------------------------------------------------------------------------
# checkpoint format
# ---------------------------------------------------------------------------
# Single file:
#   line 1: b"TUBEPINN-CKPT v1\n"
#   line 2: JSON manifest + b"\n":
#       {"config": {...ArchitectureConfig fields...},
#        "tensors": [{"name": ..., "shape": [...]}, ...]}
#   then: concatenated row-major little-endian float64 blobs, in manifest order.

_CKPT_MAGIC = b"TUBEPINN-CKPT v1\n"


def save_checkpoint(params: NetworkParams, path):
    manifest = {
        "config": {
            "n_nodes": params.config.n_nodes,
            "n_blocks": params.config.n_blocks,
            "alpha_phi": params.config.alpha_phi,
            "alpha_u": params.config.alpha_u,
            "seed": params.config.seed,
            "activation": params.config.activation,
        },
        "tensors": [{"name": p.name, "shape": list(p.shape)} for p in params],
    }
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(json.dumps(manifest, sort_keys=True).encode() + b"\n")
        for p in params:
            fh.write(np.ascontiguousarray(p.value, dtype="<f8").tobytes())


def load_checkpoint(path) -> NetworkParams:
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != _CKPT_MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        manifest = json.loads(fh.readline().decode())
        params = NetworkParams(ArchitectureConfig(**manifest["config"]))
        for entry in manifest["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * struct.calcsize("<d"))
            if len(raw) != count * 8:
                raise ValueError("checkpoint truncated")
            arr = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            params.add(entry["name"], arr)
    return params
