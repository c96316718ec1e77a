"""Hybrid classical-quantum classifier.

Pipeline per point: dense 2->n, tanh, scale by alpha, Ry-encode each wire
from |0...0>, apply the quantum layer, read <Z> on every wire, dense n->2,
tanh. Loss is softmax cross-entropy on those tanh outputs.

The quantum layer is a freely parameterized complex matrix M = X + iY (one
2**n x 2**n block, or one 2x2 block per wire). X and Y are separate real
parameter blocks; their gradients come from central differences evaluated
through the simulator, everything classical is differentiated analytically.

Variants: "A" full matrix, "B" per-wire 2x2 matrices, "C" full matrix with a
learned alpha.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import sim
from .compiler import CompiledCircuit, apply_circuit
from .errors import DimensionError, NumericError
from .unitarize import MuConfig, is_unitary, unitarize

VARIANTS = ("A", "B", "C")
DEFAULT_ALPHA = math.pi / 2


@dataclass(frozen=True)
class FdConfig:
    delta_theta: float = math.pi / 10

    def __post_init__(self):
        if not self.delta_theta > 0:
            raise ValueError("delta_theta must be positive")


@dataclass
class QuantumLayer:
    """Learned matrix parameters: shape (2**n, 2**n), or (n, 2, 2) when per_wire."""

    re: np.ndarray
    im: np.ndarray
    per_wire: bool = False

    def __post_init__(self):
        self.re = np.asarray(self.re, dtype=float)
        self.im = np.asarray(self.im, dtype=float)
        if self.re.shape != self.im.shape:
            raise DimensionError("real and imaginary parts differ in shape")
        if self.per_wire:
            if self.re.ndim != 3 or self.re.shape[1:] != (2, 2):
                raise DimensionError(f"per-wire layer needs shape (n, 2, 2), got {self.re.shape}")
        else:
            d = self.re.shape[0]
            if self.re.shape != (d, d) or d & (d - 1):
                raise DimensionError(f"full layer needs a 2**n square matrix, got {self.re.shape}")

    @property
    def n_wires(self) -> int:
        return self.re.shape[0] if self.per_wire else self.re.shape[0].bit_length() - 1

    @property
    def matrix(self) -> np.ndarray:
        return self.re + 1j * self.im

    def matrices(self) -> list:
        """The stored unitaries: one full matrix, or one 2x2 per wire."""
        m = self.matrix
        return list(m) if self.per_wire else [m]

    @classmethod
    def from_matrices(cls, mats, per_wire: bool) -> "QuantumLayer":
        m = np.asarray(mats) if per_wire else np.asarray(mats[0])
        return cls(m.real.copy(), m.imag.copy(), per_wire)

    def projected(self, mu: MuConfig) -> "QuantumLayer":
        return QuantumLayer.from_matrices([unitarize(m, mu) for m in self.matrices()], self.per_wire)

    def is_unitary(self, tol: float = 1e-9) -> bool:
        return all(is_unitary(m, tol) for m in self.matrices())


@dataclass
class HybridModel:
    variant: str
    l1_w: np.ndarray
    l1_b: np.ndarray
    l2_w: np.ndarray
    l2_b: np.ndarray
    quantum: QuantumLayer
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        n = self.quantum.n_wires
        if self.l1_w.shape[0] != n or self.l2_w.shape[1] != n:
            raise DimensionError("dense layers do not match the number of wires")

    @property
    def n_wires(self) -> int:
        return self.quantum.n_wires

    @property
    def learn_alpha(self) -> bool:
        return self.variant == "C"

    def params(self) -> dict:
        p = {
            "l1_w": self.l1_w,
            "l1_b": self.l1_b,
            "l2_w": self.l2_w,
            "l2_b": self.l2_b,
            "q_re": self.quantum.re,
            "q_im": self.quantum.im,
        }
        if self.learn_alpha:
            p["alpha"] = np.asarray(self.alpha, dtype=float)
        return p

    def with_params(self, p: dict) -> "HybridModel":
        return replace(
            self,
            l1_w=np.asarray(p["l1_w"], dtype=float),
            l1_b=np.asarray(p["l1_b"], dtype=float),
            l2_w=np.asarray(p["l2_w"], dtype=float),
            l2_b=np.asarray(p["l2_b"], dtype=float),
            quantum=QuantumLayer(p["q_re"], p["q_im"], self.quantum.per_wire),
            alpha=float(p["alpha"]) if "alpha" in p else self.alpha,
        )

    def copy(self) -> "HybridModel":
        return self.with_params({k: np.array(v, copy=True) for k, v in self.params().items()})

    def fingerprint(self) -> str:
        h = hashlib.sha1()
        for k, v in sorted(self.params().items()):
            h.update(k.encode())
            h.update(np.ascontiguousarray(v, dtype=float).tobytes())
        h.update(repr(self.alpha).encode())
        return h.hexdigest()


def init_model(variant: str, rng: np.random.Generator, n_wires: int = 4,
               mu: MuConfig | None = None, n_in: int = 2, n_out: int = 2) -> HybridModel:
    """Random model, with the quantum matrices already projected onto the unitaries.

    Dense layers use U(-1/sqrt(fan_in), 1/sqrt(fan_in)); matrix entries are
    N(0, 1/2**k) for a k-wire block, real and imaginary parts independent.
    """
    mu = mu or MuConfig()
    b1, b2 = 1 / math.sqrt(n_in), 1 / math.sqrt(n_wires)
    l1_w = rng.uniform(-b1, b1, (n_wires, n_in))
    l1_b = rng.uniform(-b1, b1, n_wires)
    l2_w = rng.uniform(-b2, b2, (n_out, n_wires))
    l2_b = rng.uniform(-b2, b2, n_out)
    per_wire = variant == "B"
    shape = (n_wires, 2, 2) if per_wire else (1 << n_wires, 1 << n_wires)
    std = math.sqrt(0.5) if per_wire else 2.0 ** (-n_wires / 2)
    layer = QuantumLayer(rng.normal(0, std, shape), rng.normal(0, std, shape), per_wire)
    return HybridModel(variant, l1_w, l1_b, l2_w, l2_b, layer.projected(mu))


# ---------------------------------------------------------------------------
# forward


@dataclass
class ForwardCache:
    x: np.ndarray
    tanh1: np.ndarray
    angles: np.ndarray
    expectations: np.ndarray
    logits: np.ndarray
    fingerprint: str = field(repr=False, default="")


def _layer_state(layer: QuantumLayer, angles, circuits=None):
    """Statevector after encoding and the quantum layer; batch shape of ``angles[..., 0]``."""
    state = sim.ry_encode(angles)
    n = layer.n_wires
    if circuits is not None:
        if layer.per_wire:
            for w, c in enumerate(circuits):
                state = apply_circuit(state, c, wire_map={0: w})
            return state
        return apply_circuit(state, circuits[0])
    if layer.per_wire:
        mats = layer.matrix
        for w in range(n):
            state = sim.apply_1q(state, mats[w], w)
        return state
    return sim.apply_matrix(state, layer.matrix, range(n))


def quantum_expectations(layer: QuantumLayer, angles, circuits=None) -> np.ndarray:
    return sim.expectation_z_all(_layer_state(layer, angles, circuits))


def forward(model: HybridModel, x, circuits: list[CompiledCircuit] | None = None):
    """Logits for a point (shape (2,)) or a batch (shape (B, 2)), plus the cache.

    With ``circuits`` the quantum layer runs the compiled gate lists instead of
    the stored matrices.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    t = np.tanh(xb @ model.l1_w.T + model.l1_b)
    angles = model.alpha * t
    e = quantum_expectations(model.quantum, angles, circuits)
    logits = np.tanh(e @ model.l2_w.T + model.l2_b)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite activations in forward pass")
    cache = ForwardCache(xb, t, angles, e, logits, model.fingerprint())
    return (logits[0] if single else logits), cache


def predict(model: HybridModel, x, circuits=None) -> np.ndarray:
    """Class index per row; a tie between the two logits goes to class 0."""
    logits, _ = forward(model, np.atleast_2d(x), circuits)
    return np.argmax(logits, axis=-1)


def log_softmax(logits):
    z = logits - np.max(logits, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def cross_entropy(logits, label):
    """-log softmax(logits)[label]; works on one row or a batch of rows."""
    logits = np.asarray(logits, dtype=float)
    ls = log_softmax(logits)
    label = np.asarray(label)
    return -np.take_along_axis(ls, label[..., None].astype(int), axis=-1)[..., 0]


# ---------------------------------------------------------------------------
# gradients


def central_difference(f, theta: float, delta_theta: float) -> float:
    """[f(theta + d/2) - f(theta - d/2)] / d."""
    return (f(theta + delta_theta / 2) - f(theta - delta_theta / 2)) / delta_theta


def _fd_full(layer, angles, upstream, delta):
    n = layer.n_wires
    dim = 1 << n
    u = layer.matrix
    half = delta / 2
    phi = sim.ry_encode(angles)
    psi = sim.apply_matrix(phi, u, range(n))
    # (M +/- c E_jk) phi == psi +/- c phi_k e_j: the perturbed matrices applied to phi
    coef = np.array([[half, -half], [1j * half, -1j * half]])
    eye = np.eye(dim)
    bump = (eye[None, :, None, None, None, :]
            * phi[:, None, :, None, None, None]
            * coef[None, None, None, :, :, None])
    states = psi[:, None, None, None, None, :] + bump
    f = sim.expectation_z_all(states)
    diff = (f[..., 0, :] - f[..., 1, :]) / delta
    g = np.einsum("bjkpw,bw->pjk", diff, upstream)
    return g[0], g[1]


def _fd_per_wire(layer, angles, upstream, delta):
    n = layer.n_wires
    mats = layer.matrix
    half = delta / 2
    r = np.stack([np.cos(angles / 2), np.sin(angles / 2)], axis=-1).astype(complex)
    out = np.einsum("wij,bwj->bwi", mats, r)
    coef = np.array([[half, -half], [1j * half, -1j * half]])
    # mask[w, j, v, c]: perturbing entry (j, .) of wire w touches component c of wire v
    mask = np.einsum("wv,jc->wjvc", np.eye(n), np.eye(2))
    bump = (mask[None, :, :, None, None, None, :, :]
            * r[:, :, None, :, None, None, None, None]
            * coef[None, None, None, None, :, :, None, None])
    singles = out[:, None, None, None, None, None, :, :] + bump
    f = sim.expectation_z_all(sim.product_state(singles))
    diff = (f[..., 0, :] - f[..., 1, :]) / delta
    g = np.einsum("bwjkpo,bo->pwjk", diff, upstream)
    return g[0], g[1]


def _fd_angles(layer, angles, upstream, delta):
    n = layer.n_wires
    shift = np.stack([np.eye(n), -np.eye(n)], axis=1) * (delta / 2)  # (param, sign, wire)
    pert = angles[:, None, None, :] + shift[None]
    f = quantum_expectations(layer, pert)
    diff = (f[:, :, 0, :] - f[:, :, 1, :]) / delta
    return np.einsum("biw,bw->bi", diff, upstream)


def quantum_fd_grads(layer: QuantumLayer, angles, upstream, cfg: FdConfig = FdConfig()) -> dict:
    """Central-difference gradients of sum_w upstream_w <Z_w>.

    Every real entry, every imaginary entry and every encoding angle is shifted
    by +/- delta_theta/2 on its own and the expectations are recomputed. Matrix
    gradients are summed over the batch; angle gradients stay per sample.
    Perturbed matrices are applied as-is, without re-projection.
    """
    angles = np.asarray(angles, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    single = angles.ndim == 1
    if single:
        angles, upstream = angles[None], upstream[None]
    if angles.shape != upstream.shape or angles.shape[-1] != layer.n_wires:
        raise DimensionError("angles and upstream must both be (batch, n_wires)")
    fd = _fd_per_wire if layer.per_wire else _fd_full
    g_re, g_im = fd(layer, angles, upstream, cfg.delta_theta)
    g_ang = _fd_angles(layer, angles, upstream, cfg.delta_theta)
    return {"q_re": g_re, "q_im": g_im, "angles": g_ang[0] if single else g_ang}


def backward(model: HybridModel, cache: ForwardCache, labels, fd: FdConfig = FdConfig()) -> dict:
    """Gradients of the batch-mean cross-entropy for every parameter in ``model.params()``."""
    if cache.fingerprint != model.fingerprint():
        raise ValueError("stale forward cache: model parameters changed since forward()")
    labels = np.atleast_1d(np.asarray(labels, dtype=int))
    logits = cache.logits
    b = logits.shape[0]
    probs = np.exp(log_softmax(logits))
    onehot = np.eye(logits.shape[1])[labels]
    dz = (probs - onehot) / b * (1.0 - logits ** 2)
    grads = {"l2_w": dz.T @ cache.expectations, "l2_b": dz.sum(axis=0)}
    de = dz @ model.l2_w
    q = quantum_fd_grads(model.quantum, cache.angles, de, fd)
    grads["q_re"], grads["q_im"] = q["q_re"], q["q_im"]
    dangles = q["angles"]
    if model.learn_alpha:
        grads["alpha"] = np.asarray(np.sum(dangles * cache.tanh1))
    dh = dangles * model.alpha * (1.0 - cache.tanh1 ** 2)
    grads["l1_w"] = dh.T @ cache.x
    grads["l1_b"] = dh.sum(axis=0)
    return grads


def batch_loss(model: HybridModel, x, labels) -> float:
    logits, _ = forward(model, np.atleast_2d(x))
    return float(np.mean(cross_entropy(logits, np.atleast_1d(labels))))


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState):
    """One bias-corrected ADAM update. Returns new (params, state); inputs are not mutated."""
    if set(params) != set(grads):
        raise DimensionError(f"parameter/gradient keys differ: {sorted(params)} vs {sorted(grads)}")
    t = state.step + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    new_params, new_m, new_v = {}, {}, {}
    for k, p in params.items():
        g = np.asarray(grads[k], dtype=float)
        p = np.asarray(p, dtype=float)
        if g.shape != p.shape:
            raise DimensionError(f"gradient for {k} has shape {g.shape}, parameter {p.shape}")
        m = state.beta1 * state.m.get(k, np.zeros_like(p)) + (1 - state.beta1) * g
        v = state.beta2 * state.v.get(k, np.zeros_like(p)) + (1 - state.beta2) * g * g
        new_params[k] = p - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        new_m[k], new_v[k] = m, v
    return new_params, replace(state, step=t, m=new_m, v=new_v)


# ---------------------------------------------------------------------------
# checkpoints


def to_checkpoint(model: HybridModel) -> dict:
    return {
        "variant": model.variant,
        "n_wires": model.n_wires,
        "l1_w": model.l1_w.tolist(),
        "l1_b": model.l1_b.tolist(),
        "l2_w": model.l2_w.tolist(),
        "l2_b": model.l2_b.tolist(),
        "alpha": float(model.alpha),
        "q_re": model.quantum.re.tolist(),
        "q_im": model.quantum.im.tolist(),
    }


def from_checkpoint(obj: dict) -> HybridModel:
    variant = obj["variant"]
    per_wire = variant == "B"
    layer = QuantumLayer(np.asarray(obj["q_re"], float), np.asarray(obj["q_im"], float), per_wire)
    if layer.n_wires != int(obj["n_wires"]):
        raise DimensionError(f"checkpoint says {obj['n_wires']} wires, matrices imply {layer.n_wires}")
    return HybridModel(
        variant,
        np.asarray(obj["l1_w"], float),
        np.asarray(obj["l1_b"], float),
        np.asarray(obj["l2_w"], float),
        np.asarray(obj["l2_b"], float),
        layer,
        float(obj["alpha"]),
    )
