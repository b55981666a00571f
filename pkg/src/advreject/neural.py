"""Toy two-head network trained with the squared max-hinge loss.

One fully-connected trunk feeds two scalar heads: f (label score) and r
(rejection score). The per-sample loss squares the max-hinge surrogate and
weight-decays only the f head's final-layer weights:

    loss = max(1 + (alpha/2)(r - y f), c (1 - beta r), 0)^2 + (lam_w/2) ||w_f||^2

Gradients are hand-written reverse mode (no autodiff dependency) and are
checked against central finite differences in the tests. At a tie between
the two hinge branches the classification branch is differentiated.

Training is a min-max loop: each minibatch is first pushed to the worst
point the inner PGD attack can find at the current parameters, then one
outer gradient step is taken at those points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attacks import AttackSpec
from .data import Dataset
from .losses import SurrogateParams, loss_01c

_ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0.0).astype(np.float64)),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
}


@dataclass
class ToyNet:
    """MLP with layer list [d, hidden..., 2]; output row 0 is f, row 1 is r."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights[-1].shape[0] != 2:
            raise ValueError("final layer must have exactly the two heads f and r")

    @classmethod
    def init(cls, d: int, hidden: tuple[int, ...] = (32, 32), activation: str = "relu", seed: int = 0):
        rng = np.random.default_rng(seed)
        sizes = [d, *hidden, 2]
        ws, bs = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            ws.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in)))
            bs.append(np.zeros(fan_out))
        return cls(ws, bs, activation)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def top_weights(self) -> np.ndarray:
        """Final-layer weight vector of the f head (the decayed one)."""
        return self.weights[-1][0]

    def _forward_cache(self, x: np.ndarray):
        """x: (n, d). Returns (f, r, pre-activations, activations)."""
        act, _ = _ACTIVATIONS[self.activation]
        a = x
        zs, acts = [], [x]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ w.T + b
            zs.append(z)
            a = act(z)
            acts.append(a)
        out = a @ self.weights[-1].T + self.biases[-1]
        return out[:, 0], out[:, 1], zs, acts

    def forward(self, x: np.ndarray):
        """(f, r) for a single input or a batch; scalars for 1-D input."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        f, r, _, _ = self._forward_cache(np.atleast_2d(x))
        if single:
            return float(f[0]), float(r[0])
        return f, r

    def _backward(self, df: np.ndarray, dr: np.ndarray, zs, acts, want_input: bool):
        """Backpropagate per-sample head gradients. Returns (param grads
        summed over the batch, input gradient per sample)."""
        _, dact = _ACTIVATIONS[self.activation]
        delta = np.stack([df, dr], axis=1)
        gws = [None] * len(self.weights)
        gbs = [None] * len(self.biases)
        for li in range(len(self.weights) - 1, -1, -1):
            gws[li] = delta.T @ acts[li]
            gbs[li] = delta.sum(axis=0)
            if li > 0:
                delta = (delta @ self.weights[li]) * dact(zs[li - 1])
            elif want_input:
                delta = delta @ self.weights[0]
        return gws, gbs, delta

    def pack(self) -> np.ndarray:
        return np.concatenate([w.ravel() for w in self.weights] + [b.ravel() for b in self.biases])

    def unpack(self, flat: np.ndarray) -> "ToyNet":
        ws, bs = [], []
        i = 0
        for w in self.weights:
            ws.append(flat[i : i + w.size].reshape(w.shape).copy())
            i += w.size
        for b in self.biases:
            bs.append(flat[i : i + b.size].copy())
            i += b.size
        return ToyNet(ws, bs, self.activation)

    def to_json(self) -> str:
        import json

        return json.dumps(
            {
                "activation": self.activation,
                "weights": [w.tolist() for w in self.weights],
                "biases": [b.tolist() for b in self.biases],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ToyNet":
        import json

        obj = json.loads(text)
        return cls(
            [np.array(w, dtype=np.float64) for w in obj["weights"]],
            [np.array(b, dtype=np.float64) for b in obj["biases"]],
            obj["activation"],
        )


@dataclass(frozen=True)
class NeuralTrainConfig:
    params: SurrogateParams = field(default_factory=SurrogateParams)
    lam_w: float = 1e-3
    attack: AttackSpec = field(default_factory=lambda: AttackSpec(method="none"))
    epochs: int = 200
    batch_size: int = 64
    lr: float = 0.05
    hidden: tuple[int, ...] = (32, 32)
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        if self.attack.method not in ("none", "pgd"):
            raise ValueError("inner attack must be pgd or none")
        if self.lam_w < 0:
            raise ValueError("lam_w must be nonnegative")


def _head_grads(f, r, y, p: SurrogateParams):
    """d(squared MH)/df and /dr per sample; ties differentiate the first
    (classification) branch."""
    a = 1.0 + 0.5 * p.alpha * (r - y * f)
    b = p.cost * (1.0 - p.beta * r)
    m = np.maximum(np.maximum(a, b), 0.0)
    use_a = (a >= b) & (m > 0)
    use_b = (b > a) & (m > 0)
    df = np.where(use_a, 2.0 * m * (-0.5 * p.alpha * y), 0.0)
    dr = np.where(use_a, 2.0 * m * 0.5 * p.alpha, np.where(use_b, 2.0 * m * (-p.cost * p.beta), 0.0))
    return df, dr, m


def loss_batch(net: ToyNet, x: np.ndarray, y: np.ndarray, cfg: NeuralTrainConfig) -> float:
    """Mean squared-MH loss plus the top-layer decay term."""
    f, r, _, _ = net._forward_cache(np.atleast_2d(x))
    _, _, m = _head_grads(f, r, np.asarray(y, dtype=np.float64), cfg.params)
    w = net.top_weights
    return float(np.mean(m**2)) + 0.5 * cfg.lam_w * float(w @ w)


def _grads_batch(net: ToyNet, x: np.ndarray, y: np.ndarray, cfg: NeuralTrainConfig, want_input=False):
    """Gradients of the mean batch loss: parameter grads summed over the
    batch, input grads per sample (each carrying the 1/n factor)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    f, r, zs, acts = net._forward_cache(x)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(r))):
        raise FloatingPointError("non-finite network output")
    df, dr, _ = _head_grads(f, r, y, cfg.params)
    gws, gbs, dx = net._backward(df / n, dr / n, zs, acts, want_input)
    gws[-1] = gws[-1].copy()
    gws[-1][0] += cfg.lam_w * net.top_weights
    return gws, gbs, dx


def grad_params(net: ToyNet, x: np.ndarray, y: int, cfg: NeuralTrainConfig) -> np.ndarray:
    """Flat gradient (aligned with net.pack()) of the single-sample loss."""
    gws, gbs, _ = _grads_batch(net, np.atleast_2d(x), np.array([y]), cfg)
    out = np.concatenate([g.ravel() for g in gws] + [g.ravel() for g in gbs])
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite parameter gradient")
    return out


def grad_input(net: ToyNet, x: np.ndarray, y: int, cfg: NeuralTrainConfig) -> np.ndarray:
    """Gradient of the single-sample loss with respect to the input."""
    _, _, dx = _grads_batch(net, np.atleast_2d(x), np.array([y]), cfg, want_input=True)
    if not np.all(np.isfinite(dx)):
        raise FloatingPointError("non-finite input gradient")
    return dx[0]


class NetMHOracle:
    """Squared-MH loss/gradient oracle over inputs, for the attack module."""

    def __init__(self, net: ToyNet, cfg: NeuralTrainConfig):
        self.net = net
        self.cfg = cfg

    def loss(self, x: np.ndarray, y: int) -> float:
        f, r = self.net.forward(x)
        _, _, m = _head_grads(np.array([f]), np.array([r]), np.array([float(y)]), self.cfg.params)
        return float(m[0] ** 2)

    def grad(self, x: np.ndarray, y: int) -> np.ndarray:
        return grad_input(self.net, x, y, self.cfg)


def _inner_pgd_batch(net: ToyNet, x: np.ndarray, y: np.ndarray, cfg: NeuralTrainConfig) -> np.ndarray:
    """Vectorized linf PGD on the squared-MH loss; returns perturbed inputs
    (best iterate per sample, the clean point included)."""
    spec = cfg.attack
    eps = spec.eps
    if spec.method == "none" or eps == 0:
        return x
    step = spec.resolved_step()

    def batch_loss(xa):
        f, r, _, _ = net._forward_cache(xa)
        _, _, m = _head_grads(f, r, y, cfg.params)
        return m**2

    delta = np.zeros_like(x)
    best_loss = batch_loss(x)
    best_delta = delta.copy()
    for _ in range(spec.steps):
        xa = x + delta
        f, r, zs, acts = net._forward_cache(xa)
        df, dr, _ = _head_grads(f, r, y, cfg.params)
        _, _, dx = net._backward(df, dr, zs, acts, want_input=True)
        delta = np.clip(delta + step * np.sign(dx), -eps, eps)
        cur = batch_loss(x + delta)
        better = cur > best_loss
        best_loss = np.where(better, cur, best_loss)
        best_delta[better] = delta[better]
    return x + best_delta


def train_neural(ds: Dataset, cfg: NeuralTrainConfig) -> tuple[ToyNet, np.ndarray]:
    """Min-max minibatch training. Returns the net and the per-epoch mean
    adversarial loss trace."""
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    net = ToyNet.init(ds.d, cfg.hidden, cfg.activation, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed + 1)
    x_all = ds.x
    y_all = ds.y.astype(np.float64)
    n = len(ds)
    trace = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb = _inner_pgd_batch(net, x_all[idx], y_all[idx], cfg)
            loss = loss_batch(net, xb, y_all[idx], cfg)
            if not np.isfinite(loss):
                raise FloatingPointError(f"training loss diverged at epoch {epoch}")
            epoch_losses.append(loss)
            gws, gbs, _ = _grads_batch(net, xb, y_all[idx], cfg)
            for w, gw in zip(net.weights, gws):
                w -= cfg.lr * gw
            for b, gb in zip(net.biases, gbs):
                b -= cfg.lr * gb
        trace[epoch] = float(np.mean(epoch_losses))
    return net, trace


def decide_net(net: ToyNet, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(verdict, f, r) for a batch; verdict 0 means reject (r <= 0)."""
    f, r = net.forward(np.atleast_2d(x))
    verdict = np.where(r <= 0.0, 0, np.where(f >= 0.0, 1, -1))
    return verdict, f, r


def _pgd_batch_heads(net: ToyNet, x, y, eps, steps, head_weights, value_fn):
    """linf PGD maximizing a head-linear objective, vectorized over rows.

    head_weights(f, r, y) -> per-sample (df, dr) ascent weights;
    value_fn(f, r, y) -> per-sample objective value being climbed.
    """
    step = eps / np.sqrt(steps)
    delta = np.zeros_like(x)
    f, r = net.forward(x)
    best_val = value_fn(f, r, y)
    best_delta = delta.copy()
    for _ in range(steps):
        xa = x + delta
        f, r, zs, acts = net._forward_cache(xa)
        df, dr = head_weights(f, r, y)
        _, _, dx = net._backward(df, dr, zs, acts, want_input=True)
        delta = np.clip(delta + step * np.sign(dx), -eps, eps)
        f, r = net.forward(x + delta)
        cur = value_fn(f, r, y)
        better = cur > best_val
        best_val = np.where(better, cur, best_val)
        best_delta[better] = delta[better]
    return best_delta


def adv_risk_01c_net(
    net: ToyNet, x: np.ndarray, y: np.ndarray, params: SurrogateParams, eps: float, steps: int = 20
) -> float:
    """Mean worst-case zero-one-c risk of a net under PGD candidates.

    The squared hinge is flat wherever the net is confident, so PGD on the
    loss alone stalls there; candidates driving the classification margin
    down and the rejection score down cover those points, mirroring the
    analytic candidate pair of the linear case. The clean point stays in
    the set, so the risk never drops below the clean risk.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    f, r = net.forward(x)
    risk = loss_01c(f, r, y, params.cost)
    if eps == 0:
        return float(np.mean(risk))
    cfg = NeuralTrainConfig(params=params, attack=AttackSpec(method="pgd", eps=eps, steps=steps))

    def mh2_weights(f, r, yy):
        df, dr, _ = _head_grads(f, r, yy, params)
        return df, dr

    candidates = [
        _pgd_batch_heads(net, x, y, eps, steps, lambda f, r, yy: (-yy, np.zeros_like(f)), lambda f, r, yy: -yy * f),
        _pgd_batch_heads(net, x, y, eps, steps, lambda f, r, yy: (np.zeros_like(f), -np.ones_like(r)), lambda f, r, yy: -r),
        _inner_pgd_batch(net, x, y, cfg) - x,
    ]
    for delta in candidates:
        fa, ra = net.forward(x + delta)
        risk = np.maximum(risk, loss_01c(fa, ra, y, params.cost))
    return float(np.mean(risk))
