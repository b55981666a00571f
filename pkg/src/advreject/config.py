"""Run configuration: JSON schema, validation, and manifest round-trip.

A run is fully determined by one RunConfig plus the input files. Every
validation failure names the offending path (e.g. ``train.cost``). The
resolved config (all defaults materialized, data-derived values like the
kernel bandwidth frozen to numbers) is written back as the manifest, and
re-running a manifest reproduces the artifacts byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
SUBCOMMANDS = ("train", "eval", "attack", "bound", "bench", "neural-train")


class ConfigError(ValueError):
    """Invalid run configuration; message carries the field path."""


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(f"{path} {message}")


def _get(section: dict, key: str, default, path: str, kind=None):
    val = section.get(key, default)
    if kind is not None and val is not None and not isinstance(val, kind):
        if kind is float and isinstance(val, int) and not isinstance(val, bool):
            return float(val)
        names = kind.__name__ if not isinstance(kind, tuple) else "/".join(k.__name__ for k in kind)
        raise ConfigError(f"{path}.{key} must be {names}, got {type(val).__name__}")
    return val


@dataclass
class FeatureSection:
    kind: str = "identity"
    dim: int = 200
    sigma: float | str = "median"  # "median" resolves from training data
    seed: int = 0


@dataclass
class TrainSection:
    mode: str = "atro"
    cost: float = 0.2
    alpha: float = 1.0
    beta: float = 1.0
    eps_train: float = 0.0
    lam: float = 1e-3
    lam_prime: float = 1e-3
    epochs: int = 2000
    lr0: float = 3.0
    train_fraction: float = 0.8
    normalize: str = "minmax01"
    features: FeatureSection = field(default_factory=FeatureSection)


@dataclass
class AttackSection:
    method: str = "analytic_linear"
    eps: float = 0.01
    norm: str = "linf"
    steps: int = 20
    step_size: float | str = "auto"
    random_start: bool = False
    seed: int = 0


@dataclass
class BoundSection:
    p: float = 2.0
    delta: float = 0.05
    eps: float = 0.0
    mc_draws: int = 2000
    w_bound: float | str = "auto"  # "auto" = largest weight norm of the model


@dataclass
class NeuralSection:
    hidden: tuple = (32, 32)
    activation: str = "relu"
    epochs: int = 200
    batch_size: int = 64
    lr: float = 0.05
    lam_w: float = 1e-3
    cost: float = 0.3
    alpha: float = 1.0
    beta: float = 1.0
    eps_train: float = 0.0
    steps: int = 10
    train_fraction: float = 0.8
    normalize: str = "none"


@dataclass
class BenchSection:
    methods: tuple = (("svm", None), ("at", None), ("mh", 0.2), ("atro", 0.2))
    attack_eps: tuple = (0.0, 0.001, 0.01, 0.1)
    eps_train: float = 0.001
    trials: int = 10
    train_size: int = 500
    alpha: float = 2.0
    beta: float = 4.0
    lam: float = 1e-3
    lam_prime: float = 1e-3
    epochs: int = 3000
    lr0: float = 3.0
    rff_dim: int = 100
    normalize: str = "minmax01"
    attack_steps: int = 20


@dataclass
class RunConfig:
    subcommand: str
    dataset: str = ""
    test_dataset: str | None = None
    model: str | None = None  # model JSON path for eval/attack/bound
    out: str = "out"
    seed: int = 0
    train: TrainSection = field(default_factory=TrainSection)
    attack: AttackSection = field(default_factory=AttackSection)
    bound: BoundSection = field(default_factory=BoundSection)
    neural: NeuralSection = field(default_factory=NeuralSection)
    bench: BenchSection = field(default_factory=BenchSection)

    def to_json(self) -> str:
        obj = asdict(self)
        return json.dumps(obj, indent=2, sort_keys=True)


def _validate_surrogate(path: str, cost: float, alpha: float, beta: float):
    _require(0.0 < cost < 0.5, f"{path}.cost", "must lie in (0, 0.5)")
    _require(alpha > 0, f"{path}.alpha", "must be positive")
    _require(beta > 0, f"{path}.beta", "must be positive")


def _parse_features(section: dict, path: str) -> FeatureSection:
    kind = _get(section, "kind", "identity", path, str)
    _require(kind in ("identity", "random_fourier"), f"{path}.kind", "must be identity or random_fourier")
    dim = _get(section, "dim", 200, path, int)
    sigma = section.get("sigma", "median")
    seed = _get(section, "seed", 0, path, int)
    if kind == "random_fourier":
        _require(dim > 0, f"{path}.dim", "must be positive")
        if sigma != "median":
            _require(isinstance(sigma, (int, float)) and sigma > 0, f"{path}.sigma", 'must be positive or "median"')
            sigma = float(sigma)
    return FeatureSection(kind, dim, sigma, seed)


def _parse_train(section: dict, path: str = "train") -> TrainSection:
    out = TrainSection()
    out.mode = _get(section, "mode", out.mode, path, str)
    _require(out.mode in ("svm", "at", "mh", "atro"), f"{path}.mode", "must be one of svm/at/mh/atro")
    out.cost = _get(section, "cost", out.cost, path, float)
    out.alpha = _get(section, "alpha", out.alpha, path, float)
    out.beta = _get(section, "beta", out.beta, path, float)
    _validate_surrogate(path, out.cost, out.alpha, out.beta)
    out.eps_train = _get(section, "eps_train", out.eps_train, path, float)
    _require(out.eps_train >= 0, f"{path}.eps_train", "must be nonnegative")
    if out.mode in ("svm", "mh"):
        _require(out.eps_train == 0, f"{path}.eps_train", f"must be 0 for mode {out.mode}")
    out.lam = _get(section, "lam", out.lam, path, float)
    out.lam_prime = _get(section, "lam_prime", out.lam_prime, path, float)
    _require(out.lam >= 0 and out.lam_prime >= 0, f"{path}.lam", "and train.lam_prime must be nonnegative")
    out.epochs = _get(section, "epochs", out.epochs, path, int)
    _require(out.epochs >= 1, f"{path}.epochs", "must be >= 1")
    out.lr0 = _get(section, "lr0", out.lr0, path, float)
    _require(out.lr0 > 0, f"{path}.lr0", "must be positive")
    out.train_fraction = _get(section, "train_fraction", out.train_fraction, path, float)
    _require(0.0 < out.train_fraction < 1.0, f"{path}.train_fraction", "must lie in (0, 1)")
    out.normalize = _get(section, "normalize", out.normalize, path, str)
    _require(out.normalize in ("minmax01", "zscore", "none"), f"{path}.normalize", "must be minmax01/zscore/none")
    out.features = _parse_features(_get(section, "features", {}, path, dict), f"{path}.features")
    return out


def _parse_attack(section: dict, path: str = "attack") -> AttackSection:
    out = AttackSection()
    out.method = _get(section, "method", out.method, path, str)
    _require(
        out.method in ("none", "analytic_linear", "fgsm", "pgd"),
        f"{path}.method",
        "must be one of none/analytic_linear/fgsm/pgd",
    )
    out.eps = _get(section, "eps", out.eps, path, float)
    _require(out.eps >= 0, f"{path}.eps", "must be nonnegative")
    out.norm = _get(section, "norm", out.norm, path, str)
    _require(out.norm in ("linf", "l2"), f"{path}.norm", "must be linf or l2")
    if out.method in ("analytic_linear", "fgsm"):
        _require(out.norm == "linf", f"{path}.norm", f"must be linf for method {out.method}")
    out.steps = _get(section, "steps", out.steps, path, int)
    _require(out.steps >= 1, f"{path}.steps", "must be >= 1")
    step_size = section.get("step_size", "auto")
    if step_size != "auto":
        _require(isinstance(step_size, (int, float)) and step_size > 0, f"{path}.step_size", 'must be positive or "auto"')
        step_size = float(step_size)
    out.step_size = step_size
    out.random_start = _get(section, "random_start", False, path, bool)
    out.seed = _get(section, "seed", 0, path, int)
    return out


def _parse_bound(section: dict, path: str = "bound") -> BoundSection:
    out = BoundSection()
    p = section.get("p", out.p)
    if p == "inf":
        p = float("inf")
    _require(isinstance(p, (int, float)) and p >= 1, f"{path}.p", 'must satisfy p >= 1 (use "inf" for infinity)')
    out.p = float(p)
    out.delta = _get(section, "delta", out.delta, path, float)
    _require(0.0 < out.delta < 1.0, f"{path}.delta", "must lie in (0, 1)")
    out.eps = _get(section, "eps", out.eps, path, float)
    _require(out.eps >= 0, f"{path}.eps", "must be nonnegative")
    out.mc_draws = _get(section, "mc_draws", out.mc_draws, path, int)
    _require(out.mc_draws >= 1, f"{path}.mc_draws", "must be >= 1")
    w = section.get("w_bound", "auto")
    if w != "auto":
        _require(isinstance(w, (int, float)) and w > 0, f"{path}.w_bound", 'must be positive or "auto"')
        w = float(w)
    out.w_bound = w
    return out


def _parse_neural(section: dict, path: str = "neural") -> NeuralSection:
    out = NeuralSection()
    hidden = _get(section, "hidden", list(out.hidden), path, list)
    _require(all(isinstance(h, int) and h > 0 for h in hidden), f"{path}.hidden", "must be positive integers")
    out.hidden = tuple(hidden)
    out.activation = _get(section, "activation", out.activation, path, str)
    _require(out.activation in ("relu", "tanh"), f"{path}.activation", "must be relu or tanh")
    out.epochs = _get(section, "epochs", out.epochs, path, int)
    out.batch_size = _get(section, "batch_size", out.batch_size, path, int)
    _require(out.epochs >= 1 and out.batch_size >= 1, f"{path}.epochs", "and batch_size must be >= 1")
    out.lr = _get(section, "lr", out.lr, path, float)
    _require(out.lr > 0, f"{path}.lr", "must be positive")
    out.lam_w = _get(section, "lam_w", out.lam_w, path, float)
    _require(out.lam_w >= 0, f"{path}.lam_w", "must be nonnegative")
    out.cost = _get(section, "cost", out.cost, path, float)
    out.alpha = _get(section, "alpha", out.alpha, path, float)
    out.beta = _get(section, "beta", out.beta, path, float)
    _validate_surrogate(path, out.cost, out.alpha, out.beta)
    out.eps_train = _get(section, "eps_train", out.eps_train, path, float)
    _require(out.eps_train >= 0, f"{path}.eps_train", "must be nonnegative")
    out.steps = _get(section, "steps", out.steps, path, int)
    _require(out.steps >= 1, f"{path}.steps", "must be >= 1")
    out.train_fraction = _get(section, "train_fraction", out.train_fraction, path, float)
    _require(0.0 < out.train_fraction < 1.0, f"{path}.train_fraction", "must lie in (0, 1)")
    out.normalize = _get(section, "normalize", out.normalize, path, str)
    _require(out.normalize in ("minmax01", "zscore", "none"), f"{path}.normalize", "must be minmax01/zscore/none")
    return out


def _parse_bench(section: dict, path: str = "bench") -> BenchSection:
    out = BenchSection()
    methods = _get(section, "methods", [list(m) for m in out.methods], path, list)
    parsed = []
    for i, entry in enumerate(methods):
        _require(isinstance(entry, (list, tuple)) and len(entry) == 2, f"{path}.methods[{i}]", "must be [mode, cost]")
        mode, cost = entry
        _require(mode in ("svm", "at", "mh", "atro"), f"{path}.methods[{i}]", "mode must be svm/at/mh/atro")
        if mode in ("mh", "atro"):
            _require(isinstance(cost, (int, float)) and 0 < cost < 0.5, f"{path}.methods[{i}]", "cost must lie in (0, 0.5)")
            cost = float(cost)
        else:
            _require(cost is None, f"{path}.methods[{i}]", "cost must be null for svm/at")
        parsed.append((mode, cost))
    out.methods = tuple(parsed)
    eps_list = _get(section, "attack_eps", list(out.attack_eps), path, list)
    _require(len(eps_list) > 0, f"{path}.attack_eps", "must be non-empty")
    _require(all(isinstance(e, (int, float)) and e >= 0 for e in eps_list), f"{path}.attack_eps", "entries must be nonnegative")
    out.attack_eps = tuple(float(e) for e in eps_list)
    out.eps_train = _get(section, "eps_train", out.eps_train, path, float)
    _require(out.eps_train >= 0, f"{path}.eps_train", "must be nonnegative")
    out.trials = _get(section, "trials", out.trials, path, int)
    _require(out.trials >= 1, f"{path}.trials", "must be >= 1")
    out.train_size = _get(section, "train_size", out.train_size, path, int)
    _require(out.train_size >= 2, f"{path}.train_size", "must be >= 2")
    out.alpha = _get(section, "alpha", out.alpha, path, float)
    out.beta = _get(section, "beta", out.beta, path, float)
    _require(out.alpha > 0 and out.beta > 0, f"{path}.alpha", "and bench.beta must be positive")
    out.lam = _get(section, "lam", out.lam, path, float)
    out.lam_prime = _get(section, "lam_prime", out.lam_prime, path, float)
    out.epochs = _get(section, "epochs", out.epochs, path, int)
    out.lr0 = _get(section, "lr0", out.lr0, path, float)
    out.rff_dim = _get(section, "rff_dim", out.rff_dim, path, int)
    _require(out.rff_dim >= 0, f"{path}.rff_dim", "must be >= 0 (0 = identity features)")
    out.normalize = _get(section, "normalize", out.normalize, path, str)
    _require(out.normalize in ("minmax01", "zscore", "none"), f"{path}.normalize", "must be minmax01/zscore/none")
    out.attack_steps = _get(section, "attack_steps", out.attack_steps, path, int)
    return out


def validate_config(raw: str) -> RunConfig:
    """Parse and validate JSON text into a RunConfig.

    Raises ConfigError naming the offending path, e.g.
    "train.cost must lie in (0, 0.5)".
    """
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    sub = obj.get("subcommand")
    _require(sub in SUBCOMMANDS, "subcommand", f"must be one of {'/'.join(SUBCOMMANDS)}")
    rc = RunConfig(subcommand=sub)
    rc.dataset = _get(obj, "dataset", "", "", str)
    rc.test_dataset = obj.get("test_dataset")
    if rc.test_dataset is not None and not isinstance(rc.test_dataset, str):
        raise ConfigError("test_dataset must be a string path")
    rc.model = obj.get("model")
    if rc.model is not None and not isinstance(rc.model, str):
        raise ConfigError("model must be a string path")
    rc.out = _get(obj, "out", "out", "", str)
    rc.seed = _get(obj, "seed", 0, "", int)
    rc.train = _parse_train(_get(obj, "train", {}, "", dict))
    rc.attack = _parse_attack(_get(obj, "attack", {}, "", dict))
    rc.bound = _parse_bound(_get(obj, "bound", {}, "", dict))
    rc.neural = _parse_neural(_get(obj, "neural", {}, "", dict))
    rc.bench = _parse_bench(_get(obj, "bench", {}, "", dict))
    return rc
