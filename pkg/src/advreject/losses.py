"""Rejection-aware losses and their exact worst-case forms for linear models.

The reference loss charges 1 for an accepted misclassification, c for a
rejection, and 0 otherwise:

    L_01c(f, r, y) = 1{y*f <= 0} * 1{r >= 0} + c * 1{r <= 0}

Both indicators fire at r = 0 exactly; that overlap is kept verbatim here
and resolved at decision time (the model rejects at r = 0).

The maximum-hinge surrogate jointly upper-bounds L_01c away from r = 0:

    L_mh(f, r, y) = max(1 + (alpha/2) * (r - y*f), c * (1 - beta*r), 0)

For scores linear in the (perturbable) features, the supremum of L_mh over
an L-infinity ball of radius eps has a closed form: each branch is affine
in the input, so its maximum sits at a corner of the box, giving

    A~ = 1 + (alpha/2) * (r - y*f + eps * ||zeta(y)||_1)
    B~ = c * (1 - beta * (r - eps * ||theta||_1))

and the worst-case loss max(A~, B~, 0). The l1 norms run over the
perturbable weight coordinates only; biases are excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import RejectionModel


@dataclass(frozen=True)
class SurrogateParams:
    """Hinge-scale parameters. Rejection only pays off for cost < 1/2."""

    alpha: float = 1.0
    beta: float = 1.0
    cost: float = 0.3

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not 0.0 < self.cost < 0.5:
            raise ValueError("cost must lie in (0, 0.5)")


def loss_01c(f_val, r_val, y, cost: float):
    """Zero-one loss with rejection at cost c. Accepts scalars or arrays."""
    if not 0.0 < cost < 0.5:
        raise ValueError("cost must lie in (0, 0.5)")
    f_val = np.asarray(f_val, dtype=np.float64)
    r_val = np.asarray(r_val, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    wrong = (y * f_val <= 0.0) & (r_val >= 0.0)
    out = wrong.astype(np.float64) + cost * (r_val <= 0.0)
    return out if out.ndim else float(out)


def loss_mh(f_val, r_val, y, p: SurrogateParams):
    """Maximum-hinge surrogate. Accepts scalars or arrays."""
    f_val = np.asarray(f_val, dtype=np.float64)
    r_val = np.asarray(r_val, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    a = 1.0 + 0.5 * p.alpha * (r_val - y * f_val)
    b = p.cost * (1.0 - p.beta * r_val)
    out = np.maximum(np.maximum(a, b), 0.0)
    return out if out.ndim else float(out)


_SURROGATE_CATALOG = {
    "hinge": lambda u: np.maximum(1.0 + u, 0.0),
    "squared_hinge": lambda u: np.maximum(1.0 + u, 0.0) ** 2,
}


def surrogate_conv(f_val, r_val, y, p: SurrogateParams, phi: str = "hinge", psi: str = "hinge"):
    """Additive convex surrogate Phi((alpha/2)(r - y*f)) + c * Psi(-beta*r).

    Phi and Psi come from a fixed catalog of monotone convex upper bounds of
    the step function: "hinge" or "squared_hinge". The sum dominates the
    max-form surrogate, which in turn dominates the zero-one-c loss.
    """
    for name in (phi, psi):
        if name not in _SURROGATE_CATALOG:
            raise ValueError(f"unknown surrogate {name!r}; pick from {sorted(_SURROGATE_CATALOG)}")
    f_val = np.asarray(f_val, dtype=np.float64)
    r_val = np.asarray(r_val, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    out = _SURROGATE_CATALOG[phi](0.5 * p.alpha * (r_val - y * f_val)) + p.cost * _SURROGATE_CATALOG[
        psi
    ](-p.beta * r_val)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class AdvTerms:
    """Worst-case values of the two hinge branches over the eps-ball."""

    a_tilde: float
    b_tilde: float


def adv_terms_linear(
    m: RejectionModel, z: np.ndarray, y: int, eps: float, p: SurrogateParams
) -> AdvTerms:
    """Closed-form branch maxima for a linear model at a feature-space point.

    ``z`` is already featurized; ``eps`` bounds the attacker in the same
    space. The bias coordinates never enter the l1 terms.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    f, r = m.scores_features(z)
    f, r = float(f), float(r)
    zeta_l1 = float(np.abs(m.zeta(y)).sum())
    theta_l1 = float(np.abs(m.theta).sum())
    a = 1.0 + 0.5 * p.alpha * (r - y * f + eps * zeta_l1)
    b = p.cost * (1.0 - p.beta * (r - eps * theta_l1))
    return AdvTerms(a, b)


def adv_loss_mh_linear(
    m: RejectionModel, z: np.ndarray, y: int, eps: float, p: SurrogateParams
) -> float:
    """Exact max of the MH loss over the eps-ball around z (linear model)."""
    t = adv_terms_linear(m, z, y, eps, p)
    return max(t.a_tilde, t.b_tilde, 0.0)


def adv_loss_mh_linear_batch(
    m: RejectionModel, z: np.ndarray, y: np.ndarray, eps: float, p: SurrogateParams
) -> np.ndarray:
    """Vectorized adv_loss_mh_linear over rows of z."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    f, r = m.scores_features(z)
    y = np.asarray(y, dtype=np.float64)
    zeta_l1 = np.where(
        y > 0, np.abs(m.zeta(1)).sum(), np.abs(m.zeta(-1)).sum()
    )
    theta_l1 = np.abs(m.theta).sum()
    a = 1.0 + 0.5 * p.alpha * (r - y * f + eps * zeta_l1)
    b = p.cost * (1.0 - p.beta * (r - eps * theta_l1))
    return np.maximum(np.maximum(a, b), 0.0)
