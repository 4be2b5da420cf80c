"""Dirichlet-evidence math for single-forward-pass uncertainty.

The network's non-negative outputs are read as evidence e per class;
alpha = e + 1 parameterizes a Dirichlet over the class probabilities.
Total strength S = sum(alpha) yields the predictive uncertainty
u = K / S and expected probabilities p = alpha / S, so an input can be
maximally uncertain (u = 1) even while p looks balanced or confident.

The loss is the expected Brier score under the Dirichlet plus an annealed
KL regularizer that shrinks the evidence of the wrong classes toward the
uniform prior:

    L = sum_k (y_k - p_k)^2 + p_k (1 - p_k) / (S + 1)
        + lambda_t * KL(Dir(y + (1-y) * alpha) || Dir(1, ..., 1))

with lambda_t = min(1, t / kl_anneal_epochs). Gradients are analytic and
verified against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, expit, gammaln, polygamma

from alqa.errors import ContractError


@dataclass(frozen=True)
class EvidentialOutput:
    """Per-instance evidence and derived Dirichlet quantities."""

    evidence: np.ndarray
    alpha: np.ndarray
    strength: float
    uncertainty: float
    probabilities: np.ndarray


def from_evidence(evidence: np.ndarray) -> EvidentialOutput:
    e = np.asarray(evidence, dtype=np.float64)
    if e.ndim != 1 or e.size < 2:
        raise ContractError(f"evidence must be a 1-D vector of K >= 2 classes, got {e.shape}")
    if (e < 0).any():
        raise ContractError("evidence must be non-negative")
    alpha = e + 1.0
    strength = float(alpha.sum())
    return EvidentialOutput(
        evidence=e,
        alpha=alpha,
        strength=strength,
        uncertainty=e.size / strength,
        probabilities=alpha / strength,
    )


def evidence_from_logits(logits: np.ndarray) -> np.ndarray:
    """Softplus keeps evidence non-negative with nonzero gradient everywhere."""
    return np.logaddexp(0.0, logits)


def anneal_coefficient(epoch: int, kl_anneal_epochs: int) -> float:
    if epoch < 0:
        raise ContractError(f"epoch must be >= 0, got {epoch}")
    if kl_anneal_epochs <= 0:
        return 1.0
    return min(1.0, epoch / kl_anneal_epochs)


def _check_onehot(y: np.ndarray, k: int) -> None:
    if y.shape[-1] != k:
        raise ContractError(f"target has {y.shape[-1]} classes, evidence has {k}")
    ok = np.all((y == 0.0) | (y == 1.0)) and np.all(y.sum(axis=-1) == 1.0)
    if not ok:
        raise ContractError("target must be one-hot")


def dirichlet_kl_uniform(alpha: np.ndarray) -> np.ndarray:
    """KL(Dir(alpha) || Dir(1,...,1)) along the last axis."""
    alpha = np.asarray(alpha, dtype=np.float64)
    k = alpha.shape[-1]
    s = alpha.sum(axis=-1, keepdims=True)
    kl = (
        gammaln(s[..., 0])
        - gammaln(float(k))
        - gammaln(alpha).sum(axis=-1)
        + ((alpha - 1.0) * (digamma(alpha) - digamma(s))).sum(axis=-1)
    )
    return kl


def loss_batch(evidence: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Per-sample loss for an (N,K) evidence batch and one-hot targets."""
    e = np.asarray(evidence, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    e2 = np.atleast_2d(e)
    y2 = np.atleast_2d(y)
    _check_onehot(y2, e2.shape[-1])
    if (e2 < 0).any():
        raise ContractError("evidence must be non-negative")
    alpha = e2 + 1.0
    s = alpha.sum(axis=-1, keepdims=True)
    p = alpha / s
    err = ((y2 - p) ** 2).sum(axis=-1)
    var = (p * (1.0 - p)).sum(axis=-1) / (s[..., 0] + 1.0)
    alpha_t = y2 + (1.0 - y2) * alpha
    out = err + var + lam * dirichlet_kl_uniform(alpha_t)
    return out if e.ndim > 1 else out[0]


def loss_grad_batch(
    evidence: np.ndarray, y: np.ndarray, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """(per-sample loss, d loss / d evidence) for an (N,K) batch."""
    e = np.asarray(evidence, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    e2 = np.atleast_2d(e)
    y2 = np.atleast_2d(y)
    _check_onehot(y2, e2.shape[-1])
    if (e2 < 0).any():
        raise ContractError("evidence must be non-negative")
    k = e2.shape[-1]
    alpha = e2 + 1.0
    s = alpha.sum(axis=-1, keepdims=True)
    p = alpha / s

    g = p - y2
    err = (g**2).sum(axis=-1)
    q = (p * (1.0 - p)).sum(axis=-1, keepdims=True)
    var = q[..., 0] / (s[..., 0] + 1.0)

    d_err = (2.0 / s) * (g - (g * p).sum(axis=-1, keepdims=True))
    dq = -(2.0 / s) * (p - (p * p).sum(axis=-1, keepdims=True))
    d_var = dq / (s + 1.0) - q / (s + 1.0) ** 2

    alpha_t = y2 + (1.0 - y2) * alpha
    s_t = alpha_t.sum(axis=-1, keepdims=True)
    kl = dirichlet_kl_uniform(alpha_t)
    d_kl = (1.0 - y2) * (
        (alpha_t - 1.0) * polygamma(1, alpha_t) - (s_t - k) * polygamma(1, s_t)
    )

    loss = err + var + lam * kl
    grad = d_err + d_var + lam * d_kl
    if e.ndim > 1:
        return loss, grad
    return loss[0], grad[0]


def evidential_loss(output: EvidentialOutput, target: np.ndarray, epoch: int,
                    kl_anneal_epochs: int) -> float:
    """Scalar loss for one instance at a given training epoch."""
    lam = anneal_coefficient(epoch, kl_anneal_epochs)
    return float(loss_batch(output.evidence, np.asarray(target, dtype=np.float64), lam))


def logits_loss_and_grad(
    logits: np.ndarray, y: np.ndarray, lam: float
) -> tuple[float, np.ndarray]:
    """Mean batch loss and its gradient w.r.t. the raw logits."""
    evidence = evidence_from_logits(np.asarray(logits, dtype=np.float64))
    loss, d_evidence = loss_grad_batch(evidence, y, lam)
    dlogits = d_evidence * expit(logits) / logits.shape[0]
    return float(loss.mean()), dlogits
