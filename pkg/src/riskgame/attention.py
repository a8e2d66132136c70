"""Risk-biased sparse cross-attention over agent tokens.

Single head, numpy only. Weights are supplied by the caller (see
``riskgame.io.load_weights``); nothing here is trained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch
from .sparse_game import SparseGameGraph

ACTIVATIONS = {
    "relu": lambda x: np.maximum(x, 0.0),
    "gelu": lambda x: 0.5 * x * (1.0 + np.tanh(math.sqrt(2.0 / math.pi) * (x + 0.044715 * x**3))),
    "tanh": np.tanh,
    "identity": lambda x: x,
}


@dataclass(frozen=True, eq=False)
class AttentionWeights:
    w_q: np.ndarray  # (D_in, d_k)
    w_k: np.ndarray  # (D_in, d_k)
    w_v: np.ndarray  # (D_in, d_k)
    ffn_w1: np.ndarray  # (d_k, hidden)
    ffn_b1: np.ndarray  # (hidden,)
    ffn_w2: np.ndarray  # (hidden, d_k)
    ffn_b2: np.ndarray  # (d_k,)
    ln_gamma: np.ndarray  # (d_k,)
    ln_beta: np.ndarray  # (d_k,)
    beta: float = 2.0
    activation: str = "relu"
    ln_eps: float = 1e-5

    def __post_init__(self):
        for name in ("w_q", "w_k", "w_v", "ffn_w1", "ffn_b1", "ffn_w2", "ffn_b2", "ln_gamma", "ln_beta"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)
        d_in, d_k = self.w_q.shape
        if d_k < 1:
            raise DimensionMismatch("d_k must be >= 1")
        if self.w_k.shape != (d_in, d_k) or self.w_v.shape != (d_in, d_k):
            raise DimensionMismatch(
                f"w_q {self.w_q.shape}, w_k {self.w_k.shape}, w_v {self.w_v.shape} disagree"
            )
        hidden = self.ffn_w1.shape[1]
        expected = {
            "ffn_w1": (d_k, hidden),
            "ffn_b1": (hidden,),
            "ffn_w2": (hidden, d_k),
            "ffn_b2": (d_k,),
            "ln_gamma": (d_k,),
            "ln_beta": (d_k,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionMismatch(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def d_in(self) -> int:
        return self.w_q.shape[0]

    @property
    def d_k(self) -> int:
        return self.w_q.shape[1]

    def with_beta(self, beta: float) -> "AttentionWeights":
        return replace(self, beta=float(beta))


@dataclass(frozen=True, eq=False)
class TokenSet:
    plan_queries: np.ndarray  # (P, D_in)
    agent_tokens: np.ndarray  # (K, D_in)


def softmax_row(logits) -> np.ndarray:
    """Masked, max-shifted softmax. ``-inf`` entries get exactly 0; an all-masked row gives zeros."""
    logits = np.asarray(logits, dtype=float)
    finite = np.isfinite(logits)
    out = np.zeros_like(logits)
    if not finite.any():
        return out
    shifted = logits[finite] - logits[finite].max()
    e = np.exp(shifted)
    out[finite] = e / e.sum()
    return out


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    return np.stack([softmax_row(row) for row in logits]) if len(logits) else np.zeros_like(logits)


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps) * gamma + beta


def feed_forward(x: np.ndarray, weights: AttentionWeights) -> np.ndarray:
    act = ACTIVATIONS[weights.activation]
    return act(x @ weights.ffn_w1 + weights.ffn_b1) @ weights.ffn_w2 + weights.ffn_b2


def attention_logits(
    tokens: TokenSet, graph: SparseGameGraph, weights: AttentionWeights
) -> np.ndarray:
    """Scaled dot-product logits plus the beta-weighted risk prior; inactive pairs are -inf."""
    q = np.asarray(tokens.plan_queries, dtype=float)
    k = np.asarray(tokens.agent_tokens, dtype=float)
    P, K = graph.active.shape
    if q.ndim != 2 or k.ndim != 2:
        raise DimensionMismatch("plan_queries and agent_tokens must be 2-D")
    if q.shape[0] != P or k.shape[0] != K:
        raise DimensionMismatch(
            f"graph is {P}x{K} but tokens give {q.shape[0]} queries and {k.shape[0]} agents"
        )
    if q.shape[1] != weights.d_in or (K and k.shape[1] != weights.d_in):
        raise DimensionMismatch(f"token width must be {weights.d_in}")
    if graph.normalized.shape != (P, K):
        raise DimensionMismatch("graph.normalized does not match graph.active")
    Q = q @ weights.w_q
    Kp = k.reshape(K, weights.d_in) @ weights.w_k
    logits = Q @ Kp.T / math.sqrt(weights.d_k) + weights.beta * graph.normalized
    return np.where(graph.active, logits, -np.inf)


def attention_distribution(tokens: TokenSet, graph: SparseGameGraph, weights: AttentionWeights) -> np.ndarray:
    return softmax_rows(attention_logits(tokens, graph, weights))


def risk_biased_attention(
    tokens: TokenSet,
    graph: SparseGameGraph,
    weights: AttentionWeights,
    return_attention: bool = False,
):
    """Refine the plan queries by attending to the active agents.

    Returns the (P, d_k) refined queries, and the (P, K) attention matrix as
    well when ``return_attention`` is set.
    """
    attn = attention_distribution(tokens, graph, weights)
    K = attn.shape[1]
    values = np.asarray(tokens.agent_tokens, dtype=float).reshape(K, weights.d_in) @ weights.w_v
    pooled = attn @ values
    refined = feed_forward(layer_norm(pooled, weights.ln_gamma, weights.ln_beta, weights.ln_eps), weights)
    if return_attention:
        return refined, attn
    return refined
