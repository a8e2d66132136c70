"""Toy-scale topology gating and template refinement.

``rta_gate`` injects a pooled map summary into detection embeddings through a
sigmoid gate (map embeddings are read, never written). ``spa_refine`` adds a
scene-conditioned offset to each template trajectory through cross-attention
and a residual connection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from .attention import ACTIVATIONS, softmax_rows
from .errors import DimensionMismatch, EmptyMap
from .geometry import Trajectory, finite_difference


def _as_array(x, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-D, got shape {arr.shape}")
    return arr


def self_attention(x: np.ndarray, w_q: np.ndarray, w_k: np.ndarray, w_v: np.ndarray) -> np.ndarray:
    q, k, v = x @ w_q, x @ w_k, x @ w_v
    return softmax_rows(q @ k.T / math.sqrt(k.shape[1])) @ v


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    map_embeddings: np.ndarray  # (N_map, C)
    det_embeddings: np.ndarray  # (N_det, C)

    @property
    def channels(self) -> int:
        return self.map_embeddings.shape[1]


@dataclass(frozen=True, eq=False)
class RTAWeights:
    """Gate self-attention (C x C each), gate bias, and the per-row modulation map.

    A ``gate_bias`` of -inf closes the gate completely.
    """

    attn_q: np.ndarray
    attn_k: np.ndarray
    attn_v: np.ndarray
    gate_bias: np.ndarray
    delta_w: np.ndarray
    delta_b: np.ndarray
    activation: str = "relu"


def rta_gate(emb: EmbeddingSet, weights: RTAWeights, return_gate: bool = False):
    """Gated residual update of the detection embeddings from the map summary.

    Returns the (N_det, C) updated detection embeddings, plus the (C,) gate
    when ``return_gate`` is set.
    """
    e_map = _as_array(emb.map_embeddings, "map_embeddings", 2)
    e_det = _as_array(emb.det_embeddings, "det_embeddings", 2)
    if e_map.shape[0] == 0:
        raise EmptyMap("gating needs at least one map embedding")
    C = e_map.shape[1]
    if e_det.shape[1] != C:
        raise DimensionMismatch(f"det embeddings have {e_det.shape[1]} channels, map has {C}")
    for name in ("attn_q", "attn_k", "attn_v", "delta_w"):
        if np.shape(getattr(weights, name)) != (C, C):
            raise DimensionMismatch(f"{name} must be {C}x{C}")

    scene = e_map.mean(axis=0, keepdims=True)
    attended = self_attention(scene + e_map, weights.attn_q, weights.attn_k, weights.attn_v)
    gate = expit(attended.mean(axis=0) + np.asarray(weights.gate_bias, dtype=float))
    delta = ACTIVATIONS[weights.activation](e_det @ weights.delta_w + weights.delta_b)
    out = e_det + gate * delta
    if return_gate:
        return out, gate
    return out


@dataclass(frozen=True, eq=False)
class SceneContext:
    ego_token: np.ndarray  # (1, D)
    det_tokens: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    map_tokens: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def sequence(self) -> np.ndarray:
        ego = _as_array(self.ego_token, "ego_token", 2)
        D = ego.shape[1]
        parts = [ego]
        for name in ("det_tokens", "map_tokens"):
            tok = np.asarray(getattr(self, name), dtype=float)
            if tok.size == 0:
                continue
            if tok.ndim != 2 or tok.shape[1] != D:
                raise DimensionMismatch(f"{name} must be (n, {D}), got {tok.shape}")
            parts.append(tok)
        return np.vstack(parts)


@dataclass(frozen=True, eq=False)
class SPAWeights:
    """Template projection, context self-attention, cross-attention and decoder.

    ``traj_proj`` maps the flattened (T*2) template to D; ``decoder_w`` maps D
    back to T*2 offsets. Zero decoder weights and bias make refinement the identity.
    """

    traj_proj: np.ndarray  # (2T, D)
    traj_proj_b: np.ndarray  # (D,)
    ctx_q: np.ndarray  # (D, D)
    ctx_k: np.ndarray
    ctx_v: np.ndarray
    cross_q: np.ndarray
    cross_k: np.ndarray
    cross_v: np.ndarray
    decoder_w: np.ndarray  # (D, 2T)
    decoder_b: np.ndarray  # (2T,)

    @property
    def horizon(self) -> int:
        return self.traj_proj.shape[0] // 2

    @property
    def width(self) -> int:
        return self.traj_proj.shape[1]


def spa_offsets(templates: Sequence[Trajectory], context: SceneContext, weights: SPAWeights) -> np.ndarray:
    """(P, T, 2) offsets the decoder proposes for each template."""
    ctx = context.sequence()
    D, T = weights.width, weights.horizon
    if ctx.shape[1] != D:
        raise DimensionMismatch(f"context width {ctx.shape[1]} does not match weights width {D}")
    for i, tr in enumerate(templates):
        if len(tr) != T:
            raise DimensionMismatch(f"templates[{i}] has {len(tr)} samples, weights expect {T}")
    if not templates:
        return np.zeros((0, T, 2))
    ctx = ctx + self_attention(ctx, weights.ctx_q, weights.ctx_k, weights.ctx_v)
    flat = np.stack([tr.positions.reshape(-1) for tr in templates])
    queries = flat @ weights.traj_proj + weights.traj_proj_b
    q = queries @ weights.cross_q
    k = ctx @ weights.cross_k
    v = ctx @ weights.cross_v
    attended = softmax_rows(q @ k.T / math.sqrt(D)) @ v
    return (attended @ weights.decoder_w + weights.decoder_b).reshape(len(templates), T, 2)


def spa_refine(templates: Sequence[Trajectory], context: SceneContext, weights: SPAWeights) -> list[Trajectory]:
    """Residually refined copies of ``templates``.

    Velocities pick up the finite difference of the offsets, so a zero offset
    reproduces the template exactly.
    """
    offsets = spa_offsets(templates, context, weights)
    out = []
    for tr, off in zip(templates, offsets):
        out.append(
            Trajectory(
                tr.dt,
                tr.positions + off,
                tr.headings,
                tr.velocities + finite_difference(off, tr.dt),
            )
        )
    return out
