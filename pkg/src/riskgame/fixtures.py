"""Seeded random weight sets for the attention and adapter modules.

The committed fixture files under ``riskgame/data/weights`` were produced by
``write_builtin_fixtures``; tests also call the builders directly with other
seeds and sizes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .adapters import RTAWeights, SPAWeights
from .attention import AttentionWeights
from .planner import TokenEmbedding
from .simulator import ContextEmbedding


def _dense(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))


def attention_arrays(seed: int = 0, d_in: int = 16, d_k: int = 16, hidden: int = 32) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "w_q": _dense(rng, d_in, d_k),
        "w_k": _dense(rng, d_in, d_k),
        "w_v": _dense(rng, d_in, d_k),
        "ffn_w1": _dense(rng, d_k, hidden),
        "ffn_b1": rng.normal(0.0, 0.1, hidden),
        "ffn_w2": _dense(rng, hidden, d_k),
        "ffn_b2": rng.normal(0.0, 0.1, d_k),
        "ln_gamma": 1.0 + rng.normal(0.0, 0.1, d_k),
        "ln_beta": rng.normal(0.0, 0.1, d_k),
        "agent_w": _dense(rng, 6, d_in),
        "agent_b": rng.normal(0.0, 0.1, d_in),
        "plan_w": _dense(rng, 6, d_in),
        "plan_b": rng.normal(0.0, 0.1, d_in),
    }


def attention_weights(seed: int = 0, d_in: int = 16, d_k: int = 16, hidden: int = 32, beta: float = 2.0):
    a = attention_arrays(seed, d_in, d_k, hidden)
    weights = AttentionWeights(
        a["w_q"], a["w_k"], a["w_v"], a["ffn_w1"], a["ffn_b1"], a["ffn_w2"], a["ffn_b2"],
        a["ln_gamma"], a["ln_beta"], beta=beta,
    )
    return weights, TokenEmbedding(a["agent_w"], a["agent_b"], a["plan_w"], a["plan_b"])


def spa_arrays(seed: int = 0, horizon: int = 6, width: int = 16, decoder_scale: float = 0.05) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "traj_proj": _dense(rng, 2 * horizon, width) * 0.1,
        "traj_proj_b": rng.normal(0.0, 0.1, width),
        "ctx_q": _dense(rng, width, width),
        "ctx_k": _dense(rng, width, width),
        "ctx_v": _dense(rng, width, width),
        "cross_q": _dense(rng, width, width),
        "cross_k": _dense(rng, width, width),
        "cross_v": _dense(rng, width, width),
        "decoder_w": _dense(rng, width, 2 * horizon) * decoder_scale,
        "decoder_b": np.zeros(2 * horizon),
        "ego_w": _dense(rng, 3, width),
        "ego_b": rng.normal(0.0, 0.1, width),
        "det_w": _dense(rng, 6, width) * 0.1,
        "det_b": rng.normal(0.0, 0.1, width),
    }


def spa_weights(seed: int = 0, horizon: int = 6, width: int = 16, decoder_scale: float = 0.05):
    a = spa_arrays(seed, horizon, width, decoder_scale)
    weights = SPAWeights(**{k: a[k] for k in (
        "traj_proj", "traj_proj_b", "ctx_q", "ctx_k", "ctx_v",
        "cross_q", "cross_k", "cross_v", "decoder_w", "decoder_b",
    )})
    return weights, ContextEmbedding(a["ego_w"], a["ego_b"], a["det_w"], a["det_b"])


def rta_arrays(seed: int = 0, channels: int = 8) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "attn_q": _dense(rng, channels, channels),
        "attn_k": _dense(rng, channels, channels),
        "attn_v": _dense(rng, channels, channels),
        "gate_bias": rng.normal(0.0, 0.5, channels),
        "delta_w": _dense(rng, channels, channels),
        "delta_b": rng.normal(0.0, 0.1, channels),
    }


def rta_weights(seed: int = 0, channels: int = 8) -> RTAWeights:
    return RTAWeights(**rta_arrays(seed, channels))


def write_builtin_fixtures(directory) -> None:
    from .io import save_weights

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_weights(directory / "attention_d16.json", "attention", attention_arrays(0), {"beta": 2.0, "activation": "relu"})
    save_weights(directory / "spa_t6_d16.json", "spa", spa_arrays(1))
    save_weights(directory / "rta_c8.json", "rta", rta_arrays(2), {"activation": "relu"})
