"""Top-M agent selection per plan and min-max normalisation of the risk matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .risk import RiskMatrix

DEGENERATE_RANGE = 1e-12


@dataclass(frozen=True, eq=False)
class SparseGameGraph:
    """Active plan/agent interactions and their normalised risk.

    ``active`` and ``normalized`` are (P, K); ``normalized`` is zero wherever
    ``active`` is False.
    """

    top_m: int
    active: np.ndarray
    normalized: np.ndarray


def select_top_m(risk: RiskMatrix | np.ndarray, m: int) -> np.ndarray:
    """Mask of the ``m`` riskiest agents in each row; ties go to the lower index."""
    if m < 1:
        raise ValueError(f"top_m must be >= 1, got {m}")
    values = risk.values if isinstance(risk, RiskMatrix) else np.asarray(risk, dtype=float)
    P, K = values.shape
    mask = np.zeros((P, K), dtype=bool)
    if K == 0:
        return mask
    # stable sort on the negated values keeps index order among equal risks
    order = np.argsort(-values, axis=1, kind="stable")[:, : min(m, K)]
    np.put_along_axis(mask, order, True, axis=1)
    return mask


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi - lo > DEGENERATE_RANGE:
        return (values - lo) / (hi - lo)
    return np.zeros_like(values)


def normalize_risk(risk: RiskMatrix | np.ndarray, mask: np.ndarray, scope: str = "global") -> np.ndarray:
    """Min-max normalise the active entries into [0, 1]; inactive entries are 0.

    ``scope="global"`` pools every active entry of the matrix; ``"per-row"``
    normalises each plan's row on its own. A degenerate range maps to 0.
    """
    values = risk.values if isinstance(risk, RiskMatrix) else np.asarray(risk, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros_like(values, dtype=float)
    if not mask.any():
        return out
    if scope == "global":
        out[mask] = _minmax(values[mask])
    elif scope == "per-row":
        for p in range(values.shape[0]):
            if mask[p].any():
                out[p, mask[p]] = _minmax(values[p, mask[p]])
    else:
        raise ValueError(f"unknown normalization scope {scope!r}")
    return out


def build_graph(risk: RiskMatrix, m: int, scope: str = "global") -> SparseGameGraph:
    mask = select_top_m(risk, m)
    return SparseGameGraph(top_m=m, active=mask, normalized=normalize_risk(risk, mask, scope))
