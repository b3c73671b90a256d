"""Per-track appearance state: decaying EMA of embeddings and cosine costs.

The embedding is a unit vector updated as e <- normalize(a' * e + (1 - a') * f)
whenever a freshly extracted feature f arrives. While extractions are
skipped, the effective weight a' is multiplied by the base alpha once per
frame, so the old average keeps losing significance exactly as it would
have under per-frame updates (a' = alpha^(k+1) after k skipped frames).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIT_NORM_ATOL = 1e-6


def feature(values) -> np.ndarray:
    """Normalize raw values into a unit-norm float64 feature vector."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty feature vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector has non-finite entries")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("zero-norm feature vector")
    return v / norm


def _check_unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if abs(float(np.linalg.norm(v)) - 1.0) > UNIT_NORM_ATOL:
        raise ValueError("feature vector must be unit-norm")
    return v


@dataclass
class EmaState:
    """Unit embedding plus the decayed blend weight bookkeeping."""

    embedding: np.ndarray
    base_alpha: float
    effective_alpha: float
    frames_since_feature: int


def init_ema(f, base_alpha: float) -> EmaState:
    """First feature seeds the embedding directly; no prior average to blend."""
    if not 0.0 < base_alpha < 1.0:
        raise ValueError(f"base_alpha must be in (0, 1), got {base_alpha!r}")
    return EmaState(_check_unit(f), base_alpha, base_alpha, 0)


def mark_skipped(s: EmaState) -> EmaState:
    """One frame passed without a fresh feature: decay the blend weight."""
    return EmaState(
        s.embedding,
        s.base_alpha,
        s.effective_alpha * s.base_alpha,
        s.frames_since_feature + 1,
    )


def ema_update(s: EmaState, f) -> EmaState:
    """Blend a freshly extracted feature in and reset the decay."""
    f = _check_unit(f)
    blended = s.effective_alpha * s.embedding + (1.0 - s.effective_alpha) * f
    norm = float(np.linalg.norm(blended))
    if norm == 0.0:
        raise ValueError("blended embedding cancelled to zero")
    return EmaState(blended / norm, s.base_alpha, s.base_alpha, 0)


def cosine_distance(a, b) -> float:
    """1 - a.b for unit vectors, clipped to [0, 2] against rounding."""
    return float(min(max(1.0 - float(np.dot(a, b)), 0.0), 2.0))


def appearance_cost_matrix(
    tracks: list[EmaState],
    dets: list[np.ndarray | None],
    copies: dict[int, int],
) -> np.ndarray:
    """Cosine-distance matrix of track embeddings vs detection features.

    A detection listed in `copies` carries no feature of its own; it behaves
    as if it carried its candidate track's embedding, which makes its cost
    to the candidate exactly zero and to every other track the inter-track
    embedding distance.
    """
    for j, c in copies.items():
        if not 0 <= j < len(dets):
            raise ValueError(f"copy entry for unknown detection {j}")
        if dets[j] is not None:
            raise ValueError(f"detection {j} has a feature and a copy entry")
        if not 0 <= c < len(tracks):
            raise ValueError(f"copy candidate {c} out of range")
    cost = np.zeros((len(tracks), len(dets)))
    for j, f in enumerate(dets):
        if f is not None:
            for i, t in enumerate(tracks):
                cost[i, j] = cosine_distance(t.embedding, f)
        elif j in copies:
            c = copies[j]
            for i, t in enumerate(tracks):
                cost[i, j] = (
                    0.0
                    if i == c
                    else cosine_distance(t.embedding, tracks[c].embedding)
                )
        else:
            raise ValueError(f"detection {j} has neither a feature nor a copy")
    return cost
