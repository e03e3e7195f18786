"""Discrete Fréchet distance between polylines (Eiter-Mannila recurrence)."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


def discrete_frechet(P, Q) -> float:
    """Coupling distance between two vertex sequences of equal dimension."""
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    if len(P) == 0 or len(Q) == 0:
        raise ValueError("polylines must be non-empty")
    d = cdist(P, Q)
    n, m = d.shape
    ca = np.empty((n, m))
    ca[0, 0] = d[0, 0]
    for j in range(1, m):
        ca[0, j] = max(ca[0, j - 1], d[0, j])
    for i in range(1, n):
        ca[i, 0] = max(ca[i - 1, 0], d[i, 0])
        row_prev = ca[i - 1]
        row = ca[i]
        for j in range(1, m):
            row[j] = max(min(row_prev[j], row_prev[j - 1], row[j - 1]), d[i, j])
    return float(ca[-1, -1])


def polyline_length(P) -> float:
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    if len(P) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(P, axis=0), axis=1).sum())


def resample_polyline(P, n: int) -> np.ndarray:
    """Arc-length-uniform resampling to ``n`` vertices (n >= 2)."""
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    if len(P) == 1:
        return np.repeat(P, n, axis=0)
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    arcs = np.concatenate([[0.0], np.cumsum(seg)])
    total = arcs[-1]
    if total <= 0:
        return np.repeat(P[:1], n, axis=0)
    s = np.linspace(0.0, total, n)
    out = np.empty((n, P.shape[1]))
    for d in range(P.shape[1]):
        out[:, d] = np.interp(s, arcs, P[:, d])
    return out


def alignment_score(executed, instructed, samples: int = 256) -> float:
    """1 - Fréchet distance normalized by the instructed path length, in [0, 1].

    Both polylines are resampled uniformly first: the discrete distance
    between a dense track and its own sparse vertex list would otherwise be
    dominated by half the vertex spacing rather than actual deviation.
    Degenerate instructions (single point) fall back to a 1 cm scale so a
    perfect reach still scores 1.
    """
    instructed = np.atleast_2d(np.asarray(instructed, dtype=np.float64))
    executed = np.atleast_2d(np.asarray(executed, dtype=np.float64))
    norm = polyline_length(instructed)
    if norm <= 0:
        norm = 0.01
    df = discrete_frechet(
        resample_polyline(executed, samples), resample_polyline(instructed, samples)
    )
    return float(np.clip(1.0 - df / norm, 0.0, 1.0))
