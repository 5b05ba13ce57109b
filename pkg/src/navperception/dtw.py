"""Dynamic time warping and minimum-distance word classification.

Grid point ``(i, j)`` pairs frame ``i`` of the first sequence with frame
``j`` of the second. Two local path rules are available:

``symmetric``
    predecessors ``(i, j-1)``, ``(i-1, j-1)``, ``(i-1, j)``; the diagonal
    step costs twice the local distance.
``asymmetric``
    predecessors ``(i, j-1)``, ``(i-1, j-1)``, ``(i-2, j-1)`` with unit
    weights, so every step advances ``j`` by exactly one frame.

Both start at ``(0, 0)`` with cost ``d(0, 0)`` and end at the top-right
corner. Accumulated distances are not length-normalised.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DtwMode",
    "DtwResult",
    "classify",
    "dtw_distance",
    "local_distance",
    "local_distance_matrix",
    "path_cost",
]


class DtwMode(enum.Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"

    def __str__(self):
        return self.value


# backpointer codes -> (di, dj, weight)
STEPS = {
    DtwMode.SYMMETRIC: {0: (0, 1, 1.0), 1: (1, 1, 2.0), 2: (1, 0, 1.0)},
    DtwMode.ASYMMETRIC: {0: (0, 1, 1.0), 1: (1, 1, 1.0), 2: (2, 1, 1.0)},
}
START = -1
UNREACHABLE = -2


@dataclass(frozen=True)
class DtwResult:
    distance: float
    path: list[tuple[int, int]]
    backpointers: np.ndarray


def local_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"feature dimensions differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def local_distance_matrix(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Euclidean distance between every frame (column) of ``w`` and of ``x``."""
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.ndim != 2 or x.ndim != 2:
        raise ValueError("feature matrices must be channels x frames")
    if w.shape[0] != x.shape[0]:
        raise ValueError(f"channel counts differ: {w.shape[0]} vs {x.shape[0]}")
    if w.shape[1] == 0 or x.shape[1] == 0:
        raise ValueError("empty feature sequence")
    diff = w.T[:, None, :] - x.T[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def dtw_distance(w: np.ndarray, x: np.ndarray,
                 mode: DtwMode = DtwMode.SYMMETRIC) -> DtwResult:
    """Align ``w`` (TW frames) with ``x`` (TX frames).

    Ties between predecessors go to the diagonal under the symmetric rule
    (then horizontal, then vertical) and to the smallest ``i`` step under
    the asymmetric rule, so ``dtw_distance(W, W)`` walks the diagonal.
    Under the asymmetric rule the end point is unreachable when
    ``TW - 1 > 2 (TX - 1)``; the result then has infinite distance and an
    empty path.
    """
    mode = DtwMode(mode)
    dist = local_distance_matrix(w, x).tolist()
    tw, tx = len(dist), len(dist[0])
    inf = math.inf
    acc = [[inf] * tx for _ in range(tw)]
    back = [[UNREACHABLE] * tx for _ in range(tw)]
    acc[0][0] = dist[0][0]
    back[0][0] = START

    if mode is DtwMode.SYMMETRIC:
        for i in range(1, tw):
            acc[i][0] = acc[i - 1][0] + dist[i][0]
            back[i][0] = 2
        for j in range(1, tx):
            acc[0][j] = acc[0][j - 1] + dist[0][j]
            back[0][j] = 0
            for i in range(1, tw):
                d = dist[i][j]
                best = acc[i - 1][j - 1] + 2.0 * d
                code = 1
                cand = acc[i][j - 1] + d
                if cand < best:
                    best, code = cand, 0
                cand = acc[i - 1][j] + d
                if cand < best:
                    best, code = cand, 2
                acc[i][j] = best
                back[i][j] = code
    else:
        for j in range(1, tx):
            for i in range(tw):
                best = acc[i][j - 1]
                code = 0
                for p in (1, 2):
                    if i - p >= 0 and acc[i - p][j - 1] < best:
                        best, code = acc[i - p][j - 1], p
                if best < inf:
                    acc[i][j] = best + dist[i][j]
                    back[i][j] = code

    backpointers = np.array(back, dtype=np.int8)
    total = acc[tw - 1][tx - 1]
    if total == inf:
        return DtwResult(inf, [], backpointers)

    steps = STEPS[mode]
    i, j = tw - 1, tx - 1
    path = [(i, j)]
    while back[i][j] != START:
        di, dj, _ = steps[back[i][j]]
        i, j = i - di, j - dj
        path.append((i, j))
    path.reverse()
    return DtwResult(total, path, backpointers)


def path_cost(w: np.ndarray, x: np.ndarray, path, mode: DtwMode = DtwMode.SYMMETRIC) -> float:
    """Weighted cost of an explicit path; raises on illegal steps."""
    mode = DtwMode(mode)
    dist = local_distance_matrix(w, x)
    weights = {(di, dj): wt for di, dj, wt in STEPS[mode].values()}
    if not path or tuple(path[0]) != (0, 0):
        raise ValueError("path must start at (0, 0)")
    if tuple(path[-1]) != (dist.shape[0] - 1, dist.shape[1] - 1):
        raise ValueError("path must end at the last grid point")
    total = dist[0, 0]
    for (i0, j0), (i1, j1) in zip(path, path[1:]):
        step = (i1 - i0, j1 - j0)
        if step not in weights:
            raise ValueError(f"illegal step {step} from {(i0, j0)}")
        total += weights[step] * dist[i1, j1]
    return float(total)


def classify(unknown: np.ndarray, library, mode: DtwMode = DtwMode.SYMMETRIC):
    """Nearest template by accumulated DTW distance.

    ``library`` is a ``TemplateLibrary`` or any iterable of
    ``(label, features)``. The unknown utterance is the first DTW sequence,
    the template the second. Returns ``(label, distance, distances)`` with
    ``distances`` a list of ``(label, distance)`` in library order; ties go
    to the earlier template.
    """
    entries = list(library)
    if not entries:
        raise ValueError("template library is empty")
    unknown = np.asarray(unknown, dtype=np.float64)
    distances = []
    best_label, best = None, math.inf
    for label, template in entries:
        if np.shape(template)[0] != unknown.shape[0]:
            raise ValueError(
                f"template {label!r} has {np.shape(template)[0]} channels, "
                f"input has {unknown.shape[0]}"
            )
        d = dtw_distance(unknown, template, mode).distance
        distances.append((label, d))
        if best_label is None or d < best:
            best_label, best = label, d
    return best_label, best, distances
