"""Dubins shortest paths between oriented poses.

Closed-form evaluation of the six Dubins words (LSL, RSR, LSR, RSL, RLR,
LRL) in the normalized frame where the turn radius is 1.  The resulting
lengths are the asymmetric edge costs used by instance generation.
"""
from __future__ import annotations

import math

import numpy as np
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi
SEGMENT_EPS = 1e-12
ANGLE_TOL = 1e-9

WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")


def mod2pi(theta: float) -> float:
    """Wrap an angle to [0, 2*pi)."""
    v = math.fmod(theta, TWO_PI)
    if v < 0.0:
        v += TWO_PI
    # an arc a hair short of a full turn is a zero arc seen through rounding
    if v >= TWO_PI - SEGMENT_EPS:
        v = 0.0
    return v


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError(f"non-finite pose {self!r}")
        object.__setattr__(self, "heading", mod2pi(self.heading))


@dataclass(frozen=True)
class DubinsPath:
    word: str
    segment_lengths: tuple[float, float, float]
    total: float


def _check_radius(r: float) -> float:
    r = float(r)
    if not r > 0.0:
        raise ValueError(f"turn radius must be positive, got {r}")
    return r


def _clamp(v: float) -> float:
    return 0.0 if abs(v) < SEGMENT_EPS else v


def _lsl(d, ca, sa, cb, sb, a, b):
    p2 = 2.0 + d * d - 2.0 * math.cos(a - b) + 2.0 * d * (sa - sb)
    if p2 < 0.0:
        return None
    tmp = math.atan2(cb - ca, d + sa - sb)
    return mod2pi(tmp - a), math.sqrt(p2), mod2pi(b - tmp)


def _rsr(d, ca, sa, cb, sb, a, b):
    p2 = 2.0 + d * d - 2.0 * math.cos(a - b) + 2.0 * d * (sb - sa)
    if p2 < 0.0:
        return None
    tmp = math.atan2(ca - cb, d - sa + sb)
    return mod2pi(a - tmp), math.sqrt(p2), mod2pi(tmp - b)


def _lsr(d, ca, sa, cb, sb, a, b):
    p2 = -2.0 + d * d + 2.0 * math.cos(a - b) + 2.0 * d * (sa + sb)
    if p2 < 0.0:
        return None
    p = math.sqrt(p2)
    tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
    return mod2pi(tmp - a), p, mod2pi(tmp - b)


def _rsl(d, ca, sa, cb, sb, a, b):
    p2 = -2.0 + d * d + 2.0 * math.cos(a - b) - 2.0 * d * (sa + sb)
    if p2 < 0.0:
        return None
    p = math.sqrt(p2)
    tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
    return mod2pi(a - tmp), p, mod2pi(b - tmp)


def _rlr(d, ca, sa, cb, sb, a, b):
    tmp = (6.0 - d * d + 2.0 * math.cos(a - b) + 2.0 * d * (sa - sb)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = mod2pi(TWO_PI - math.acos(tmp))
    t = mod2pi(a - math.atan2(ca - cb, d - sa + sb) + p / 2.0)
    return t, p, mod2pi(a - b - t + p)


def _lrl(d, ca, sa, cb, sb, a, b):
    tmp = (6.0 - d * d + 2.0 * math.cos(a - b) + 2.0 * d * (sb - sa)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = mod2pi(TWO_PI - math.acos(tmp))
    t = mod2pi(-a - math.atan2(ca - cb, d + sa - sb) + p / 2.0)
    return t, p, mod2pi(b - a - t + p)


_WORD_FUNCS = {"LSL": _lsl, "RSR": _rsr, "LSR": _lsr, "RSL": _rsl, "RLR": _rlr, "LRL": _lrl}


def dubins_words(a: Pose, b: Pose, r: float) -> dict[str, DubinsPath]:
    """Every feasible word family for (a, b, r), keyed by word."""
    r = _check_radius(r)
    dx, dy = b.x - a.x, b.y - a.y
    dist = math.hypot(dx, dy)
    out = {}
    if dist < SEGMENT_EPS and abs(math.remainder(b.heading - a.heading, TWO_PI)) < ANGLE_TOL:
        return {"LSL": DubinsPath("LSL", (0.0, 0.0, 0.0), 0.0)}
    d = dist / r
    theta = math.atan2(dy, dx) if dist > 0.0 else 0.0
    alpha = mod2pi(a.heading - theta)
    beta = mod2pi(b.heading - theta)
    args = (d, math.cos(alpha), math.sin(alpha), math.cos(beta), math.sin(beta), alpha, beta)
    for w, fn in _WORD_FUNCS.items():
        res = fn(*args)
        if res is None:
            continue
        segs = tuple(_clamp(s * r) for s in res)
        out[w] = DubinsPath(w, segs, sum(segs))
    return out


def dubins_shortest_path(a: Pose, b: Pose, r: float) -> DubinsPath:
    """Minimum-length Dubins path from ``a`` to ``b`` with turn radius ``r``.

    Ties between word families resolve to the first word in ``WORDS`` order.
    """
    best = None
    for path in dubins_words(a, b, r).values():
        if best is None or path.total < best.total:
            best = path
    return best


def cost(a: Pose, b: Pose, r: float) -> float:
    return dubins_shortest_path(a, b, r).total


def cost_matrix(poses, r: float, rows=None, cols=None):
    """Dense Dubins cost matrix between pose lists (diagonal entries are 0)."""
    rows = list(range(len(poses))) if rows is None else list(rows)
    cols = list(range(len(poses))) if cols is None else list(cols)
    out = np.zeros((len(rows), len(cols)))
    for a_i, i in enumerate(rows):
        for b_j, j in enumerate(cols):
            if i != j:
                out[a_i, b_j] = cost(poses[i], poses[j], r)
    return out
