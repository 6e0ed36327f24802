"""Fidelity-failure scenarios.

A scenario is a binary vector over the tour vertices 0..n; entry i is 1
when the data gathered at target i falls short and its supplemental set
must be visited.  The depot entry is always 0.

Scenario file layout::

    # svdgp scenarios
    mode: sampled               # or enumerated
    n: 4
    weights: true               # false -> uniform weights 1/count
    0110 0.25                   # failure bits for targets 1..n, then weight
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SAMPLED = "sampled"
ENUMERATED = "enumerated"
ENUMERATE_MAX = 20
WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class Scenario:
    omega: tuple[int, ...]

    def __post_init__(self):
        om = tuple(int(v) for v in self.omega)
        object.__setattr__(self, "omega", om)
        if not om or om[0] != 0:
            raise ValueError("depot component of a scenario must be 0")
        if any(v not in (0, 1) for v in om):
            raise ValueError(f"scenario entries must be binary: {om}")

    @property
    def n(self) -> int:
        return len(self.omega) - 1

    @property
    def failed(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.omega) if v)

    def bits(self) -> str:
        return "".join(map(str, self.omega[1:]))

    @classmethod
    def from_bits(cls, bits: str) -> "Scenario":
        return cls((0,) + tuple(int(b) for b in bits))

    @classmethod
    def zeros(cls, n: int) -> "Scenario":
        return cls((0,) * (n + 1))

    @classmethod
    def ones(cls, n: int) -> "Scenario":
        return cls((0,) + (1,) * n)


@dataclass(frozen=True)
class FidelityModel:
    """Independent Bernoulli failure probabilities; ``p[0]`` is the depot."""

    p: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        object.__setattr__(self, "p", p)
        if not p or p[0] != 0.0:
            raise ValueError("depot failure probability must be 0")
        if any(not 0.0 <= v <= 1.0 for v in p):
            raise ValueError("failure probabilities must lie in [0, 1]")

    @property
    def n(self) -> int:
        return len(self.p) - 1

    @classmethod
    def uniform(cls, n: int, p: float) -> "FidelityModel":
        return cls((0.0,) + (float(p),) * n)


@dataclass
class ScenarioSet:
    scenarios: list[Scenario]
    weights: np.ndarray
    mode: str = SAMPLED
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        self.scenarios = list(self.scenarios)
        self.weights = np.asarray(self.weights, dtype=float)
        if not self.scenarios:
            raise ValueError("scenario set is empty")
        if len(self.weights) != len(self.scenarios):
            raise ValueError("one weight per scenario required")
        if np.any(self.weights <= 0.0):
            raise ValueError("scenario weights must be positive")
        if abs(self.weights.sum() - 1.0) > WEIGHT_TOL * max(1, len(self.weights)):
            raise ValueError(f"scenario weights sum to {self.weights.sum()!r}, not 1")
        if len({s.n for s in self.scenarios}) != 1:
            raise ValueError("all scenarios must have the same length")

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(zip(self.scenarios, self.weights))

    def __eq__(self, other):
        if not isinstance(other, ScenarioSet):
            return NotImplemented
        return (self.mode == other.mode and self.scenarios == other.scenarios
                and np.array_equal(self.weights, other.weights))

    @property
    def n(self) -> int:
        return self.scenarios[0].n

    def matrix(self) -> np.ndarray:
        """Scenarios stacked as a (count, n+1) 0/1 array."""
        return np.array([s.omega for s in self.scenarios], dtype=np.int8)

    def merged(self) -> "ScenarioSet":
        """Identical scenarios folded into one entry carrying the summed weight."""
        acc: dict[Scenario, list[float]] = {}
        for s, w in self:
            acc.setdefault(s, []).append(float(w))
        weights = np.array([math.fsum(ws) for ws in acc.values()])
        return ScenarioSet(list(acc), weights, self.mode, self.seed)

    def failure_rates(self) -> np.ndarray:
        """Weighted failure frequency per vertex."""
        return self.weights @ self.matrix()


def probability(model: FidelityModel, s: Scenario) -> float:
    if model.n != s.n:
        raise ValueError(f"model covers {model.n} targets, scenario {s.n}")
    out = 1.0
    for p, w in zip(model.p, s.omega):
        out *= p if w else 1.0 - p
    return out


def sample(model: FidelityModel, count: int, seed: int) -> ScenarioSet:
    """``count`` i.i.d. scenarios weighted 1/count.

    Draws come from ``numpy.random.default_rng(seed)`` (PCG64), one uniform
    per target per scenario in row-major order.
    """
    if count < 1:
        raise ValueError("need at least one scenario")
    rng = np.random.default_rng(seed)
    u = rng.random((count, model.n))
    p = np.asarray(model.p[1:])
    bits = (u < p).astype(int)
    scen = [Scenario((0,) + tuple(row)) for row in bits]
    return ScenarioSet(scen, np.full(count, 1.0 / count), SAMPLED, seed)


def enumerate_scenarios(model: FidelityModel) -> ScenarioSet:
    """All 2^n scenarios with exact product weights; zero-weight ones dropped."""
    n = model.n
    if n > ENUMERATE_MAX:
        raise ValueError(f"enumeration is limited to n <= {ENUMERATE_MAX}, got {n}")
    scen, weights = [], []
    for bits in itertools.product((0, 1), repeat=n):
        s = Scenario((0,) + bits)
        w = probability(model, s)
        if w > 0.0:
            scen.append(s)
            weights.append(w)
    return ScenarioSet(scen, np.array(weights), ENUMERATED)


# --------------------------------------------------------------------------
# file format
# --------------------------------------------------------------------------

class ScenarioFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def dumps(sset: ScenarioSet, weights: bool = True) -> str:
    lines = ["# svdgp scenarios", f"mode: {sset.mode}", f"n: {sset.n}",
             f"weights: {'true' if weights else 'false'}"]
    if sset.seed is not None:
        lines.append(f"seed: {sset.seed}")
    for s, w in sset:
        lines.append(f"{s.bits()} {float(w)!r}" if weights else s.bits())
    return "\n".join(lines) + "\n"


def loads(text: str) -> ScenarioSet:
    header, rows = {}, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line:
            key, _, val = line.partition(":")
            header[key.strip()] = (lineno, val.strip())
        else:
            rows.append((lineno, line.split()))
    for key in ("mode", "n", "weights"):
        if key not in header:
            raise ScenarioFormatError(f"missing header field {key!r}")
    mode = header["mode"][1]
    if mode not in (SAMPLED, ENUMERATED):
        raise ScenarioFormatError(f"unknown mode {mode!r}", header["mode"][0])
    try:
        n = int(header["n"][1])
    except ValueError:
        raise ScenarioFormatError("n must be an integer", header["n"][0]) from None
    has_w = header["weights"][1].lower()
    if has_w not in ("true", "false"):
        raise ScenarioFormatError("weights must be true or false", header["weights"][0])
    has_w = has_w == "true"
    seed = int(header["seed"][1]) if "seed" in header else None
    scen, weights = [], []
    for lineno, toks in rows:
        if len(toks) != (2 if has_w else 1):
            raise ScenarioFormatError("expected 'bits weight'" if has_w else "expected 'bits'", lineno)
        bits = toks[0]
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise ScenarioFormatError(f"scenario must be {n} binary digits, got {bits!r}", lineno)
        scen.append(Scenario.from_bits(bits))
        if has_w:
            try:
                weights.append(float(toks[1]))
            except ValueError:
                raise ScenarioFormatError(f"bad weight {toks[1]!r}", lineno) from None
    if not scen:
        raise ScenarioFormatError("no scenarios listed")
    w = np.array(weights) if has_w else np.full(len(scen), 1.0 / len(scen))
    return ScenarioSet(scen, w, mode, seed)


def save(sset: ScenarioSet, path, weights: bool = True) -> None:
    Path(path).write_text(dumps(sset, weights))


def load(path) -> ScenarioSet:
    return loads(Path(path).read_text())
