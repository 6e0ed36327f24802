"""Problem instances: data model, random generator and text file format.

Vertex numbering.  Tour vertices come first: vertex 0 is the depot (or the
source in split mode), vertices 1..n are the targets and, in split mode,
vertex n+1 is the destination.  Supplemental locations follow, target i
owning the contiguous block ``supplementals[i]``.

In split mode the tour is closed by a zero-cost forced edge
destination -> source, so the single-depot tour machinery applies as is.

Instance file layout (``#`` starts a comment, blank lines are ignored)::

    name: demo
    n: 3
    m: 2
    depot_mode: merged          # or split
    turn_radius: 5.0            # optional when costs are explicit
    radius: 5.0                 # optional, generator metadata
    grid: 100.0                 # optional, generator metadata
    seed: 7                     # optional, generator metadata

    [vertices]
    # id role [x y heading]
    0 depot 5.0 5.0 0.3
    1 target 20.0 31.5 2.0
    4 supplemental-of:1 22.0 30.1 5.1

    [c1]                        # optional explicit first-stage block
    - 0 1 2 3                   # column vertex ids
    0 0 4.5 ...                 # row id, then the row

    [c2]                        # optional explicit block over all vertices;
    ...                         # '-' marks pairs outside the second-stage edge set

Roles are ``depot``, ``source``, ``destination``, ``target`` and
``supplemental-of:<target id>``.  Explicit cost blocks take precedence over
pose-derived costs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry
from .geometry import Pose

MERGED = "merged"
SPLIT = "split"


class InstanceFormatError(ValueError):
    """Malformed instance text; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class InstanceValidationError(ValueError):
    """Instance contents violate a structural invariant."""


@dataclass(frozen=True)
class GenConfig:
    n: int
    m: int
    radius: float = 5.0
    grid: float = 100.0
    turn_radius: float = 5.0
    seed: int = 0
    depot_mode: str = SPLIT

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 targets, got n={self.n}")
        if self.m < 1:
            raise ValueError(f"need at least 1 supplemental per target, got m={self.m}")
        if not self.radius > 0:
            raise ValueError("supplemental radius must be positive")
        if not self.grid > 0:
            raise ValueError("grid side must be positive")
        if not self.turn_radius > 0:
            raise ValueError("turn radius must be positive")
        if self.depot_mode not in (MERGED, SPLIT):
            raise ValueError(f"unknown depot mode {self.depot_mode!r}")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class Instance:
    """Immutable SVDGP instance.

    ``c1`` is the first-stage cost matrix over tour vertices; ``c2`` is the
    second-stage matrix over all vertices with NaN outside the second-stage
    edge set.  Use :meth:`cost2` for checked access.
    """

    def __init__(self, *, n, m, supplementals, c1, c2, depot_mode=MERGED, poses=None,
                 turn_radius=None, name="instance", radius=None, grid=None, seed=None):
        self.name = str(name)
        self.n = int(n)
        self.m = int(m)
        self.depot_mode = depot_mode
        self.poses = None if poses is None else tuple(poses)
        self.turn_radius = None if turn_radius is None else float(turn_radius)
        self.radius = None if radius is None else float(radius)
        self.grid = None if grid is None else float(grid)
        self.seed = None if seed is None else int(seed)
        self.supplementals = tuple(tuple(int(v) for v in s) for s in supplementals)
        c1 = np.array(c1, dtype=float)
        if c1.ndim == 2 and c1.shape[0] == c1.shape[1]:
            np.fill_diagonal(c1, 0.0)  # self-loops carry no cost
        self.c1 = _frozen(c1)
        t, v = self.tour_size, self.num_vertices
        c2 = np.array(c2, dtype=float)
        if c2.shape != (v, v) or self.c1.shape != (t, t) or len(self.supplementals) != t:
            raise InstanceValidationError(
                f"matrix shapes c1={self.c1.shape}, c2={c2.shape} do not fit n={self.n}, m={self.m}")
        self._mask = _e2_mask(self)
        # second-stage entries left blank on first-stage edges default to c1
        block = c2[:t, :t]
        blank = np.isnan(block)
        block[blank] = self.c1[blank]
        self.c2 = _frozen(np.where(self._mask, c2, np.nan))
        self.validate()

    # -- structure ---------------------------------------------------------

    @property
    def tour_size(self) -> int:
        return self.n + (2 if self.depot_mode == SPLIT else 1)

    @property
    def num_vertices(self) -> int:
        return self.tour_size + self.n * self.m

    @property
    def targets(self) -> range:
        return range(1, self.n + 1)

    @property
    def destination(self) -> int:
        return self.n + 1 if self.depot_mode == SPLIT else 0

    @property
    def forced_edges(self) -> tuple[tuple[int, int], ...]:
        return ((self.destination, 0),) if self.depot_mode == SPLIT else ()

    def role(self, v: int) -> str:
        if v == 0:
            return "source" if self.depot_mode == SPLIT else "depot"
        if v <= self.n:
            return "target"
        if self.depot_mode == SPLIT and v == self.n + 1:
            return "destination"
        return f"supplemental-of:{self.owner(v)}"

    def owner(self, v: int) -> int:
        return 1 + (v - self.tour_size) // self.m

    def in_e2(self, i: int, j: int) -> bool:
        return bool(self._mask[i, j])

    def cost2(self, i: int, j: int) -> float:
        if not self._mask[i, j]:
            raise KeyError(f"edge ({i}, {j}) is not a second-stage edge")
        return float(self.c2[i, j])

    def validate(self) -> None:
        t, v = self.tour_size, self.num_vertices
        if self.n < 2:
            raise InstanceValidationError("need at least 2 targets")
        if self.m < 1:
            raise InstanceValidationError("need at least 1 supplemental per target")
        if len(self.supplementals) != t:
            raise InstanceValidationError("supplemental table must cover every tour vertex")
        for i in range(t):
            want = self.m if 1 <= i <= self.n else 0
            if len(self.supplementals[i]) != want:
                raise InstanceValidationError(
                    f"target {i} has {len(self.supplementals[i])} supplemental(s), expected {want}")
        if self.c1.shape != (t, t):
            raise InstanceValidationError(f"c1 must be {t}x{t}, got {self.c1.shape}")
        if self.c2.shape != (v, v):
            raise InstanceValidationError(f"c2 must be {v}x{v}, got {self.c2.shape}")
        off = ~np.eye(t, dtype=bool)
        if not np.all(np.isfinite(self.c1[off])) or np.any(self.c1[off] < 0):
            raise InstanceValidationError("c1 entries must be finite and non-negative")
        vals = self.c2[self._mask]
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise InstanceValidationError("c2 entries on second-stage edges must be finite and non-negative")
        e1 = self.c2[:t, :t]
        if not np.array_equal(e1[off], self.c1[off]):
            raise InstanceValidationError("c2 must repeat c1 on first-stage edges")
        if self.poses is not None and len(self.poses) != v:
            raise InstanceValidationError(f"expected {v} poses, got {len(self.poses)}")

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        keys = ("name", "n", "m", "depot_mode", "poses", "turn_radius", "radius", "grid",
                "seed", "supplementals")
        return (all(getattr(self, k) == getattr(other, k) for k in keys)
                and np.array_equal(self.c1, other.c1)
                and np.array_equal(self.c2, other.c2, equal_nan=True))

    def __repr__(self):
        return f"Instance(name={self.name!r}, n={self.n}, m={self.m}, depot_mode={self.depot_mode!r})"


def _layout(n: int, m: int, depot_mode: str) -> tuple[int, list[tuple[int, ...]]]:
    t = n + (2 if depot_mode == SPLIT else 1)
    supp = [()] * t
    for i in range(1, n + 1):
        start = t + (i - 1) * m
        supp[i] = tuple(range(start, start + m))
    return t, supp


def _e2_mask(inst: Instance) -> np.ndarray:
    t, v = inst.tour_size, inst.num_vertices
    mask = np.zeros((v, v), dtype=bool)
    mask[:t, :t] = True
    for i, s in enumerate(inst.supplementals):
        if not s:
            continue
        s = np.asarray(s)
        mask[i, s] = True
        mask[np.ix_(s, s)] = True
        mask[s, :t] = True
    np.fill_diagonal(mask, False)
    return mask


def costs_from_poses(n, m, depot_mode, poses, turn_radius):
    """First- and second-stage matrices from Dubins lengths."""
    t, supp = _layout(n, m, depot_mode)
    v = t + n * m
    c1 = geometry.cost_matrix(poses[:t], turn_radius)
    c2 = np.full((v, v), np.nan)
    c2[:t, :t] = c1
    for i in range(1, n + 1):
        for a in supp[i]:
            c2[i, a] = geometry.cost(poses[i], poses[a], turn_radius)
            for b in supp[i]:
                if a != b:
                    c2[a, b] = geometry.cost(poses[a], poses[b], turn_radius)
            for j in range(t):
                c2[a, j] = geometry.cost(poses[a], poses[j], turn_radius)
    if depot_mode == SPLIT:
        c1[n + 1, 0] = 0.0
        c2[n + 1, 0] = 0.0
    np.fill_diagonal(c1, 0.0)
    np.fill_diagonal(c2, np.nan)
    return c1, c2, supp


def generate(config: GenConfig, name: str | None = None) -> Instance:
    """Random instance on a square grid with Dubins edge costs.

    Targets are uniform on the grid; each supplemental is uniform in the disk
    of radius ``config.radius`` around its target, clipped to the grid.  The
    depot (or source) sits at 5% of the grid side on both axes and the split
    mode destination at 95%.  Every vertex gets a uniform heading.
    Randomness comes from ``numpy.random.default_rng(seed)`` (PCG64).
    """
    n, m, g = config.n, config.m, config.grid
    rng = np.random.default_rng(config.seed)
    t, supp = _layout(n, m, config.depot_mode)
    targets = rng.uniform(0.0, g, size=(n, 2))
    rad = config.radius * np.sqrt(rng.uniform(0.0, 1.0, size=(n, m)))
    ang = rng.uniform(0.0, 2.0 * math.pi, size=(n, m))
    offsets = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)
    supp_xy = np.clip(targets[:, None, :] + offsets, 0.0, g).reshape(n * m, 2)
    xy = np.zeros((t + n * m, 2))
    xy[0] = (0.05 * g, 0.05 * g)
    xy[1:n + 1] = targets
    if config.depot_mode == SPLIT:
        xy[n + 1] = (0.95 * g, 0.95 * g)
    xy[t:] = supp_xy
    headings = rng.uniform(0.0, 2.0 * math.pi, size=len(xy))
    poses = [Pose(float(x), float(y), float(h)) for (x, y), h in zip(xy, headings)]
    c1, c2, supp = costs_from_poses(n, m, config.depot_mode, poses, config.turn_radius)
    return Instance(
        name=name or f"svdgp-n{n}-m{m}-R{config.radius:g}-s{config.seed}",
        n=n, m=m, supplementals=supp, c1=c1, c2=c2, depot_mode=config.depot_mode,
        poses=poses, turn_radius=config.turn_radius, radius=config.radius,
        grid=config.grid, seed=config.seed,
    )


def from_matrices(c1, c2, m: int, depot_mode: str = MERGED, name: str = "instance") -> Instance:
    """Instance from explicit matrices laid out in the standard vertex order."""
    c1 = np.asarray(c1, dtype=float)
    n = c1.shape[0] - (2 if depot_mode == SPLIT else 1)
    _, supp = _layout(n, m, depot_mode)
    return Instance(n=n, m=m, supplementals=supp, c1=c1, c2=c2, depot_mode=depot_mode, name=name)


# --------------------------------------------------------------------------
# text format
# --------------------------------------------------------------------------

_HEADER_KEYS = ("name", "n", "m", "depot_mode", "turn_radius", "radius", "grid", "seed")


def _fmt(x: float) -> str:
    return repr(float(x))


def _matrix_block(title, mat, ids, mask=None):
    lines = [f"[{title}]", "- " + " ".join(map(str, ids))]
    for r, i in enumerate(ids):
        row = []
        for c, j in enumerate(ids):
            ok = i != j and (mask is None or mask[i, j])
            row.append(_fmt(mat[r, c]) if ok else "-")
        lines.append(f"{i} " + " ".join(row))
    return lines


def dumps(inst: Instance, explicit_costs: bool | None = None) -> str:
    """Serialize ``inst``.  Cost blocks are written when there are no poses
    or when ``explicit_costs`` is true."""
    if explicit_costs is None:
        explicit_costs = inst.poses is None
    lines = ["# svdgp instance"]
    for key in _HEADER_KEYS:
        val = getattr(inst, key)
        if val is None:
            continue
        lines.append(f"{key}: {_fmt(val) if isinstance(val, float) else val}")
    lines += ["", "[vertices]", "# id role x y heading"]
    for v in range(inst.num_vertices):
        rec = f"{v} {inst.role(v)}"
        if inst.poses is not None:
            p = inst.poses[v]
            rec += f" {_fmt(p.x)} {_fmt(p.y)} {_fmt(p.heading)}"
        lines.append(rec)
    if explicit_costs:
        lines.append("")
        lines += _matrix_block("c1", inst.c1, list(range(inst.tour_size)))
        lines.append("")
        lines += _matrix_block("c2", inst.c2, list(range(inst.num_vertices)), inst._mask)
    return "\n".join(lines) + "\n"


def _parse_num(tok, lineno, what, cast=float):
    try:
        return cast(tok)
    except ValueError:
        raise InstanceFormatError(f"bad {what} {tok!r}", lineno) from None


def _parse_matrix(rows, size, title):
    if not rows:
        raise InstanceFormatError(f"[{title}] block is empty")
    lineno, head = rows[0]
    if head[0] != "-":
        raise InstanceFormatError(f"[{title}] header row must start with '-'", lineno)
    cols = [_parse_num(t, lineno, "vertex id", int) for t in head[1:]]
    if cols != list(range(size)):
        raise InstanceFormatError(f"[{title}] columns must be vertex ids 0..{size - 1}", lineno)
    mat = np.full((size, size), np.nan)
    seen = set()
    for lineno, toks in rows[1:]:
        i = _parse_num(toks[0], lineno, "vertex id", int)
        if not 0 <= i < size or i in seen:
            raise InstanceFormatError(f"[{title}] unexpected row id {i}", lineno)
        seen.add(i)
        if len(toks) != size + 1:
            raise InstanceFormatError(f"[{title}] row {i} has {len(toks) - 1} entries, expected {size}", lineno)
        for j, tok in enumerate(toks[1:]):
            if tok != "-":
                mat[i, j] = _parse_num(tok, lineno, f"[{title}] entry ({i}, {j})")
    if len(seen) != size:
        missing = sorted(set(range(size)) - seen)
        raise InstanceFormatError(f"[{title}] missing rows for vertices {missing}")
    return mat


def loads(text: str) -> Instance:
    header, sections, current = {}, {}, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in ("vertices", "c1", "c2"):
                raise InstanceFormatError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise InstanceFormatError(f"duplicate section [{current}]", lineno)
            sections[current] = []
            continue
        if current is None:
            key, sep, val = line.partition(":")
            key = key.strip()
            if not sep or key not in _HEADER_KEYS:
                raise InstanceFormatError(f"expected 'key: value' header, got {line!r}", lineno)
            header[key] = (lineno, val.strip())
        else:
            sections[current].append((lineno, line.split()))

    def get(key, cast, default=None, required=False):
        if key not in header:
            if required:
                raise InstanceFormatError(f"missing header field {key!r}")
            return default
        lineno, val = header[key]
        return _parse_num(val, lineno, key, cast)

    n = get("n", int, required=True)
    m = get("m", int, required=True)
    depot_mode = header.get("depot_mode", (None, MERGED))[1]
    if depot_mode not in (MERGED, SPLIT):
        raise InstanceFormatError(f"unknown depot_mode {depot_mode!r}", header["depot_mode"][0])
    if n < 2 or m < 1:
        raise InstanceValidationError(f"need n >= 2 and m >= 1, got n={n}, m={m}")
    t, supp = _layout(n, m, depot_mode)
    nv = t + n * m
    if "vertices" not in sections:
        raise InstanceFormatError("missing [vertices] section")

    by_id = {}
    for lineno, toks in sections["vertices"]:
        if len(toks) not in (2, 5):
            raise InstanceFormatError("vertex record needs 'id role' or 'id role x y heading'", lineno)
        vid = _parse_num(toks[0], lineno, "vertex id", int)
        if vid in by_id:
            raise InstanceFormatError(f"duplicate vertex id {vid}", lineno)
        pose = None
        if len(toks) == 5:
            x, y, h = (_parse_num(tok, lineno, "coordinate") for tok in toks[2:])
            try:
                pose = Pose(x, y, h)
            except ValueError as exc:
                raise InstanceFormatError(str(exc), lineno) from None
        by_id[vid] = (lineno, toks[1], pose)

    # supplemental membership is checked per target before anything else
    counts = {i: 0 for i in range(1, n + 1)}
    for vid, (lineno, role, _) in by_id.items():
        if role.startswith("supplemental-of:"):
            owner = _parse_num(role.split(":", 1)[1], lineno, "owner id", int)
            if owner not in counts:
                raise InstanceFormatError(f"supplemental {vid} names unknown target {owner}", lineno)
            counts[owner] += 1
    for i, c in counts.items():
        if c != m:
            raise InstanceValidationError(f"target {i} lists {c} supplemental(s), expected m={m}")

    expected_roles = {}
    for v in range(t):
        expected_roles[v] = ("source" if depot_mode == SPLIT else "depot") if v == 0 else "target"
    if depot_mode == SPLIT:
        expected_roles[n + 1] = "destination"
    for i in range(1, n + 1):
        for s in supp[i]:
            expected_roles[s] = f"supplemental-of:{i}"
    for v in range(nv):
        if v not in by_id:
            raise InstanceValidationError(f"missing vertex record {v} ({expected_roles[v]})")
        lineno, role, _ = by_id[v]
        if role != expected_roles[v]:
            raise InstanceFormatError(f"vertex {v} has role {role!r}, expected {expected_roles[v]!r}", lineno)
    if len(by_id) != nv:
        extra = sorted(set(by_id) - set(range(nv)))
        raise InstanceValidationError(f"unexpected vertex ids {extra}")

    pose_list = [by_id[v][2] for v in range(nv)]
    has_poses = all(p is not None for p in pose_list)
    if not has_poses and any(p is not None for p in pose_list):
        raise InstanceValidationError("either every vertex has a pose or none does")
    poses = pose_list if has_poses else None
    turn_radius = get("turn_radius", float)

    c1 = _parse_matrix(sections["c1"], t, "c1") if "c1" in sections else None
    c2 = _parse_matrix(sections["c2"], nv, "c2") if "c2" in sections else None
    if c1 is None or c2 is None:
        if poses is None or turn_radius is None:
            raise InstanceValidationError("costs need explicit [c1]/[c2] blocks or poses plus turn_radius")
        p1, p2, _ = costs_from_poses(n, m, depot_mode, poses, turn_radius)
        c1 = p1 if c1 is None else c1
        c2 = p2 if c2 is None else c2
    np.fill_diagonal(c1, 0.0)
    return Instance(
        name=header.get("name", (None, "instance"))[1], n=n, m=m, supplementals=supp, c1=c1,
        c2=c2, depot_mode=depot_mode, poses=poses, turn_radius=turn_radius,
        radius=get("radius", float), grid=get("grid", float), seed=get("seed", int),
    )


def save(inst: Instance, path, explicit_costs: bool | None = None) -> None:
    Path(path).write_text(dumps(inst, explicit_costs))


def load(path) -> Instance:
    return loads(Path(path).read_text())
