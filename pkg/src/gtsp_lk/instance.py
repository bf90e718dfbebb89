"""GTSP instances: representation, TSPLIB-style parsing and serialization,
edge weight evaluation and the TSP -> GTSP clustering procedure."""

from __future__ import annotations

import io
import math
import os
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

WEIGHT_KINDS = ("EUC_2D", "CEIL_2D", "GEO", "ATT", "EXPLICIT")
EXPLICIT_FORMATS = (
    "FULL_MATRIX",
    "UPPER_ROW",
    "LOWER_ROW",
    "UPPER_DIAG_ROW",
    "LOWER_DIAG_ROW",
    "UPPER_COL",
    "LOWER_COL",
    "UPPER_DIAG_COL",
    "LOWER_DIAG_COL",
)

# TSPLIB uses this truncated constant for GEO distances.
_GEO_PI = 3.141592
_GEO_RADIUS = 6378.388


class InstanceFormatError(ValueError):
    """Raised when an instance file does not follow the expected grammar."""


@dataclass(frozen=True, eq=False)
class GtspInstance:
    """An immutable GTSP instance.

    Vertices are 0-based internally. ``clusters`` partitions ``range(n)``;
    every cluster is stored as a sorted tuple. A plain TSP is the special
    case where every cluster is a singleton.
    """

    name: str
    weights: np.ndarray
    clusters: tuple[tuple[int, ...], ...]
    weight_kind: str = "EXPLICIT"
    coords: np.ndarray | None = None
    comment: str = ""
    cluster_of: tuple[int, ...] = field(init=False, repr=False)
    rows: tuple[list[int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.int64)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise ValueError("weights must be a square matrix")
        if (weights < 0).any():
            raise ValueError("weights must be non-negative")
        weights.setflags(write=False)
        n = weights.shape[0]
        clusters = tuple(tuple(sorted(int(v) for v in c)) for c in self.clusters)
        if not clusters:
            raise ValueError("an instance needs at least one cluster")
        cluster_of = [-1] * n
        for k, members in enumerate(clusters):
            if not members:
                raise ValueError(f"cluster {k + 1} is empty")
            for v in members:
                if not 0 <= v < n:
                    raise ValueError(f"vertex {v + 1} out of range 1..{n}")
                if cluster_of[v] != -1:
                    raise ValueError(f"overlapping clusters: vertex {v + 1} is in sets "
                                     f"{cluster_of[v] + 1} and {k + 1}")
                cluster_of[v] = k
        missing = [v + 1 for v in range(n) if cluster_of[v] == -1]
        if missing:
            raise ValueError(f"vertices not covered by any cluster: {missing[:10]}")
        if self.weight_kind not in WEIGHT_KINDS:
            raise ValueError(f"unsupported weight kind {self.weight_kind!r}")
        coords = self.coords
        if coords is not None:
            coords = np.array(coords, dtype=np.float64)
            coords.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "clusters", clusters)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "cluster_of", tuple(cluster_of))
        object.__setattr__(self, "rows", tuple(weights.tolist()))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def m(self) -> int:
        return len(self.clusters)

    @property
    def s(self) -> int:
        """Size of the largest cluster."""
        return max(len(c) for c in self.clusters)

    @property
    def symmetric(self) -> bool:
        try:
            return self._symmetric
        except AttributeError:
            value = bool((self.weights == self.weights.T).all())
            object.__setattr__(self, "_symmetric", value)
            return value

    def __eq__(self, other):
        if not isinstance(other, GtspInstance):
            return NotImplemented
        same_coords = (self.coords is None and other.coords is None) or (
            self.coords is not None and other.coords is not None
            and np.array_equal(self.coords, other.coords))
        return (self.name == other.name and self.clusters == other.clusters
                and self.weight_kind == other.weight_kind
                and np.array_equal(self.weights, other.weights) and same_coords)

    __hash__ = object.__hash__

    def __repr__(self):
        return f"GtspInstance(name={self.name!r}, n={self.n}, m={self.m}, s={self.s})"


# ---------------------------------------------------------------------------
# edge weights

def _nint(x):
    return np.floor(x + 0.5).astype(np.int64)


def distance_matrix(coords, kind: str) -> np.ndarray:
    """Integer TSPLIB distances between all pairs of ``coords``."""
    coords = np.asarray(coords, dtype=np.float64)
    x, y = coords[:, 0], coords[:, 1]
    if kind == "GEO":
        return _geo_matrix(x, y)
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    if kind == "EUC_2D":
        out = _nint(np.sqrt(dx * dx + dy * dy))
    elif kind == "CEIL_2D":
        out = np.ceil(np.sqrt(dx * dx + dy * dy)).astype(np.int64)
    elif kind == "ATT":
        r = np.sqrt((dx * dx + dy * dy) / 10.0)
        t = _nint(r)
        out = np.where(t < r, t + 1, t)
    else:
        raise InstanceFormatError(f"unsupported EDGE_WEIGHT_TYPE {kind!r}")
    np.fill_diagonal(out, 0)
    return out


def _geo_radians(v: float) -> float:
    deg = int(v)
    minutes = v - deg
    return _GEO_PI * (deg + 5.0 * minutes / 3.0) / 180.0


def _geo_matrix(x, y) -> np.ndarray:
    # math.cos/acos per pair so that rounding matches the C reference code
    n = len(x)
    lat = [_geo_radians(v) for v in x]
    lon = [_geo_radians(v) for v in y]
    out = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            q1 = math.cos(lon[i] - lon[j])
            q2 = math.cos(lat[i] - lat[j])
            q3 = math.cos(lat[i] + lat[j])
            d = int(_GEO_RADIUS * math.acos(0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)) + 1.0)
            out[i, j] = out[j, i] = d
    return out


def weight_of(instance: GtspInstance, x: int, y: int) -> int:
    return instance.rows[x][y]


def weight_of_path(instance: GtspInstance, vertices: Sequence[int]) -> int:
    rows = instance.rows
    return sum(rows[a][b] for a, b in zip(vertices, vertices[1:]))


def weight_of_tour(instance: GtspInstance, tour) -> int:
    vertices = getattr(tour, "vertices", tour)
    if len(vertices) < 2:
        return 0
    return weight_of_path(instance, vertices) + instance.rows[vertices[-1]][vertices[0]]


# ---------------------------------------------------------------------------
# parsing

_KEY_RE = re.compile(r"^\s*([A-Z_0-9]+)\s*:?\s*(.*?)\s*$")
_SECTIONS = ("NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION", "DISPLAY_DATA_SECTION",
             "GTSP_SET_SECTION")


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("ascii", errors="replace")
    if isinstance(source, str):
        return source
    if isinstance(source, os.PathLike):
        with open(source, "rb") as fh:
            return fh.read().decode("ascii", errors="replace")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("ascii", errors="replace")
    return data


def parse_instance(source: str | bytes | IO) -> GtspInstance:
    """Parse a GTSP (or plain TSP) file given as text, bytes or a stream.

    TSP files without a ``GTSP_SET_SECTION`` give singleton clusters.
    """
    lines = _read_text(source).splitlines()
    header: dict[str, str] = {}
    sections: dict[str, list[str]] = {}
    current = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        head = line.split(":")[0].strip()
        if head in _SECTIONS:
            current = head
            sections[current] = []
            rest = line[len(line.split(":")[0]):].lstrip(":").strip()
            if rest:
                sections[current].append(rest)
            continue
        if current is not None and _looks_numeric(line):
            sections[current].append(line)
            continue
        match = _KEY_RE.match(line)
        if not match or not match.group(1).isupper():
            raise InstanceFormatError(f"line {lineno}: cannot parse {raw!r}")
        current = None
        key, value = match.group(1), match.group(2)
        if ":" not in line:
            raise InstanceFormatError(f"line {lineno}: unknown keyword or section {key!r}")
        header[key] = value
    return _build(header, sections)


def _looks_numeric(line: str) -> bool:
    return bool(re.match(r"^[-+]?(\d|\.\d)", line))


def _int_field(header, key):
    try:
        return int(header[key])
    except KeyError:
        raise InstanceFormatError(f"missing {key}") from None
    except ValueError:
        raise InstanceFormatError(f"{key} must be an integer, got {header[key]!r}") from None


def _build(header, sections) -> GtspInstance:
    name = header.get("NAME", "unnamed")
    kind = header.get("EDGE_WEIGHT_TYPE")
    if kind is None:
        raise InstanceFormatError("missing EDGE_WEIGHT_TYPE")
    if kind not in WEIGHT_KINDS:
        raise InstanceFormatError(f"unsupported EDGE_WEIGHT_TYPE {kind!r}")
    n = _int_field(header, "DIMENSION")
    if n < 1:
        raise InstanceFormatError("DIMENSION must be positive")
    coords = None
    if kind == "EXPLICIT":
        fmt = header.get("EDGE_WEIGHT_FORMAT")
        if fmt not in EXPLICIT_FORMATS:
            raise InstanceFormatError(f"unsupported EDGE_WEIGHT_FORMAT {fmt!r}")
        if "EDGE_WEIGHT_SECTION" not in sections:
            raise InstanceFormatError("missing EDGE_WEIGHT_SECTION")
        weights = _explicit_matrix(sections["EDGE_WEIGHT_SECTION"], n, fmt)
    else:
        if "NODE_COORD_SECTION" not in sections:
            raise InstanceFormatError("missing NODE_COORD_SECTION")
        coords = _coords(sections["NODE_COORD_SECTION"], n)
        weights = distance_matrix(coords, kind)

    kind_type = header.get("TYPE", "TSP").split()[0].upper()
    if "GTSP_SET_SECTION" in sections:
        m = _int_field(header, "GTSP_SETS")
        clusters = _sets(sections["GTSP_SET_SECTION"], n, m)
    elif kind_type in ("GTSP", "AGTSP"):
        raise InstanceFormatError("missing GTSP_SET_SECTION")
    else:
        clusters = [(v,) for v in range(n)]
    try:
        return GtspInstance(name=name, weights=weights, clusters=clusters,
                            weight_kind=kind, coords=coords,
                            comment=header.get("COMMENT", ""))
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None


def _coords(lines, n):
    out = np.zeros((n, 2))
    seen = set()
    for line in lines:
        parts = line.split()
        if len(parts) < 3:
            raise InstanceFormatError(f"bad coordinate line {line!r}")
        idx = int(parts[0]) - 1
        if not 0 <= idx < n or idx in seen:
            raise InstanceFormatError(f"bad node id {parts[0]} in NODE_COORD_SECTION")
        seen.add(idx)
        out[idx] = float(parts[1]), float(parts[2])
    if len(seen) != n:
        raise InstanceFormatError(f"NODE_COORD_SECTION has {len(seen)} nodes, DIMENSION is {n}")
    return out


def _explicit_matrix(lines, n, fmt):
    values = []
    for line in lines:
        values.extend(float(t) for t in line.split())
    if any(v != int(v) for v in values):
        raise InstanceFormatError("explicit weights must be integers")
    values = [int(v) for v in values]
    # *_COL formats are the transposed *_ROW layouts
    col_alias = {"UPPER_COL": "LOWER_ROW", "LOWER_COL": "UPPER_ROW",
                 "UPPER_DIAG_COL": "LOWER_DIAG_ROW", "LOWER_DIAG_COL": "UPPER_DIAG_ROW"}
    fmt = col_alias.get(fmt, fmt)
    if fmt == "FULL_MATRIX":
        cells = [(i, j) for i in range(n) for j in range(n)]
    elif fmt == "UPPER_ROW":
        cells = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif fmt == "LOWER_ROW":
        cells = [(i, j) for i in range(n) for j in range(i)]
    elif fmt == "UPPER_DIAG_ROW":
        cells = [(i, j) for i in range(n) for j in range(i, n)]
    else:
        cells = [(i, j) for i in range(n) for j in range(i + 1)]
    if len(values) != len(cells):
        raise InstanceFormatError(
            f"EDGE_WEIGHT_SECTION has {len(values)} values, {fmt} with DIMENSION {n} "
            f"needs {len(cells)}")
    out = np.zeros((n, n), dtype=np.int64)
    for (i, j), v in zip(cells, values):
        out[i, j] = v
        if fmt != "FULL_MATRIX":
            out[j, i] = v
    np.fill_diagonal(out, 0)
    return out


def _sets(lines, n, m):
    tokens = []
    for line in lines:
        tokens.extend(int(t) for t in line.split())
    sets = []
    it = iter(tokens)
    for set_id in it:
        members = []
        for v in it:
            if v == -1:
                break
            if not 1 <= v <= n:
                raise InstanceFormatError(f"set {set_id}: vertex {v} outside 1..{n}")
            members.append(v - 1)
        else:
            raise InstanceFormatError(f"set {set_id} is not terminated by -1")
        sets.append(members)
    if len(sets) != m:
        raise InstanceFormatError(f"GTSP_SETS is {m} but GTSP_SET_SECTION lists {len(sets)} sets")
    seen = {}
    for k, members in enumerate(sets):
        for v in members:
            if v in seen:
                raise InstanceFormatError(
                    f"overlapping clusters: vertex {v + 1} is in sets {seen[v] + 1} and {k + 1}")
            seen[v] = k
    return sets


def read_instance(path) -> GtspInstance:
    with open(path, "rb") as fh:
        return parse_instance(fh)


# ---------------------------------------------------------------------------
# serialization

def format_instance(instance: GtspInstance) -> str:
    out = io.StringIO()
    out.write(f"NAME: {instance.name}\n")
    out.write("TYPE: GTSP\n" if instance.symmetric else "TYPE: AGTSP\n")
    if instance.comment:
        out.write(f"COMMENT: {instance.comment}\n")
    out.write(f"DIMENSION: {instance.n}\n")
    out.write(f"GTSP_SETS: {instance.m}\n")
    out.write(f"EDGE_WEIGHT_TYPE: {instance.weight_kind}\n")
    if instance.weight_kind == "EXPLICIT":
        out.write("EDGE_WEIGHT_FORMAT: FULL_MATRIX\n")
        out.write("EDGE_WEIGHT_SECTION\n")
        for row in instance.rows:
            out.write(" ".join(str(v) for v in row) + "\n")
    else:
        out.write("NODE_COORD_SECTION\n")
        for i, (x, y) in enumerate(instance.coords, 1):
            out.write(f"{i} {_num(x)} {_num(y)}\n")
    out.write("GTSP_SET_SECTION\n")
    for k, members in enumerate(instance.clusters, 1):
        out.write(f"{k} " + " ".join(str(v + 1) for v in members) + " -1\n")
    out.write("EOF\n")
    return out.getvalue()


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def write_instance(instance: GtspInstance, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_instance(instance))


# ---------------------------------------------------------------------------
# clustering

def farthest_point_centers(weights: np.ndarray, m: int) -> list[int]:
    """Pick ``m`` centers by farthest-point traversal.

    The traversal starts at vertex 0: the first center is the vertex farthest
    from it, and every next center maximizes the distance to its closest
    already chosen center. Ties go to the lowest vertex index.
    """
    n = weights.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"cannot choose {m} centers among {n} vertices")
    first = int(np.argmax(weights[0]))
    centers = [first]
    closest = weights[first].astype(np.int64).copy()
    closest[first] = -1
    while len(centers) < m:
        c = int(np.argmax(closest))
        centers.append(c)
        closest = np.minimum(closest, weights[c])
        closest[centers] = -1
    return centers


def assign_to_centers(weights: np.ndarray, centers: Sequence[int]) -> list[list[int]]:
    """Nearest-center partition; ties go to the earlier center.

    The clusters are returned ordered by their smallest vertex.
    """
    n = weights.shape[0]
    nearest = np.argmin(weights[:, centers], axis=1)
    nearest[list(centers)] = np.arange(len(centers))
    clusters = [[] for _ in centers]
    for v in range(n):
        clusters[nearest[v]].append(v)
    clusters.sort(key=lambda c: c[0])
    return clusters


def default_cluster_count(n: int) -> int:
    return math.ceil(n / 5)


def cluster_tsp(tsp: GtspInstance, m: int | None = None, name: str | None = None) -> GtspInstance:
    """Convert a TSP instance into a GTSP instance with ``m`` clusters.

    ``m`` defaults to ``ceil(n / 5)``; the result is named ``f"{m}{tsp.name}"``
    in lower case, e.g. ``att48 -> 10att48``.
    """
    n = tsp.n
    if m is None:
        m = default_cluster_count(n)
    if m < 2:
        raise ValueError("need ≥ 2 clusters")
    if m > n:
        raise ValueError(f"cannot make {m} clusters out of {n} vertices")
    centers = farthest_point_centers(tsp.weights, m)
    clusters = assign_to_centers(tsp.weights, centers)
    if name is None:
        name = f"{m}{tsp.name.lower()}"
    return GtspInstance(name=name, weights=tsp.weights, clusters=clusters,
                        weight_kind=tsp.weight_kind, coords=tsp.coords,
                        comment=tsp.comment)


def from_matrix(weights, clusters: Iterable[Iterable[int]], name: str = "matrix") -> GtspInstance:
    """Build an EXPLICIT instance from 0-based clusters."""
    return GtspInstance(name=name, weights=np.asarray(weights),
                        clusters=tuple(tuple(c) for c in clusters))
