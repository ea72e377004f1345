"""Device model: coupling graph, calibration, crosstalk ratios and distances."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import _kernels

Edge = tuple[int, int]

# IBMQ Toronto (27-qubit Falcon) coupling map.
TORONTO_EDGES: tuple[Edge, ...] = (
    (0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7), (7, 10),
    (8, 9), (8, 11), (10, 12), (11, 14), (12, 13), (12, 15), (13, 14), (14, 16),
    (15, 18), (16, 19), (17, 18), (18, 21), (19, 20), (19, 22), (21, 23),
    (22, 25), (23, 24), (24, 25), (25, 26),
)


class DeviceError(ValueError):
    pass


def norm_edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class DeviceModel:
    n_qubits: int
    edges: tuple[Edge, ...]
    readout_error: tuple[float, ...] = ()
    sq_error: tuple[float, ...] = ()
    cx_error: dict[Edge, float] = field(default_factory=dict)
    # (edge, other) -> r_{edge|other}; absent pairs are 1.0
    crosstalk: dict[tuple[Edge, Edge], float] = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_qubits
        edges = tuple(sorted(norm_edge(*e) for e in self.edges))
        object.__setattr__(self, "edges", edges)
        if not self.readout_error:
            object.__setattr__(self, "readout_error", (0.0,) * n)
        if not self.sq_error:
            object.__setattr__(self, "sq_error", (0.0,) * n)
        cx = {e: 0.0 for e in edges}
        cx.update({norm_edge(*e): v for e, v in self.cx_error.items()})
        object.__setattr__(self, "cx_error", cx)
        xt = {(norm_edge(*e), norm_edge(*o)): r for (e, o), r in self.crosstalk.items()}
        object.__setattr__(self, "crosstalk", xt)
        self._validate()

    def _validate(self):
        n = self.n_qubits
        if n < 1:
            raise DeviceError("device needs at least one qubit")
        if len(set(self.edges)) != len(self.edges):
            raise DeviceError("duplicate edge")
        for a, b in self.edges:
            if a == b or not (0 <= a < n and 0 <= b < n):
                raise DeviceError(f"bad edge ({a}, {b})")
        if len(self.readout_error) != n or len(self.sq_error) != n:
            raise DeviceError("per-qubit calibration length mismatch")
        for name, vals in (("readout_error", self.readout_error), ("sq_error", self.sq_error),
                           ("cx_error", self.cx_error.values())):
            for v in vals:
                if not 0.0 <= v < 1.0:
                    raise DeviceError(f"{name} {v} outside [0, 1)")
        for e in self.cx_error:
            if e not in self.edge_index:
                raise DeviceError(f"cx_error given for non-edge {e}")
        for (e, o), r in self.crosstalk.items():
            if e not in self.edge_index or o not in self.edge_index:
                raise DeviceError(f"crosstalk entry references non-edge {e} / {o}")
            if r < 0:
                raise DeviceError(f"crosstalk ratio {r} < 0")
        if not self.is_connected():
            raise DeviceError("coupling graph is disconnected")

    # -- structure
    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n_qubits)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return tuple(tuple(sorted(x)) for x in adj)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        indptr = np.zeros(self.n_qubits + 1, dtype=np.int32)
        flat = []
        for q, nb in enumerate(self.neighbors):
            flat.extend(nb)
            indptr[q + 1] = len(flat)
        return indptr, np.asarray(flat, dtype=np.int32)

    def has_edge(self, a: int, b: int) -> bool:
        return norm_edge(a, b) in self.edge_index

    def degree(self, q: int) -> int:
        return len(self.neighbors[q])

    def is_connected(self, qubits=None) -> bool:
        nodes = set(range(self.n_qubits)) if qubits is None else set(qubits)
        if not nodes:
            return True
        start = next(iter(nodes))
        seen, stack = {start}, [start]
        while stack:
            u = stack.pop()
            for v in self.neighbors[u]:
                if v in nodes and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen == nodes

    def ratio(self, e: Edge, other: Edge) -> float:
        return self.crosstalk.get((norm_edge(*e), norm_edge(*other)), 1.0)

    @cached_property
    def crosstalk_partners(self) -> dict[Edge, list[tuple[Edge, float]]]:
        out: dict[Edge, list[tuple[Edge, float]]] = {}
        for (e, o), r in sorted(self.crosstalk.items()):
            out.setdefault(e, []).append((o, r))
        return out

    # -- distances
    @property
    def sentinel(self) -> int:
        return self.n_qubits + 1

    @cached_property
    def distances(self) -> np.ndarray:
        """Full-device shortest-path matrix D (read-only)."""
        d = self.distance_matrix()
        d.setflags(write=False)
        return d

    def distance_matrix(self, allowed=None) -> np.ndarray:
        """BFS edge counts inside the subgraph induced by ``allowed``.

        Unreachable pairs (and rows/columns outside ``allowed``) hold
        ``n_qubits + 1``.
        """
        mask = np.ones(self.n_qubits, dtype=np.uint8)
        if allowed is not None:
            allowed = list(allowed)
            if not allowed:
                raise ValueError("allowed qubit subset is empty")
            mask[:] = 0
            mask[allowed] = 1
        indptr, indices = self.csr
        return _kernels.bfs_all_pairs(indptr, indices, mask, self.sentinel)

    # -- errors
    def conditional_cx_error(self, e: Edge, concurrent=(), aggregate: str = "max") -> float:
        e = norm_edge(*e)
        if e not in self.edge_index:
            raise KeyError(f"unknown edge {e}")
        ratios = [self.ratio(e, o) for o in concurrent if norm_edge(*o) != e]
        if not ratios:
            r = 1.0
        elif aggregate == "max":
            r = max(ratios)
        elif aggregate == "product":
            r = float(np.prod(ratios))
        else:
            raise ValueError(f"unknown aggregate {aggregate!r}")
        return min(max(self.cx_error[e] * r, 0.0), 1.0)

    # -- serialization
    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "edges": [{"a": a, "b": b, "cx_error": self.cx_error[(a, b)]} for a, b in self.edges],
            "qubits": [{"id": q, "readout_error": self.readout_error[q], "sq_error": self.sq_error[q]}
                       for q in range(self.n_qubits)],
            "crosstalk": [{"edge": list(e), "other": list(o), "ratio": r}
                          for (e, o), r in sorted(self.crosstalk.items())],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "DeviceModel":
        try:
            jsonschema.validate(data, _schema())
        except jsonschema.ValidationError as exc:
            raise DeviceError(f"schema violation: {exc.message}") from None
        n = data["n_qubits"]
        seen = set()
        cx = {}
        for item in data["edges"]:
            e = norm_edge(item["a"], item["b"])
            if e in seen:
                raise DeviceError(f"duplicate edge {e}")
            seen.add(e)
            cx[e] = float(item.get("cx_error", 0.0))
        ro, sq = [0.0] * n, [0.0] * n
        for item in data.get("qubits", []):
            q = item["id"]
            if q >= n:
                raise DeviceError(f"qubit id {q} out of range")
            ro[q] = float(item.get("readout_error", 0.0))
            sq[q] = float(item.get("sq_error", 0.0))
        xt = {}
        for item in data.get("crosstalk", []):
            r = float(item["ratio"])
            if r < 0:
                raise DeviceError(f"crosstalk ratio {r} < 0")
            xt[(norm_edge(*item["edge"]), norm_edge(*item["other"]))] = r
        return cls(n, tuple(cx), tuple(ro), tuple(sq), cx, xt)


def _schema() -> dict:
    text = resources.files("nisqmap").joinpath("data/device.schema.json").read_text()
    return json.loads(text)


def load_device(path) -> DeviceModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DeviceError(f"invalid JSON: {exc}") from None
    return DeviceModel.from_json(data)


def save_device(model: DeviceModel, path) -> None:
    Path(path).write_text(model.dumps())


# ---------------------------------------------------------------- topology

def grid2d(w: int, h: int) -> list[Edge]:
    if w < 1 or h < 1:
        raise DeviceError("grid dimensions must be >= 1")
    edges = []
    for y in range(h):
        for x in range(w):
            q = y * w + x
            if x + 1 < w:
                edges.append((q, q + 1))
            if y + 1 < h:
                edges.append((q, q + w))
    return edges


def grid3d(x: int, y: int, z: int) -> list[Edge]:
    if min(x, y, z) < 1:
        raise DeviceError("grid dimensions must be >= 1")
    edges = []

    def idx(i, j, k):
        return (k * y + j) * x + i

    for k in range(z):
        for j in range(y):
            for i in range(x):
                q = idx(i, j, k)
                if i + 1 < x:
                    edges.append((q, idx(i + 1, j, k)))
                if j + 1 < y:
                    edges.append((q, idx(i, j + 1, k)))
                if k + 1 < z:
                    edges.append((q, idx(i, j, k + 1)))
    return edges


def gen_lattice(spec: str) -> tuple[int, list[Edge]]:
    """Parse ``grid2d:WxH``, ``grid3d:XxYxZ`` or ``toronto`` into (n_qubits, edges)."""
    kind, _, dims = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "toronto":
        return 27, list(TORONTO_EDGES)
    try:
        sizes = [int(s) for s in dims.lower().split("x")]
    except ValueError:
        raise DeviceError(f"bad lattice spec {spec!r}") from None
    if kind == "grid2d" and len(sizes) == 2:
        return sizes[0] * sizes[1], grid2d(*sizes)
    if kind == "grid3d" and len(sizes) == 3:
        return sizes[0] * sizes[1] * sizes[2], grid3d(*sizes)
    raise DeviceError(f"bad lattice spec {spec!r}")


def topology(spec: str) -> DeviceModel:
    n, edges = gen_lattice(spec)
    return DeviceModel(n, tuple(edges))


# ---------------------------------------------------------------- calibration

@dataclass(frozen=True)
class CalibrationRanges:
    cx: tuple[float, float] = (0.005, 0.03)
    readout: tuple[float, float] = (0.01, 0.05)
    sq: tuple[float, float] = (0.0002, 0.001)
    ratio: tuple[float, float] = (1.0, 4.0)
    crosstalk_fraction: float = 0.3

    def __post_init__(self):
        for name in ("cx", "readout", "sq"):
            lo, hi = getattr(self, name)
            if not (0.0 <= lo <= hi < 1.0):
                raise ValueError(f"invalid {name} range [{lo}, {hi}]")
        lo, hi = self.ratio
        if not 0.0 <= lo <= hi:
            raise ValueError(f"invalid ratio range [{lo}, {hi}]")
        if not 0.0 <= self.crosstalk_fraction <= 1.0:
            raise ValueError("crosstalk_fraction must be in [0, 1]")


def crosstalk_candidate_pairs(model: DeviceModel) -> list[tuple[Edge, Edge]]:
    """Disjoint edge pairs joined by a coupling (edges one hop apart)."""
    pairs = []
    for e in model.edges:
        for o in model.edges:
            if e == o or set(e) & set(o):
                continue
            if any(model.has_edge(u, v) for u in e for v in o):
                pairs.append((e, o))
    return pairs


def gen_calibration(model: DeviceModel, seed: int, ranges: CalibrationRanges | None = None) -> DeviceModel:
    """Uniform random calibration; a pure function of (topology, seed, ranges)."""
    ranges = ranges or CalibrationRanges()
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    n = model.n_qubits

    def draw(r, size):
        lo, hi = r
        return [float(v) for v in rng.uniform(lo, hi, size)] if hi > lo else [float(lo)] * size

    ro = draw(ranges.readout, n)
    sq = draw(ranges.sq, n)
    cx = dict(zip(model.edges, draw(ranges.cx, len(model.edges))))
    xt = {}
    for pair in crosstalk_candidate_pairs(model):
        if rng.random() < ranges.crosstalk_fraction:
            xt[pair] = draw(ranges.ratio, 1)[0]
    return DeviceModel(n, model.edges, tuple(ro), tuple(sq), cx, xt)
