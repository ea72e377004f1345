"""Circuit IR: a small OpenQASM 2 subset parser, gate DAG and CNOT layering.

Only ``cx`` and one-qubit gates are accepted.  ``barrier`` statements are
parsed and dropped, ``measure`` is kept as a one-qubit marker so read-out
qubits stay visible to later passes.
"""
from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass, field

CNOT = "cx"
MEASURE = "measure"
SWAP = "swap"


class QasmError(ValueError):
    """Raised for malformed or unsupported assembly input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    id: int
    params: tuple[float, ...] = ()

    @property
    def is_cnot(self) -> bool:
        return self.kind == CNOT

    @property
    def is_measure(self) -> bool:
        return self.kind == MEASURE


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    name: str = "circuit"

    def __post_init__(self):
        for i, g in enumerate(self.gates):
            if g.id != i:
                raise ValueError(f"gate ids must be dense and ordered, got {g.id} at {i}")
            _check_arity(g.kind, g.qubits, self.n_qubits)

    @property
    def cnots(self) -> list[Gate]:
        return [g for g in self.gates if g.is_cnot]

    @property
    def n_cnots(self) -> int:
        return sum(1 for g in self.gates if g.is_cnot)

    @property
    def n_1q(self) -> int:
        """One-qubit gate count, excluding measurements."""
        return sum(1 for g in self.gates if not g.is_cnot and not g.is_measure)

    def depth(self) -> int:
        """Longest gate chain; measurements count as one-qubit gates."""
        level = [0] * self.n_qubits
        for g in self.gates:
            d = 1 + max(level[q] for q in g.qubits)
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)

    def append(self, kind: str, qubits, params=()) -> Gate:
        g = Gate(kind, tuple(qubits), len(self.gates), tuple(float(p) for p in params))
        _check_arity(g.kind, g.qubits, self.n_qubits)
        self.gates.append(g)
        return g


def _check_arity(kind: str, qubits: tuple[int, ...], n_qubits: int) -> None:
    if kind in (CNOT, SWAP):
        if len(qubits) != 2 or qubits[0] == qubits[1]:
            raise ValueError(f"{kind} needs two distinct qubits, got {qubits}")
    elif len(qubits) != 1:
        raise ValueError(f"{kind} must act on exactly one qubit, got {qubits}")
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise ValueError(f"qubit index {q} out of range for {n_qubits} qubits")


# ---------------------------------------------------------------- parsing

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
          "ln": math.log, "sqrt": math.sqrt}


def _eval_param(text: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(text)

    return ev(ast.parse(text.strip().replace("^", "**"), mode="eval"))


_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_REG_DECL = re.compile(rf"^(qreg|creg)\s+({_IDENT})\s*\[\s*(\d+)\s*\]$")
_GATE_STMT = re.compile(rf"^({_IDENT})\s*(?:\((.*)\))?\s+(.+)$", re.S)
_ARG = re.compile(rf"^({_IDENT})\s*(?:\[\s*(\d+)\s*\])?$")


def _split_statements(source: str):
    """Yield (line_number, statement) pairs with comments stripped."""
    buf, start = [], None
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("//", 1)[0]
        for ch in line:
            if ch == ";":
                stmt = "".join(buf).strip()
                if stmt:
                    yield start, stmt
                buf, start = [], None
            else:
                if start is None and not ch.isspace():
                    start = lineno
                buf.append(ch)
        buf.append(" ")
    tail = "".join(buf).strip()
    if tail:
        raise QasmError("missing ';' at end of statement", start)


def parse_circuit(source: str, name: str = "circuit") -> Circuit:
    """Parse the supported assembly subset into a :class:`Circuit`."""
    qreg: tuple[str, int] | None = None
    cregs: dict[str, int] = {}
    circ: Circuit | None = None

    for lineno, stmt in _split_statements(source):
        if stmt.startswith("OPENQASM"):
            continue
        if stmt.startswith("include"):
            continue
        m = _REG_DECL.match(stmt)
        if m:
            kind, reg, size = m.group(1), m.group(2), int(m.group(3))
            if kind == "qreg":
                if qreg is not None:
                    raise QasmError("only one quantum register is supported", lineno)
                qreg = (reg, size)
                circ = Circuit(size, [], name)
            else:
                cregs[reg] = size
            continue
        if stmt.startswith(("gate ", "opaque ", "if", "reset")):
            raise QasmError(f"unsupported statement: {stmt.split()[0]}", lineno)
        if circ is None:
            raise QasmError("gate statement before qreg declaration", lineno)
        _parse_gate_statement(stmt, lineno, circ, qreg, cregs)

    if circ is None:
        raise QasmError("no qreg declared")
    return circ


def _resolve(arg: str, lineno: int, qreg: tuple[str, int]) -> list[int]:
    m = _ARG.match(arg.strip())
    if not m:
        raise QasmError(f"bad operand {arg!r}", lineno)
    reg, idx = m.group(1), m.group(2)
    if reg != qreg[0]:
        raise QasmError(f"unknown register {reg!r}", lineno)
    if idx is None:
        return list(range(qreg[1]))
    i = int(idx)
    if i >= qreg[1]:
        raise QasmError(f"qubit index {i} out of range for {reg}[{qreg[1]}]", lineno)
    return [i]


def _parse_gate_statement(stmt, lineno, circ, qreg, cregs):
    if stmt.startswith("measure"):
        parts = stmt[len("measure"):].split("->")
        if len(parts) != 2:
            raise QasmError("measure needs '->' target", lineno)
        creg = _ARG.match(parts[1].strip())
        if not creg or creg.group(1) not in cregs:
            raise QasmError(f"unknown register in {parts[1].strip()!r}", lineno)
        for q in _resolve(parts[0], lineno, qreg):
            circ.append(MEASURE, (q,))
        return

    m = _GATE_STMT.match(stmt)
    if not m:
        raise QasmError(f"cannot parse statement {stmt!r}", lineno)
    kind, ptext, argtext = m.group(1).lower(), m.group(2), m.group(3)
    operands = [_resolve(a, lineno, qreg) for a in argtext.split(",")]

    if kind == "barrier":
        return
    if len(operands) > 2:
        raise QasmError(f"{kind}: gates on more than two qubits are not supported", lineno)
    params = ()
    if ptext is not None and ptext.strip():
        try:
            params = tuple(_eval_param(p) for p in ptext.split(","))
        except (ValueError, SyntaxError, ZeroDivisionError):
            raise QasmError(f"bad parameter list ({ptext})", lineno) from None

    if len(operands) == 2:
        if kind not in ("cx", "cnot"):
            raise QasmError(f"unsupported two-qubit gate {kind!r}", lineno)
        a, b = operands
        if len(a) != len(b) and 1 not in (len(a), len(b)):
            raise QasmError("register size mismatch", lineno)
        n = max(len(a), len(b))
        for k in range(n):
            c, t = a[k if len(a) > 1 else 0], b[k if len(b) > 1 else 0]
            if c == t:
                raise QasmError("cx control and target must differ", lineno)
            circ.append(CNOT, (c, t))
        return
    if kind in ("cx", "cnot"):
        raise QasmError("cx needs two operands", lineno)
    for q in operands[0]:
        circ.append(kind, (q,), params)


def load_circuit(path) -> Circuit:
    from pathlib import Path

    p = Path(path)
    return parse_circuit(p.read_text(), name=p.stem)


def _fmt_param(x: float) -> str:
    return repr(float(x))


def to_qasm(c: Circuit, n_qubits: int | None = None) -> str:
    """Serialize back to assembly text; ``parse_circuit(to_qasm(c))`` reproduces ``c``."""
    n = c.n_qubits if n_qubits is None else n_qubits
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{n}];"]
    if any(g.is_measure for g in c.gates):
        lines.append(f"creg c[{n}];")
    for g in c.gates:
        if g.is_measure:
            lines.append(f"measure q[{g.qubits[0]}] -> c[{g.qubits[0]}];")
            continue
        head = g.kind
        if g.params:
            head += "(" + ",".join(_fmt_param(p) for p in g.params) + ")"
        lines.append(head + " " + ",".join(f"q[{q}]" for q in g.qubits) + ";")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- DAG

@dataclass(frozen=True)
class CircuitDag:
    nodes: tuple[int, ...]
    edges: dict[int, tuple[int, ...]]
    preds: dict[int, tuple[int, ...]]
    front: frozenset[int]


def build_dag(c: Circuit) -> CircuitDag:
    """Connect each gate to the next gate on each of its qubits."""
    last: dict[int, int] = {}
    succ: dict[int, list[int]] = {g.id: [] for g in c.gates}
    pred: dict[int, list[int]] = {g.id: [] for g in c.gates}
    for g in c.gates:
        for q in g.qubits:
            p = last.get(q)
            if p is not None and g.id not in succ[p]:
                succ[p].append(g.id)
                pred[g.id].append(p)
            last[q] = g.id
    front = frozenset(gid for gid, ps in pred.items() if not ps)
    return CircuitDag(
        nodes=tuple(g.id for g in c.gates),
        edges={k: tuple(v) for k, v in succ.items()},
        preds={k: tuple(v) for k, v in pred.items()},
        front=front,
    )


class DagCursor:
    """Mutable execution state over an immutable :class:`CircuitDag`.

    ``front`` is always the set of unexecuted gates whose predecessors have
    all been executed.
    """

    def __init__(self, dag: CircuitDag):
        self.dag = dag
        self.indeg = {n: len(dag.preds[n]) for n in dag.nodes}
        self.front: set[int] = set(dag.front)
        self.executed: set[int] = set()

    def execute(self, gid: int) -> None:
        if gid not in self.front:
            raise ValueError(f"gate {gid} is not in the front layer")
        self.front.discard(gid)
        self.executed.add(gid)
        for s in self.dag.edges[gid]:
            self.indeg[s] -= 1
            if self.indeg[s] == 0:
                self.front.add(s)

    @property
    def done(self) -> bool:
        return len(self.executed) == len(self.dag.nodes)


# ---------------------------------------------------------------- layering

@dataclass(frozen=True)
class GateSetLayering:
    layers: tuple[frozenset[int], ...]
    index_of: dict[int, int]

    def __len__(self):
        return len(self.layers)


def layer_cnots(c: Circuit, dag: CircuitDag | None = None) -> GateSetLayering:
    """ASAP layering of the CNOTs; one-qubit gates are ignored. Indices are 1-based.

    A one-qubit gate only orders gates on its own wire, so the CNOT
    predecessors of a CNOT are the last CNOTs seen on each of its qubits.
    """
    last = [0] * c.n_qubits
    index_of: dict[int, int] = {}
    layers: list[set[int]] = []
    for g in c.gates:
        if not g.is_cnot:
            continue
        a, b = g.qubits
        k = 1 + max(last[a], last[b])
        last[a] = last[b] = k
        index_of[g.id] = k
        if k > len(layers):
            layers.append(set())
        layers[k - 1].add(g.id)
    return GateSetLayering(tuple(frozenset(s) for s in layers), index_of)
