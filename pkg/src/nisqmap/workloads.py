"""Benchmark circuit generators and bundled benchmark files."""
from __future__ import annotations

import math
from importlib import resources

import numpy as np

from .circuit import CNOT, Circuit, load_circuit, parse_circuit

ONE_QUBIT_SET = ("h", "x", "y", "z", "s", "t", "sdg", "tdg")


def _cp(c: Circuit, lam: float, ctrl: int, tgt: int) -> None:
    c.append("u1", (ctrl,), (lam / 2,))
    c.append(CNOT, (ctrl, tgt))
    c.append("u1", (tgt,), (-lam / 2,))
    c.append(CNOT, (ctrl, tgt))
    c.append("u1", (tgt,), (lam / 2,))


def qft(n: int, measure: bool = False) -> Circuit:
    """Textbook QFT with controlled phases decomposed into two CNOTs each."""
    c = Circuit(n, [], f"qft_{n}")
    for j in range(n):
        c.append("h", (j,))
        for k in range(j + 1, n):
            _cp(c, math.pi / 2 ** (k - j), k, j)
    if measure:
        for q in range(n):
            c.append("measure", (q,))
    return c


def toffoli() -> Circuit:
    """Toffoli on (0, 1 -> 2) in the standard six-CNOT decomposition."""
    c = Circuit(3, [], "toffoli_3")
    seq = [("h", 2), ("cx", 1, 2), ("tdg", 2), ("cx", 0, 2), ("t", 2), ("cx", 1, 2),
           ("tdg", 2), ("cx", 0, 2), ("t", 1), ("t", 2), ("h", 2), ("cx", 0, 1),
           ("t", 0), ("tdg", 1), ("cx", 0, 1)]
    for kind, *qs in seq:
        c.append(kind, qs)
    return c


def peres() -> Circuit:
    """Toffoli followed by CNOT(0 -> 1)."""
    c = toffoli()
    c.name = "peres_3"
    c.append(CNOT, (0, 1))
    return c


def fredkin() -> Circuit:
    """Controlled swap of qubits 1 and 2 controlled by 0."""
    c = Circuit(3, [], "fredkin_3")
    c.append(CNOT, (2, 1))
    for g in toffoli().gates:
        c.append(g.kind, g.qubits, g.params)
    c.append(CNOT, (2, 1))
    return c


def bernstein_vazirani(n: int, secret: int | None = None) -> Circuit:
    """``n - 1`` data qubits plus one ancilla (the last qubit)."""
    if n < 2:
        raise ValueError("need at least two qubits")
    secret = (1 << (n - 1)) - 1 if secret is None else secret
    c = Circuit(n, [], f"bv_n{n}")
    anc = n - 1
    c.append("x", (anc,))
    for q in range(n):
        c.append("h", (q,))
    for q in range(n - 1):
        if secret >> q & 1:
            c.append(CNOT, (q, anc))
    for q in range(n - 1):
        c.append("h", (q,))
    return c


def ising(n: int, steps: int = 2, theta: float = 0.3) -> Circuit:
    """Trotterized nearest-neighbour Ising chain."""
    c = Circuit(n, [], f"ising_n{n}")
    for q in range(n):
        c.append("h", (q,))
    for _ in range(steps):
        for q in range(n - 1):
            c.append(CNOT, (q, q + 1))
            c.append("rz", (q + 1,), (theta,))
            c.append(CNOT, (q, q + 1))
        for q in range(n):
            c.append("rx", (q,), (theta,))
    return c


def random_circuit(n: int, n_gates: int, rng: np.random.Generator, cx_fraction: float = 0.5,
                   name: str = "random") -> Circuit:
    c = Circuit(n, [], name)
    for _ in range(n_gates):
        if n > 1 and rng.random() < cx_fraction:
            a, b = rng.choice(n, size=2, replace=False)
            c.append(CNOT, (int(a), int(b)))
        else:
            q = int(rng.integers(n))
            if rng.random() < 0.25:
                c.append("rz", (q,), (float(rng.uniform(0, 2 * math.pi)),))
            else:
                c.append(str(rng.choice(ONE_QUBIT_SET)), (q,))
    return c


def bundled_names() -> list[str]:
    files = resources.files("nisqmap") / "data" / "benchmarks"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".qasm"))


def bundled(name: str) -> Circuit:
    """Load a benchmark shipped with the package, e.g. ``bundled("qft_4")``."""
    path = resources.files("nisqmap") / "data" / "benchmarks" / f"{name}.qasm"
    if not path.is_file():
        raise KeyError(f"no bundled benchmark {name!r}; have {bundled_names()}")
    return parse_circuit(path.read_text(), name)


__all__ = ["qft", "toffoli", "peres", "fredkin", "bernstein_vazirani", "ising", "random_circuit",
           "bundled", "bundled_names", "load_circuit"]
