import numpy as np
from hypothesis import given

from nisqmap.circuit import Circuit, layer_cnots, parse_circuit
from nisqmap.profiler import (build_coupling_matrix, build_involvement_lists, extract_initial_subcircuit,
                              profile_circuit)
from nisqmap.workloads import bundled

import oracles
from strategies import circuits


def _circ(n, pairs):
    c = Circuit(n, [], "t")
    for p in pairs:
        c.append("cx", p)
    return c


def _oracle_lists(c, n_layers=None):
    lay = layer_cnots(c)
    sets = [sorted(s) for s in lay.layers][:n_layers]
    return oracles.involvement_oracle(sets, {g.id: g.qubits for g in c.gates}, c.n_qubits)


def test_single_cnot():
    c = _circ(2, [(0, 1)])
    assert build_involvement_lists(layer_cnots(c), c) == [[(1, 1)], [(1, 1)]]


def test_hand_executed_chain():
    c = _circ(4, [(0, 1), (2, 3), (0, 2)])
    got = build_involvement_lists(layer_cnots(c), c)
    assert got == [[(1, 2)], [(1, 1)], [(1, 2)], [(1, 1)]]


def test_qft4_first_qubit_run():
    c = bundled("qft_4")
    p = profile_circuit(c)
    assert (1, 6) in p.full_involvement[0]
    assert p.full_involvement == _oracle_lists(c)


@given(circuits(max_qubits=6, max_gates=30))
def test_involvement_matches_transcription(c):
    assert build_involvement_lists(layer_cnots(c), c) == _oracle_lists(c)


@given(circuits(max_qubits=6, max_gates=30))
def test_runs_account_for_each_cnot_once(c):
    lay = layer_cnots(c)
    lists = build_involvement_lists(lay, c)
    for q, runs in enumerate(lists):
        starts = [s for s, _ in runs]
        assert starts == sorted(set(starts)) and all(l >= 1 for _, l in runs)
        on_q = [lay.index_of[g.id] for g in c.gates if g.is_cnot and q in g.qubits]
        assert sum(l for _, l in runs) == len(on_q)
        assert set(starts) <= set(on_q)


def test_coupling_matrix():
    assert not build_coupling_matrix(Circuit(3)).any()
    m = build_coupling_matrix(_circ(2, [(0, 1)] * 3))
    assert m[0, 1] == m[1, 0] == 3


@given(circuits(max_qubits=6, max_gates=30))
def test_coupling_is_pair_count(c):
    m = build_coupling_matrix(c)
    ref = np.zeros_like(m)
    for g in c.gates:
        if g.is_cnot:
            a, b = g.qubits
            ref[a, b] += 1
            ref[b, a] += 1
    assert (m == ref).all() and (m == m.T).all() and not m.diagonal().any()
    for q in range(c.n_qubits):
        assert m[q].sum() == sum(1 for g in c.gates if g.is_cnot and q in g.qubits)


def test_prefix_examples():
    c = _circ(4, [(0, 1), (2, 3)])
    assert extract_initial_subcircuit(c, layer_cnots(c)) == 1
    c = _circ(4, [(0, 1), (0, 1), (0, 2), (0, 1), (1, 3)])
    assert extract_initial_subcircuit(c, layer_cnots(c)) == 5


@given(circuits(max_qubits=6, max_gates=30))
def test_prefix_matches_scan(c):
    lay = layer_cnots(c)
    active = {q for g in c.gates if g.is_cnot for q in g.qubits}
    k = oracles.prefix_oracle([sorted(s) for s in lay.layers], {g.id: g.qubits for g in c.gates}, active)
    assert extract_initial_subcircuit(c, lay) == k


@given(circuits(max_qubits=6, max_gates=30))
def test_prefix_lists_agree_with_full(c):
    p = profile_circuit(c)
    for pre, full in zip(p.involvement, p.full_involvement):
        assert len(pre) <= len(full)
        for a, b in zip(pre, full):
            assert a[0] == b[0] and a[1] <= b[1]
    assert list(p.qubit_degrees) == [int((p.coupling[q] > 0).sum()) for q in range(c.n_qubits)]


def test_ancilla_exempt_and_json():
    c = parse_circuit('OPENQASM 2.0;\nqreg q[3];\nh q[2];\ncx q[0],q[1];')
    p = profile_circuit(c)
    assert p.subcircuit_layers == 1 and p.involvement[2] == []
    assert p.to_json()["involvement"][0] == [[1, 1]]
