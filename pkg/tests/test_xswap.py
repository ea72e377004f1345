import copy
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nisqmap import cdap
from nisqmap.circuit import Circuit, DagCursor, build_dag, layer_cnots
from nisqmap.device import DeviceModel, gen_calibration, grid2d, topology
from nisqmap.profiler import profile_circuit
from nisqmap.verify import compliance_audit
from nisqmap.workloads import bundled, random_circuit
from nisqmap.xswap import (FinalSchedule, MappingState, RouterConfig, RoutingError, SwapOp,
                           build_extended_set, critical_gates, gain, heuristic_H, on_shortest_path,
                           route, score)

import oracles
from strategies import circuits


def _prog(n, pairs, name="p"):
    c = Circuit(n, [], name)
    for p in pairs:
        c.append("cx", p)
    return c


GRID6 = DeviceModel(6, tuple(grid2d(3, 2)))  # 0 1 2 / 3 4 5
GRID9 = DeviceModel(9, tuple(grid2d(3, 3)))
SHORTCUT = ([[1, 0, 3, 6, 7], [2, 5, 8, 4]], [_prog(5, [(0, 4)], "a"), _prog(4, [], "b")])


def _drain_1q(c, cur):
    moved = True
    while moved:
        moved = False
        for g in sorted(cur.front):
            if not c.gates[g].is_cnot:
                cur.execute(g)
                moved = True


# ---------------------------------------------------------------- critical gates

def test_no_successors_no_critical():
    c = _prog(4, [(0, 1), (2, 3)])
    dag = build_dag(c)
    assert critical_gates(dag.front, dag, c) == set()


def test_successor_in_second_set():
    # g0 -> g2 (second set); g1 only feeds g3, which sits in the third set
    c = _prog(6, [(0, 1), (2, 3), (1, 4), (3, 4), (4, 5)])
    dag = build_dag(c)
    assert len(layer_cnots(c)) == 4
    assert critical_gates(dag.front, dag, c) == {0}


@given(circuits(max_qubits=5, max_gates=14, min_qubits=2), st.integers(0, 6))
def test_critical_matches_relayering(c, n_exec):
    dag = build_dag(c)
    cur = DagCursor(dag)
    _drain_1q(c, cur)
    for _ in range(n_exec):
        if not cur.front:
            break
        cur.execute(min(cur.front))
        _drain_1q(c, cur)
    front = {g for g in cur.front if c.gates[g].is_cnot}
    remaining = [g for g in c.gates if g.id not in cur.executed]
    layer = oracles.asap_layers(remaining)
    second = [g for g in remaining if layer.get(g.id) == 2]
    expect = {g for g in front if any(set(h.qubits) & set(c.gates[g].qubits) for h in second)}
    assert critical_gates(cur.front, dag, c, cur.executed) == expect


# ---------------------------------------------------------------- gain, H, score

def test_gain_zero_cases():
    st_ = MappingState(GRID9, [list(range(9))])
    assert gain(st_, 0, 0, 8) == 0
    st2 = MappingState(GRID9, SHORTCUT[0])
    assert gain(st2, 0, 1, 0) == 0


def test_gain_shortcut():
    st_ = MappingState(GRID9, SHORTCUT[0])
    assert st_.D[1, 7] == 2 and st_.dprime(0)[1, 7] == 4
    assert gain(st_, 0, 1, 7) == -2


def test_h_sole_front_made_adjacent():
    st_ = MappingState(GRID9, [[0, 2]])
    assert heuristic_H((1, 2), st_, {0: [(0, 2)]}, {0: []}) == 1.0


def test_h_symmetric_swaps_equal():
    st_ = MappingState(GRID9, [[3, 5]])
    fr = {0: [(3, 5)]}
    assert heuristic_H((3, 4), st_, fr, {}) == heuristic_H((4, 5), st_, fr, {})


@given(st.integers(0, 5000))
def test_h_matches_rebuild(seed):
    rng = random.Random(seed)
    m = topology("grid2d:4x4")
    qs = rng.sample(range(16), 9)
    lays = [qs[0:3], qs[3:6], qs[6:9]]
    st_ = MappingState(m, lays)
    fronts = {i: [tuple(rng.sample(lays[i], 2))] for i in range(3)}
    ext = {i: [tuple(rng.sample(lays[i], 2)) for _ in range(rng.randint(0, 3))] for i in range(3)}
    logical_f = {i: [(lays[i].index(x), lays[i].index(y)) for x, y in fronts[i]] for i in range(3)}
    logical_e = {i: [(lays[i].index(x), lays[i].index(y)) for x, y in ext[i]] for i in range(3)}
    for a, b in m.edges[:10]:
        fresh = copy.deepcopy(st_)
        fresh.apply_swap(a, b)
        want = 0.0
        for i in range(3):
            d = [fresh.D[fresh.phys(i, x), fresh.phys(i, y)] for x, y in logical_f[i]]
            want += sum(d) / len(d)
            if logical_e[i]:
                d = [fresh.D[fresh.phys(i, x), fresh.phys(i, y)] for x, y in logical_e[i]]
                want += 0.5 * sum(d) / len(d)
        assert heuristic_H((a, b), st_, fronts, ext) == pytest.approx(want)


def test_score_is_h_for_single_program():
    st_ = MappingState(GRID9, [[0, 8, 4]])
    fr = {0: [(0, 8)]}
    for e in GRID9.edges:
        assert score(e, st_, fr, {}) == heuristic_H(e, st_, fr, {})


def test_shortcut_swap_wins():
    st_ = MappingState(GRID9, SHORTCUT[0])
    fr = {0: [(1, 7)]}
    cands = [e for e in GRID9.edges if {1, 7} & set(e)]
    scores = {e: score(e, st_, fr, {}) for e in cands}
    assert scores[(1, 4)] == scores[(4, 7)] == pytest.approx(1 - 2)
    assert min(scores.values()) == scores[(1, 4)]
    assert on_shortest_path(st_.D, 1, 4, 1, 7) and not on_shortest_path(st_.D, 0, 1, 1, 7)


# ---------------------------------------------------------------- extended set

def test_extended_empty_when_only_front_left():
    c = _prog(2, [(0, 1)])
    p = profile_circuit(c)
    lay = layer_cnots(c)
    assert build_extended_set({0}, p.full_involvement, lay, [[0], [0]], set()) == set()


def _run_oracle(c, front, executed):
    """Tag every CNOT with (qubit, run number), then pick the qualifying run."""
    p = profile_circuit(c)
    lay = layer_cnots(c)
    lo = min(lay.index_of[g] for g in front)
    out = set()
    for q, runs in enumerate(p.full_involvement):
        tags = []
        for r, (_, length) in enumerate(runs):
            tags += [r] * length
        on_q = [g.id for g in c.gates if g.is_cnot and q in g.qubits]
        pick = [r for r, (s, _) in enumerate(runs) if s <= lo]
        if not pick:
            continue
        out |= {g for g, t in zip(on_q, tags) if t == pick[-1] and g not in front and g not in executed}
    return out


def _cnots_on(c):
    on = [[] for _ in range(c.n_qubits)]
    for g in c.gates:
        if g.is_cnot:
            for q in g.qubits:
                on[q].append(g.id)
    return on


def test_extended_set_long_run():
    c = bundled("qft_4")
    p = profile_circuit(c)
    lay = layer_cnots(c)
    assert p.full_involvement[0][0] == (1, 6)
    cur = DagCursor(build_dag(c))
    while True:
        nxt = [g for g in cur.front if not c.gates[g].is_cnot or lay.index_of[g] <= 2]
        if not nxt:
            break
        cur.execute(min(nxt))
    front = {g for g in cur.front if c.gates[g].is_cnot}
    assert {lay.index_of[g] for g in front} == {3}
    ext = build_extended_set(front, p.full_involvement, lay, _cnots_on(c), cur.executed)
    q0_later = {g.id for g in c.gates if g.is_cnot and 0 in g.qubits and lay.index_of[g.id] > 3}
    assert q0_later <= ext
    assert ext == _run_oracle(c, front, cur.executed)


@given(circuits(max_qubits=5, max_gates=20, min_qubits=2), st.integers(0, 8))
def test_extended_matches_oracle(c, n_exec):
    cur = DagCursor(build_dag(c))
    for _ in range(n_exec):
        if cur.front:
            cur.execute(min(cur.front))
    _drain_1q(c, cur)
    front = {g for g in cur.front if c.gates[g].is_cnot}
    if not front:
        return
    p = profile_circuit(c)
    got = build_extended_set(front, p.full_involvement, layer_cnots(c), _cnots_on(c), cur.executed)
    assert got == _run_oracle(c, front, cur.executed)


# ---------------------------------------------------------------- routing

def test_compliant_program_needs_no_swaps():
    c = _prog(3, [(0, 1), (1, 2)])
    fs = route([c], [[0, 1, 2]], GRID9)
    assert fs.n_swaps == 0 and [it.gate_id for it in fs.items] == [0, 1]


def test_two_program_shortcut_swap():
    p1 = _prog(3, [(0, 1), (1, 2), (0, 2)])
    p2 = _prog(3, [(0, 1), (0, 2), (1, 2)])
    on = route([p1, p2], [[1, 0, 3], [5, 4, 2]], GRID6, RouterConfig(xswap=True))
    off = route([p1, p2], [[1, 0, 3], [5, 4, 2]], GRID6, RouterConfig(xswap=False))
    assert (on.n_swaps, on.n_inter) == (1, 1) and on.swaps[0].edge == (1, 4)
    assert (off.n_swaps, off.n_inter) == (2, 0)


def test_shortcut_through_foreign_qubit():
    lays, progs = SHORTCUT
    on = route(progs, lays, GRID9)
    assert (on.n_swaps, on.n_inter) == (1, 1)
    assert route(progs, lays, GRID9, RouterConfig(xswap=False)).n_swaps == 3


def test_permutation_soundness_and_json_roundtrip():
    m = gen_calibration(topology("grid2d:4x3"), 2)
    cs = [bundled("qft_4"), bundled("toffoli_3")]
    fs = route(cs, [[0, 5, 10, 3], [8, 9, 11]], m)
    lays = [list(l) for l in fs.initial_layouts]
    for s in fs.swaps:
        a, b = s.edge
        for lay in lays:
            for q, p in enumerate(lay):
                lay[q] = b if p == a else a if p == b else p
    assert lays == fs.final_layouts
    again = FinalSchedule.from_json(fs.to_json())
    assert again.to_json() == fs.to_json()
    assert fs.to_circuit().n_cnots == sum(c.n_cnots for c in cs) + 3 * fs.n_swaps


def test_deterministic():
    m = gen_calibration(topology("grid2d:5x5"), 9)
    rng = np.random.default_rng(3)
    cs = [random_circuit(5, 30, rng, name=f"r{i}") for i in range(3)]
    lays = [[0, 1, 2, 5, 6], [12, 13, 14, 17, 18], [20, 21, 22, 23, 24]]
    assert route(cs, lays, m).to_json() == route(cs, lays, m).to_json()


def test_intra_only_cannot_cross_gap():
    m = topology("grid2d:3x1")
    with pytest.raises(RoutingError):
        route([_prog(2, [(0, 1)])], [[0, 2]], m, RouterConfig(xswap=False))


def test_layout_validation():
    with pytest.raises(ValueError):
        route([_prog(2, [(0, 1)])], [[0, 0]], GRID9)
    with pytest.raises(ValueError):
        route([_prog(2, [(0, 1)])], [[0]], GRID9)


def test_xswap_not_worse_on_average():
    base = topology("grid2d:5x5")
    on_total = off_total = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        m = gen_calibration(base, seed)
        t = cdap.build_hierarchy_tree(m)
        cs = [random_circuit(int(rng.integers(3, 7)), 25, rng, 0.6, f"r{k}") for k in range(2)]
        res = cdap.partition(t, [(c.n_qubits, c.n_cnots, profile_circuit(c)) for c in cs], m)
        on = route(cs, res.layouts, m, RouterConfig(xswap=True))
        off = route(cs, res.layouts, m, RouterConfig(xswap=False))
        assert not compliance_audit(on, m, cs) and not compliance_audit(off, m, cs)
        on_total += on.n_swaps
        off_total += off.n_swaps
    assert on_total <= off_total
