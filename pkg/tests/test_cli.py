import json

import pytest

from nisqmap.cli import main, sub_seed
from nisqmap.circuit import to_qasm
from nisqmap.workloads import bundled, ising, qft, toffoli


@pytest.fixture
def qasm_dir(tmp_path):
    for c in (qft(4), toffoli(), ising(4)):
        (tmp_path / f"{c.name}.qasm").write_text(to_qasm(c))
    return tmp_path


def test_sub_seed_streams_differ_and_repeat():
    assert sub_seed(1, "calibration") == sub_seed(1, "calibration")
    assert sub_seed(1, "calibration") != sub_seed(1, "layout")
    assert sub_seed(1, "calibration") != sub_seed(2, "calibration")


def test_gen_device_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen-device", "grid2d:4x3", "--seed", "5", "--out", str(a)]) == 0
    assert main(["gen-device", "grid2d:4x3", "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["n_qubits"] == 12


def test_profile(qasm_dir, tmp_path):
    out = tmp_path / "p.json"
    assert main(["profile", str(qasm_dir / "qft_4.qasm"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["n_qubits"] == 4 and doc["n_cnots"] == 12


def test_map_then_verify(qasm_dir, tmp_path):
    out = tmp_path / "run"
    args = ["map", "--device", "grid2d:5x4", "--seed", "3", "--out", str(out)]
    for name in ("qft_4", "toffoli_3", "ising_n4"):
        args += ["--circuit", str(qasm_dir / f"{name}.qasm")]
    assert main(args) == 0
    report = json.loads((out / "report.json").read_text())
    grp = report["groups"][0]
    assert grp["programs"] == ["qft_4", "toffoli_3", "ising_n4"]
    assert grp["verification"]["compliant"] and grp["verification"]["equivalent"]
    assert grp["metrics"]["cnots_added"] == 3 * grp["metrics"]["n_swaps"]
    assert (out / "mapped" / "qft_4+toffoli_3+ising_n4.qasm").is_file()
    assert (out / "tree.json").is_file()
    assert main(["verify", "--device", "grid2d:5x4", "--seed", "3", "--trace", str(out / "trace.json"),
                 "--out", str(tmp_path / "v.json")]) == 0
    assert json.loads((tmp_path / "v.json").read_text())["ok"]


def test_single_mode_maps_each_circuit(qasm_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["map", "--device", "grid2d:3x3", "--mode", "single", "--xswap", "off", "--out", str(out),
                 "--circuit", str(qasm_dir / "qft_4.qasm"), "--circuit", str(qasm_dir / "toffoli_3.qasm")]) == 0
    report = json.loads((out / "report.json").read_text())
    assert [g["programs"] for g in report["groups"]] == [["qft_4"], ["toffoli_3"]]


def test_tampered_trace_fails_verify(qasm_dir, tmp_path):
    dev = tmp_path / "dev.json"
    assert main(["gen-device", "grid2d:3x3", "--out", str(dev)]) == 0
    out = tmp_path / "run"
    assert main(["map", "--device", str(dev), "--out", str(out),
                 "--circuit", str(qasm_dir / "qft_4.qasm"), "--circuit", str(qasm_dir / "ising_n4.qasm")]) == 0
    trace = json.loads((out / "trace.json").read_text())
    items = trace["groups"][0]["schedule"]["items"]
    swaps = [k for k, it in enumerate(items) if "edge" in it]
    assert swaps, "expected at least one swap on this instance"
    del items[swaps[0]]
    (tmp_path / "bad.json").write_text(json.dumps(trace))
    assert main(["verify", "--device", str(dev), "--trace", str(tmp_path / "bad.json"),
                 "--out", str(tmp_path / "v.json")]) == 1


def test_schedule(qasm_dir, tmp_path):
    queue = tmp_path / "queue.txt"
    queue.write_text("\n".join(str(qasm_dir / f"{n}.qasm") for n in ("qft_4", "toffoli_3", "ising_n4", "toffoli_3")))
    out = tmp_path / "sched"
    assert main(["schedule", "--device", "toronto", "--queue", str(queue), "--epsilon", "0.3",
                 "--out", str(out), "--jobs", "2"]) == 0
    plan = json.loads((out / "plan.json").read_text())
    assert plan["n_jobs"] == 4
    assert sorted(j for b in plan["batches"] for j in b["jobs"]) == [0, 1, 2, 3]


def test_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.qasm"
    bad.write_text("OPENQASM 2.0;\nqreg q[2];\ncx q[0];\n")
    assert main(["profile", str(bad)]) == 2
    assert main(["profile", str(tmp_path / "missing.qasm")]) == 2
    good = tmp_path / "t.qasm"
    good.write_text(to_qasm(toffoli()))
    assert main(["map", "--device", "nonsense:1", "--circuit", str(good), "--out", str(tmp_path / "o")]) == 2
    assert main(["map", "--device", "grid2d:2x1", "--circuit", str(good), "--out", str(tmp_path / "o")]) == 2
    assert "error" in capsys.readouterr().err
