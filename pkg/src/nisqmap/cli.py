"""Command-line front end: ``nisqmap {profile,gen-device,map,schedule,verify}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import zlib
from pathlib import Path

import jsonschema
import numpy as np

from . import cdap
from .circuit import Circuit, QasmError, load_circuit
from .device import (CalibrationRanges, DeviceError, DeviceModel, gen_calibration, load_device,
                     save_device, topology)
from .profiler import profile_circuit
from .scheduler import Job, SchedulerConfig, route_plan, schedule
from .verify import MAX_SIM_QUBITS, amplitude_error, compliance_audit, compute_metrics
from .xswap import FinalSchedule, RouterConfig, RoutingError, route

log = logging.getLogger("nisqmap")

EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def sub_seed(seed: int, name: str) -> int:
    """Independent, reproducible seed for the named consumer."""
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode())])
    return int(ss.generate_state(1, np.uint64)[0])


def _dump(obj, path: Path | None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi but got {text!r}")
    return lo, hi


def _device(arg: str, seed: int) -> DeviceModel:
    """A device file, or a lattice spec calibrated from the seed."""
    if Path(arg).is_file():
        return load_device(arg)
    try:
        model = topology(arg)
    except DeviceError:
        raise InputError(f"{arg}: not a device file or lattice spec")
    return gen_calibration(model, sub_seed(seed, "calibration"))


# ---------------------------------------------------------------- commands

def cmd_profile(args) -> int:
    c = load_circuit(args.circuit)
    report = {"circuit": c.name, "n_qubits": c.n_qubits, "n_cnots": c.n_cnots}
    report.update(profile_circuit(c).to_json())
    _dump(report, Path(args.out) if args.out else None)
    return EXIT_OK


def cmd_gen_device(args) -> int:
    ranges = CalibrationRanges(cx=args.cx, readout=args.readout, sq=args.sq, ratio=args.ratio,
                               crosstalk_fraction=args.crosstalk_fraction)
    model = gen_calibration(topology(args.spec), sub_seed(args.seed, "calibration"), ranges)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        save_device(model, args.out)
    else:
        sys.stdout.write(model.dumps())
    return EXIT_OK


def _check(circuits, fs: FinalSchedule, model) -> dict:
    violations = compliance_audit(fs, model, circuits)
    touched = set()
    for lay in fs.initial_layouts + fs.final_layouts:
        touched.update(lay)
    for s in fs.swaps:
        touched.update(s.edge)
    for it in fs.items:
        touched.update(getattr(it, "physical", ()))
    out = {"compliant": not violations, "violations": [v.__dict__ for v in violations[:20]]}
    if len(touched) <= MAX_SIM_QUBITS:
        try:
            err = amplitude_error(circuits, fs)
            out["equivalent"] = err <= 1e-9
            out["max_amplitude_error"] = err
        except ValueError as exc:  # unsimulable gate
            out["equivalent"] = None
            out["equivalence_skipped"] = str(exc)
    else:
        out["equivalent"] = None
        out["equivalence_skipped"] = f"{len(touched)} touched qubits"
    return out


def _failed(check: dict) -> bool:
    return not check["compliant"] or check.get("equivalent") is False


def _map_group(circuits, paths, model, tree, router, force_joint) -> dict:
    progs = [(c.n_qubits, c.n_cnots, profile_circuit(c)) for c in circuits]
    status = "ok"
    try:
        part = cdap.partition(tree, progs, model)
        groups = [list(range(len(circuits)))]
        parts = [part]
    except cdap.PartitionFailure as exc:
        if not force_joint:
            raise
        log.warning("%s", exc)
        status = "reverted to separate execution"
        groups = [[i] for i in range(len(circuits))]
        parts = [cdap.partition(tree, [progs[i]], model) for i in range(len(circuits))]
    results = []
    for g, part in zip(groups, parts):
        cs = [circuits[i] for i in g]
        fs = route(cs, part.layouts, model, router, [progs[i][2] for i in g])
        results.append({"members": g, "partition": part, "schedule": fs, "check": _check(cs, fs, model),
                        "metrics": compute_metrics(fs, cs, model=model)})
    return {"status": status, "results": results, "paths": paths}


def _write_outputs(out: Path, groups, circuits, tree, model, extra=None) -> bool:
    out.mkdir(parents=True, exist_ok=True)
    (out / "mapped").mkdir(exist_ok=True)
    report, trace, failed = {"groups": []}, {"groups": []}, False
    for grp in groups:
        for res in grp["results"]:
            names = [circuits[i].name for i in res["members"]]
            fs = res["schedule"]
            fname = "+".join(names)
            (out / "mapped" / f"{fname}.qasm").write_text(fs.to_qasm())
            failed |= _failed(res["check"])
            report["groups"].append({
                "programs": names, "status": grp["status"],
                "partition": res["partition"].to_json(),
                "metrics": res["metrics"].to_json(), "verification": res["check"],
            })
            trace["groups"].append({"programs": names,
                                    "circuits": [str(grp["paths"][i]) for i in res["members"]],
                                    "schedule": fs.to_json()})
    if extra:
        report.update(extra)
    _dump(report, out / "report.json")
    _dump(trace, out / "trace.json")
    _dump(tree.to_json(), out / "tree.json")
    return failed


def cmd_map(args) -> int:
    model = _device(args.device, args.seed)
    paths = [Path(p) for p in args.circuit]
    circuits = [load_circuit(p) for p in paths]
    tree = cdap.build_hierarchy_tree(model, args.omega)
    router = RouterConfig(xswap=args.xswap == "on")
    if args.mode == "multi":
        if sum(c.n_qubits for c in circuits) > model.n_qubits:
            raise InputError("circuits do not fit the device jointly")
        groups = [_map_group(circuits, paths, model, tree, router, True)]
    else:
        for c in circuits:
            if c.n_qubits > model.n_qubits:
                raise InputError(f"{c.name} does not fit the device")
        groups = []
        for i, c in enumerate(circuits):
            g = _map_group([c], [paths[i]], model, tree, router, True)
            for res in g["results"]:
                res["members"] = [i]
            g["paths"] = {i: paths[i]}
            groups.append(g)
    failed = _write_outputs(Path(args.out), groups, circuits, tree, model)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_schedule(args) -> int:
    model = _device(args.device, args.seed)
    qfile = Path(args.queue)
    lines = [ln.strip() for ln in qfile.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    paths = [(qfile.parent / p) if not Path(p).is_absolute() else Path(p) for p in lines]
    circuits = [load_circuit(p) for p in paths]
    queue = [Job.from_circuit(c) for c in circuits]
    tree = cdap.build_hierarchy_tree(model, args.omega)
    cfg = SchedulerConfig(args.epsilon, args.max_coloc, args.window)
    plan = schedule(queue, model, tree, cfg)
    route_plan(plan, queue, model, RouterConfig(xswap=args.xswap == "on"), args.jobs)
    groups = []
    for b in plan.batches:
        cs = [circuits[t] for t in b.jobs]
        res = {"members": b.jobs, "partition": b.partition, "schedule": b.schedule,
               "check": _check(cs, b.schedule, model),
               "metrics": compute_metrics(b.schedule, cs, b.co_epst, plan.trf, model)}
        groups.append({"status": "reverted to separate execution" if b.reverted else "ok",
                       "results": [res], "paths": paths})
    failed = _write_outputs(Path(args.out), groups, circuits, tree, model)
    _dump(plan.to_json(queue), Path(args.out) / "plan.json")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_verify(args) -> int:
    model = _device(args.device, args.seed)
    trace = json.loads(Path(args.trace).read_text())
    failed = False
    results = []
    for grp in trace["groups"]:
        circuits = [load_circuit(p) for p in grp["circuits"]]
        fs = FinalSchedule.from_json(grp["schedule"])
        check = _check(circuits, fs, model)
        check["metrics"] = compute_metrics(fs, circuits, model=model).to_json()
        check["programs"] = grp["programs"]
        results.append(check)
        failed |= _failed(check)
    _dump({"ok": not failed, "groups": results}, Path(args.out) if args.out else None)
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nisqmap", description="Map quantum circuits onto noisy devices.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("profile", help="involvement lists and coupling matrix of a circuit")
    sp.add_argument("circuit")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("gen-device", help="lattice plus synthetic calibration")
    sp.add_argument("spec", help="grid2d:WxH, grid3d:XxYxZ or toronto")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    d = CalibrationRanges()
    sp.add_argument("--cx", type=_pair, default=d.cx, metavar="LO,HI")
    sp.add_argument("--readout", type=_pair, default=d.readout, metavar="LO,HI")
    sp.add_argument("--sq", type=_pair, default=d.sq, metavar="LO,HI")
    sp.add_argument("--ratio", type=_pair, default=d.ratio, metavar="LO,HI")
    sp.add_argument("--crosstalk-fraction", type=float, default=d.crosstalk_fraction)
    sp.set_defaults(func=cmd_gen_device)

    def common(sp):
        sp.add_argument("--device", required=True, help="device JSON file or lattice spec")
        sp.add_argument("--omega", type=float, default=cdap.DEFAULT_OMEGA)
        sp.add_argument("--xswap", choices=("on", "off"), default="on")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default="out")
        sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("map", help="partition, allocate, route and verify")
    common(sp)
    sp.add_argument("--circuit", action="append", required=True)
    sp.add_argument("--mode", choices=("single", "multi"), default="multi")
    sp.set_defaults(func=cmd_map)

    sp = sub.add_parser("schedule", help="batch a queue of circuits")
    common(sp)
    sp.add_argument("--queue", required=True, help="file with one circuit path per line")
    sp.add_argument("--epsilon", type=float, default=0.15)
    sp.add_argument("--max-coloc", type=int, default=3)
    sp.add_argument("--window", type=int, default=10)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("verify", help="re-audit a trace written by map or schedule")
    sp.add_argument("--device", required=True)
    sp.add_argument("--trace", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("NISQMAP_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QasmError, DeviceError, InputError, jsonschema.ValidationError, OSError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"nisqmap: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (cdap.PartitionFailure, RoutingError) as exc:
        print(f"nisqmap: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
