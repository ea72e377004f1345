"""Fidelity-threshold admission of co-located jobs."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .cdap import HierarchyTree, PartitionFailure, PartitionResult, partition
from .circuit import Circuit
from .device import DeviceModel
from .profiler import Profile, profile_circuit
from .xswap import FinalSchedule, RouterConfig, route

log = logging.getLogger(__name__)


@dataclass
class Job:
    circuit: Circuit
    profile: Profile
    n_qubits: int
    depth: int
    n_cnots: int
    n_1q_gates: int

    @classmethod
    def from_circuit(cls, c: Circuit) -> "Job":
        return cls(c, profile_circuit(c), c.n_qubits, c.depth(), c.n_cnots, c.n_1q)

    @property
    def name(self) -> str:
        return self.circuit.name


@dataclass(frozen=True)
class SchedulerConfig:
    epsilon: float = 0.15
    max_coloc: int = 3
    window: int = 10

    def __post_init__(self):
        if not 0 <= self.epsilon < 1:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.max_coloc < 1 or self.window < 1:
            raise ValueError("max_coloc and window must be at least 1")


def sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def fitness(p0: Job, pi: Job) -> float:
    return 1.0 / (pi.n_qubits * sigmoid(abs(pi.depth - p0.depth)))


def _mean(xs) -> float:
    xs = list(xs)
    return sum(xs) / len(xs) if xs else 1.0


def region_reliabilities(region, model: DeviceModel) -> tuple[float, float, float]:
    """Mean CNOT, one-qubit and readout reliabilities of a physical region.

    CNOT reliability averages every edge with at least one end in the region.
    """
    rs = set(region)
    if not rs:
        raise ValueError("empty region")
    incident = [e for e in model.edges if e[0] in rs or e[1] in rs]
    r2 = _mean(1.0 - model.cx_error[e] for e in incident)
    r1 = _mean(1.0 - model.sq_error[q] for q in rs)
    ro = _mean(1.0 - model.readout_error[q] for q in rs)
    return r2, r1, ro


def epst(job: Job, region, model: DeviceModel, extra_cnots: int = 0) -> float:
    r2, r1, ro = region_reliabilities(region, model)
    return r2 ** (job.n_cnots + extra_cnots) * r1 ** job.n_1q_gates * ro ** job.n_qubits


@dataclass
class Batch:
    jobs: list[int]  # indices into the queue
    partition: PartitionResult | None
    sep_epst: list[float]
    co_epst: list[float]
    violation: list[float]
    reverted: bool = False
    schedule: FinalSchedule | None = None

    def to_json(self, queue=None) -> dict:
        out = {
            "jobs": self.jobs,
            "sep_epst": self.sep_epst,
            "co_epst": self.co_epst,
            "violation": self.violation,
            "reverted_to_separate": self.reverted,
            "partition": self.partition.to_json() if self.partition else None,
        }
        if queue is not None:
            out["names"] = [queue[j].name for j in self.jobs]
        if self.schedule is not None:
            out["n_swaps"] = self.schedule.n_swaps
            out["n_inter_swaps"] = self.schedule.n_inter
        return out


@dataclass
class BatchPlan:
    batches: list[Batch] = field(default_factory=list)
    n_jobs: int = 0

    @property
    def trf(self) -> float:
        return trf(self)

    def to_json(self, queue=None) -> dict:
        return {"n_jobs": self.n_jobs, "n_batches": len(self.batches), "trf": self.trf,
                "batches": [b.to_json(queue) for b in self.batches]}


def trf(plan: BatchPlan) -> float:
    if not plan.batches:
        raise ValueError("empty plan")
    return plan.n_jobs / len(plan.batches)


def _programs(jobs):
    return [(j.n_qubits, j.n_cnots, j.profile) for j in jobs]


def schedule(queue: list[Job], model: DeviceModel, tree: HierarchyTree,
             cfg: SchedulerConfig | None = None, router: RouterConfig | None = None,
             do_route: bool = False, workers: int = 1) -> BatchPlan:
    """Group ``queue`` into batches whose members each lose at most ``epsilon`` EPST."""
    cfg = cfg or SchedulerConfig()
    for j in queue:
        if j.n_qubits > model.n_qubits:
            raise ValueError(f"job {j.name} needs {j.n_qubits} qubits, device has {model.n_qubits}")
    sep_cache: dict[int, float] = {}

    def sep(k: int) -> float:
        if k not in sep_cache:
            res = partition(tree, _programs([queue[k]]), model, force_search=True)
            sep_cache[k] = epst(queue[k], res.layouts[0], model)
        return sep_cache[k]

    remaining = list(range(len(queue)))
    plan = BatchPlan([], len(queue))
    while remaining:
        head = remaining[0]
        cur = [head]
        cur_part = None
        cur_co = None
        reverted = False
        window = [k for k in remaining[1:]
                  if queue[k].n_qubits + queue[head].n_qubits <= model.n_qubits][: cfg.window]
        window.sort(key=lambda k: -fitness(queue[head], queue[k]))
        for k in window:
            if len(cur) >= cfg.max_coloc:
                break
            trial = cur + [k]
            if sum(queue[t].n_qubits for t in trial) > model.n_qubits:
                continue
            try:
                res = partition(tree, _programs([queue[t] for t in trial]), model)
            except PartitionFailure:
                log.info("partition failed for %s; kept separate", [queue[t].name for t in trial])
                reverted = True
                continue
            co = [epst(queue[t], res.layouts[n], model) for n, t in enumerate(trial)]
            viol = [1.0 - c / sep(t) for c, t in zip(co, trial)]
            if max(viol) <= cfg.epsilon:
                cur, cur_part, cur_co = trial, res, co
        if cur_part is None:
            cur_part = partition(tree, _programs([queue[head]]), model)
            cur_co = [epst(queue[head], cur_part.layouts[0], model)]
        seps = [sep(t) for t in cur]
        viol = [1.0 - c / s for c, s in zip(cur_co, seps)]
        plan.batches.append(Batch(cur, cur_part, seps, cur_co, viol, reverted and len(cur) == 1))
        remaining = [k for k in remaining if k not in cur]

    if do_route:
        route_plan(plan, queue, model, router, workers)
    return plan


def route_plan(plan: BatchPlan, queue: list[Job], model: DeviceModel,
               router: RouterConfig | None = None, workers: int = 1) -> None:
    def one(b: Batch) -> FinalSchedule:
        return route([queue[t].circuit for t in b.jobs], b.partition.layouts, model, router,
                     [queue[t].profile for t in b.jobs])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, plan.batches))
    else:
        results = [one(b) for b in plan.batches]
    for b, fs in zip(plan.batches, results):
        b.schedule = fs
