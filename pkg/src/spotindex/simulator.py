"""Deterministic discrete-event simulator of VM selection policies.

The engine walks integer seconds, records every VM holding as (t0, t1, vm,
working) segments plus acquire/migrate/revoke events, and derives all money
totals afterwards from that event log with one canonical segment biller.
Replaying a serialized report therefore reproduces the totals bit for bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .catalog import Catalog, ResourceRequirement, Scope, filter_candidates
from .errors import SelectionError, SimulationError, SpotIndexError
from .index import IndexCurve
from .policies import CandidateView, Policy, PolicyContext, PolicyDecision, build_policy
from .prices import PriceTrace, is_capped
from .tracking import TrackingLedger, migration_loss, should_migrate

log = logging.getLogger(__name__)

LONG_RUNNING = "long_running"
BSP = "bsp"

WORKING = "working"
MIGRATING = "migrating"
RESTARTING = "restarting"
DONE = "done"


@dataclass(frozen=True)
class Phase:
    duration: int
    cpu: float
    mem: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("phase duration must be positive")
        if self.cpu <= 0 or self.mem <= 0:
            raise ValueError("phase demands must be positive")


@dataclass(frozen=True)
class JobSpec:
    """A job as a sequence of per-task resource phases.

    kind "bsp" makes tasks run in lockstep: any migrating or restarting task
    pauses the rest, and a revoked task restarts from its last superstep
    barrier instead of its last phase boundary. reference_capacity is the
    (cpu, mem) the job is notionally entitled to when costed against the
    index; it defaults to the peak phase demand.
    """

    name: str
    phases: tuple[Phase, ...]
    kind: str = LONG_RUNNING
    tasks: int = 1
    requirement: ResourceRequirement | None = None
    mem_footprint: float = 4.0
    max_price: float | None = None
    reference_capacity: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("job name must be non-empty")
        if self.kind not in (LONG_RUNNING, BSP):
            raise ValueError(f"job kind must be '{LONG_RUNNING}' or '{BSP}'")
        if not self.phases:
            raise ValueError("job needs at least one phase")
        object.__setattr__(self, "phases", tuple(self.phases))
        if self.tasks < 1:
            raise ValueError("tasks must be at least 1")
        if self.mem_footprint <= 0:
            raise ValueError("mem_footprint must be positive")
        if self.max_price is not None and self.max_price <= 0:
            raise ValueError("max_price must be positive")
        if self.requirement is None:
            object.__setattr__(
                self,
                "requirement",
                ResourceRequirement(
                    min_cpu=max(p.cpu for p in self.phases),
                    min_mem=max(p.mem for p in self.phases),
                ),
            )
        if self.reference_capacity is not None:
            cpu, mem = self.reference_capacity
            if cpu <= 0 or mem <= 0:
                raise ValueError("reference_capacity must be positive")
            object.__setattr__(self, "reference_capacity", (float(cpu), float(mem)))

    @property
    def total_work(self) -> int:
        return sum(p.duration for p in self.phases)

    def phase_at(self, work: int) -> Phase:
        cumulative = 0
        for phase in self.phases:
            cumulative += phase.duration
            if work < cumulative:
                return phase
        return self.phases[-1]

    def phase_boundaries(self) -> list[int]:
        boundaries = [0]
        for phase in self.phases:
            boundaries.append(boundaries[-1] + phase.duration)
        return boundaries

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "tasks": self.tasks,
            "phases": [[p.duration, p.cpu, p.mem] for p in self.phases],
            "requirement": [self.requirement.min_cpu, self.requirement.min_mem],
            "mem_footprint": self.mem_footprint,
            "max_price": self.max_price,
            "reference_capacity": list(self.reference_capacity)
            if self.reference_capacity
            else None,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "JobSpec":
        requirement = raw.get("requirement")
        return cls(
            name=str(raw["name"]),
            kind=str(raw.get("kind", LONG_RUNNING)),
            tasks=int(raw.get("tasks", 1)),
            phases=tuple(Phase(int(d), float(c), float(m)) for d, c, m in raw["phases"]),
            requirement=(
                None
                if requirement is None
                else ResourceRequirement(float(requirement[0]), float(requirement[1]))
            ),
            mem_footprint=float(raw.get("mem_footprint", 4.0)),
            max_price=(None if raw.get("max_price") is None else float(raw["max_price"])),
            reference_capacity=(
                None
                if raw.get("reference_capacity") is None
                else tuple(raw["reference_capacity"])
            ),
        )


@dataclass(frozen=True)
class MigrationModel:
    """Stop-and-copy migration timing plus the revocation restart delay."""

    rate: float = 1.0
    fixed_floor: float = 0.0
    revocation_restart: int = 90
    pin_seconds: float | None = None

    def __post_init__(self):
        if self.rate < 0 or self.fixed_floor < 0 or self.revocation_restart < 0:
            raise ValueError("migration model parameters must be non-negative")
        if self.pin_seconds is not None and self.pin_seconds < 0:
            raise ValueError("pin_seconds must be non-negative")

    def seconds(self, mem_footprint: float) -> int:
        if self.pin_seconds is not None:
            return int(math.ceil(self.pin_seconds))
        return int(math.ceil(max(self.rate * mem_footprint, self.fixed_floor)))


@dataclass(frozen=True)
class RunParams:
    epoch: int = 300
    horizon: int = 3600
    sigma_window: int = 3600
    index_reference: str = "window"
    bsp_superstep: int = 300
    treat_cap_as_revocation: bool = False
    migration: MigrationModel = field(default_factory=MigrationModel)
    max_wallclock: int | None = None

    def __post_init__(self):
        if self.epoch <= 0:
            raise ValueError("epoch must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.sigma_window <= 0:
            raise ValueError("sigma_window must be positive")
        if self.index_reference not in ("window", "instant"):
            raise ValueError("index_reference must be 'window' or 'instant'")
        if self.bsp_superstep <= 0:
            raise ValueError("bsp_superstep must be positive")


@dataclass
class SimReport:
    policy: str
    job: str
    tasks: int
    composition: list[str]
    candidates: list[str]
    params: dict
    seed: int | None
    work_seconds: int
    wallclock_seconds: int
    downtime_seconds: int
    availability: float
    migrations: int
    aborted_migrations: int
    revocations: int
    total_cost: float
    productive_cost: float
    gain: float
    loss: float
    net: float
    index_cost_reference: float
    index_cost_held: float
    cost_vs_on_demand: float | None
    cost_vs_index: float | None
    final_vms: list
    finish_times: list
    events: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, raw: dict) -> "SimReport":
        return cls(**{k: raw[k] for k in cls.__dataclass_fields__})


def interval_cost(trace: PriceTrace, t0: int, t1: int) -> float:
    """Money spent holding one VM over [t0, t1): price times seconds / 3600."""
    return sum(p * (b - a) for a, b, p in trace.segments(t0, t1)) / 3600.0


def window_stats(trace: PriceTrace, t: int, window: int) -> tuple[float, float]:
    """Time-weighted mean and population std over [t - window, t).

    The window is clipped to the trace start; with no lookback at all the
    instantaneous price stands in and the std is zero.
    """
    t0 = max(t - window, int(trace.first_ts))
    if t <= t0:
        return trace.price_at(t), 0.0
    weighted = 0.0
    squared = 0.0
    span = 0
    for a, b, price in trace.segments(t0, t):
        dt = b - a
        weighted += price * dt
        squared += price * price * dt
        span += dt
    mean = weighted / span
    variance = max(squared / span - mean * mean, 0.0)
    return mean, math.sqrt(variance)


def compute_totals(
    events,
    traces,
    catalog,
    composition,
    reference_capacity,
    tasks: int,
    t_end: int,
) -> dict:
    """Derive all money totals from hold segments in the event log.

    This is the single source of truth for billing: the simulator calls it
    on its own log and replay calls it on a deserialized one, so the two
    agree exactly.
    """
    curve = IndexCurve(traces, catalog, composition)
    total_cost = 0.0
    productive_cost = 0.0
    index_cost_held = 0.0
    for event in events:
        if event.get("event") != "hold":
            continue
        trace = traces[event["vm"]]
        cost = interval_cost(trace, event["t0"], event["t1"])
        total_cost += cost
        if event["working"]:
            productive_cost += cost
            scale = catalog[event["vm"]].capacity_scale
            index_cost_held += curve.integrate(event["t0"], event["t1"]) * scale / 3600.0
    gain = index_cost_held - productive_cost
    loss = total_cost - productive_cost
    ref_scale = math.sqrt(reference_capacity[0] * reference_capacity[1])
    index_cost_reference = curve.integrate(0, t_end) * ref_scale * tasks / 3600.0
    return {
        "total_cost": total_cost,
        "productive_cost": productive_cost,
        "gain": gain,
        "loss": loss,
        "net": gain - loss,
        "index_cost_held": index_cost_held,
        "index_cost_reference": index_cost_reference,
    }


class _Task:
    __slots__ = ("idx", "vm", "work", "state", "stall_until", "mig_src", "mig_dst", "holds", "done_at")

    def __init__(self, idx: int):
        self.idx = idx
        self.vm = None
        self.work = 0
        self.state = WORKING
        self.stall_until = 0
        self.mig_src = None
        self.mig_dst = None
        self.holds = {}
        self.done_at = None


class _Engine:
    def __init__(
        self,
        job: JobSpec,
        policy: Policy,
        traces: dict,
        catalog: Catalog,
        composition,
        params: RunParams,
        scope: Scope | None,
        forced_migrations,
        seed: int | None,
    ):
        self.job = job
        self.policy = policy
        self.traces = traces
        self.catalog = catalog
        self.composition = list(composition)
        self.params = params
        self.seed = seed
        self.curve = IndexCurve(traces, catalog, self.composition)
        specs = filter_candidates(catalog, job.requirement, scope)
        if not specs:
            raise SimulationError(f"no candidate VM satisfies job {job.name!r}")
        missing = [s.id for s in specs if s.id not in traces]
        if missing:
            raise SimulationError(f"candidates without price traces: {missing}")
        self.candidates = specs
        self.candidate_ids = {s.id for s in specs}
        if job.max_price is not None:
            self.max_price = job.max_price
        else:
            self.max_price = min(s.on_demand_price for s in specs)
        self.t_m = params.migration.seconds(job.mem_footprint)
        self.reference_capacity = job.reference_capacity or (
            job.requirement.min_cpu,
            job.requirement.min_mem,
        )
        self.forced = sorted(forced_migrations or [], key=lambda f: (f[0], f[1]))
        self.tasks = [_Task(i) for i in range(job.tasks)]
        self.bsp = job.kind == BSP
        self.events: list[dict] = []
        self.migrations = 0
        self.aborted = 0
        self.revocations = 0
        self.downtime = 0

    # hold segment bookkeeping

    def _open_hold(self, task: _Task, vm: str, t: int, working: bool):
        task.holds[vm] = [t, working]

    def _close_hold(self, task: _Task, vm: str, t: int):
        start, working = task.holds.pop(vm)
        if t > start:
            self.events.append(
                {
                    "event": "hold",
                    "t0": start,
                    "t1": t,
                    "task": task.idx,
                    "vm": vm,
                    "working": working,
                }
            )

    def _set_flags(self, task: _Task, t: int, working: bool):
        for vm in list(task.holds):
            if task.holds[vm][1] != working:
                self._close_hold(task, vm, t)
                self._open_hold(task, vm, t, working)

    # market views

    def _price(self, vm: str, t: int) -> float:
        return self.traces[vm].price_at(t)

    def _crossed(self, vm: str, t: int) -> bool:
        price = self._price(vm, t)
        if price > self.max_price:
            return True
        return self.params.treat_cap_as_revocation and is_capped(price, self.catalog[vm])

    def _views(self, t: int) -> tuple[CandidateView, ...]:
        views = []
        for spec in self.candidates:
            if self._crossed(spec.id, t):
                continue
            price = self._price(spec.id, t)
            mean, std = window_stats(self.traces[spec.id], t, self.params.sigma_window)
            views.append(CandidateView(spec=spec, price=price, window_mean=mean, window_std=std))
        return tuple(views)

    def _ctx(self, t: int, task: _Task | None, work: int | None = None) -> PolicyContext:
        reference_work = work if work is not None else (task.work if task else 0)
        phase = self.job.phase_at(reference_work)
        index_now = self.curve.value_at(t)
        if self.params.index_reference == "window":
            index_reference = self.curve.window_mean(t, self.params.sigma_window)
        else:
            index_reference = index_now
        return PolicyContext(
            t=t,
            candidates=self._views(t),
            cpu_used=phase.cpu,
            mem_used=phase.mem,
            index_now=index_now,
            index_reference=index_reference,
            current=task.vm if task else None,
            horizon=self.params.horizon,
            migration_seconds=float(self.t_m),
        )

    # state transitions

    def _acquire(self, task: _Task, t: int, reason: str):
        try:
            ctx = self._ctx(t, None, work=task.work)
            vm = self.policy.select(ctx)
        except SelectionError as exc:
            raise SimulationError(f"selection failed at t={t}: {exc}") from exc
        task.vm = vm
        self.events.append(
            {
                "event": "acquire",
                "t": t,
                "task": task.idx,
                "vm": vm,
                "price": self._price(vm, t),
                "reason": reason,
            }
        )
        return vm

    def _start_migration(self, task: _Task, t: int, target: str, reason: str, forced: bool):
        src = task.vm
        price_src = self._price(src, t)
        price_dst = self._price(target, t)
        sufficiency_ok = should_migrate(
            self.curve.value_at(t),
            price_src / self.catalog[src].capacity_scale,
            price_dst / self.catalog[target].capacity_scale,
        )
        self.events.append(
            {
                "event": "migrate",
                "t": t,
                "t_end": t + self.t_m,
                "task": task.idx,
                "src": src,
                "dst": target,
                "loss": migration_loss(price_src, price_dst, self.t_m),
                "sufficiency_ok": sufficiency_ok,
                "forced": forced,
                "reason": reason,
            }
        )
        if self.t_m == 0:
            self._close_hold(task, src, t)
            self._open_hold(task, target, t, False)
            task.vm = target
            self.migrations += 1
            return
        task.state = MIGRATING
        task.stall_until = t + self.t_m
        task.mig_src = src
        task.mig_dst = target
        self._open_hold(task, target, t, False)

    def _finish_migration(self, task: _Task, t: int):
        self._close_hold(task, task.mig_src, t)
        task.vm = task.mig_dst
        task.mig_src = None
        task.mig_dst = None
        task.state = WORKING
        self.migrations += 1

    def _abort_migration(self, task: _Task, t: int, cause: str):
        self.events.append(
            {
                "event": "abort_migration",
                "t": t,
                "task": task.idx,
                "src": task.mig_src,
                "dst": task.mig_dst,
                "cause": cause,
            }
        )
        self.aborted += 1
        if cause == "dst_price":
            self._close_hold(task, task.mig_dst, t)
            task.vm = task.mig_src
            task.mig_src = None
            task.mig_dst = None
            task.state = WORKING

    def _rollback_point(self, work: int) -> int:
        if self.bsp:
            return (work // self.params.bsp_superstep) * self.params.bsp_superstep
        return max(b for b in self.job.phase_boundaries() if b <= work)

    def _revoke(self, task: _Task, t: int):
        old_vm = task.vm
        old_price = self._price(old_vm, t)
        for vm in list(task.holds):
            self._close_hold(task, vm, t)
        rolled = self._rollback_point(task.work)
        work_lost = task.work - rolled
        task.work = rolled
        task.mig_src = None
        task.mig_dst = None
        self.revocations += 1
        new_vm = self._acquire(task, t, reason="revocation")
        restart = self.params.migration.revocation_restart
        task.state = RESTARTING if restart > 0 else WORKING
        task.stall_until = t + restart
        self._open_hold(task, new_vm, t, False)
        self.events.append(
            {
                "event": "revoke",
                "t": t,
                "task": task.idx,
                "vm": old_vm,
                "price": old_price,
                "new_vm": new_vm,
                "restart_until": task.stall_until,
                "work_lost": work_lost,
            }
        )

    # per-second predicates

    def _unfinished(self):
        return [task for task in self.tasks if task.state != DONE]

    def _works_now(self, task: _Task) -> bool:
        if task.state != WORKING:
            return False
        if self.bsp:
            unfinished = self._unfinished()
            if any(peer.state in (MIGRATING, RESTARTING) for peer in unfinished):
                return False
            min_work = min(peer.work for peer in unfinished)
            if task.work > min_work:
                return False
        return True

    # main loop

    def run(self) -> SimReport:
        job = self.job
        total_work = job.total_work
        limit = self.params.max_wallclock or (10 * total_work + 86400)
        forced_queue = list(self.forced)

        for task in self.tasks:
            vm = self._acquire(task, 0, reason="initial")
            self._open_hold(task, vm, 0, True)

        t = 0
        while any(task.state != DONE for task in self.tasks):
            if t > limit:
                raise SimulationError(f"no convergence after {limit} simulated seconds")

            # stall completions scheduled for this instant
            for task in self.tasks:
                if task.state == MIGRATING and task.stall_until == t:
                    self._finish_migration(task, t)
                elif task.state == RESTARTING and task.stall_until == t:
                    task.state = WORKING

            # revocation checks against the prices now in force
            for task in self.tasks:
                if task.state == DONE:
                    continue
                if task.state == MIGRATING:
                    if self._crossed(task.mig_src, t):
                        self._abort_migration(task, t, cause="src_price")
                        self._revoke(task, t)
                    elif self._crossed(task.mig_dst, t):
                        self._abort_migration(task, t, cause="dst_price")
                elif self._crossed(task.vm, t):
                    self._revoke(task, t)

            # externally scripted migrations
            while forced_queue and forced_queue[0][0] == t:
                _, idx, target = forced_queue.pop(0)
                task = self.tasks[idx]
                if task.state != WORKING:
                    raise SimulationError(
                        f"forced migration at t={t}: task {idx} is {task.state}"
                    )
                if target not in self.candidate_ids:
                    raise SimulationError(f"forced migration target {target!r} not a candidate")
                if self._price(target, t) > self.max_price:
                    raise SimulationError(
                        f"forced migration target {target!r} priced above max at t={t}"
                    )
                if target == task.vm:
                    log.warning("forced migration at t=%d targets the held vm, skipped", t)
                    continue
                self._start_migration(task, t, target, reason="forced", forced=True)

            # policy decision tick
            if t > 0 and t % self.params.epoch == 0:
                decisions = []
                for task in self.tasks:
                    if task.state != WORKING or not self._works_now(task):
                        continue
                    decision = self.policy.decide(self._ctx(t, task))
                    decisions.append((task, decision))
                for task, decision in decisions:
                    if decision.action != PolicyDecision.MIGRATE:
                        continue
                    if decision.target == task.vm:
                        continue
                    if decision.target not in self.candidate_ids:
                        raise SimulationError(
                            f"policy chose non-candidate {decision.target!r} at t={t}"
                        )
                    self._start_migration(
                        task, t, decision.target, reason=decision.reason, forced=False
                    )

            # advance one second
            any_down = False
            for task in self.tasks:
                if task.state == DONE:
                    continue
                works = self._works_now(task)
                self._set_flags(task, t, works)
                if works:
                    task.work += 1
                else:
                    any_down = True
            if any_down:
                self.downtime += 1

            t += 1
            for task in self.tasks:
                if task.state != DONE and task.work >= total_work:
                    for vm in list(task.holds):
                        self._close_hold(task, vm, t)
                    task.state = DONE
                    task.done_at = t
                    self.events.append({"event": "finish", "t": t, "task": task.idx})

        t_end = max(task.done_at for task in self.tasks)
        totals = compute_totals(
            self.events,
            self.traces,
            self.catalog,
            self.composition,
            self.reference_capacity,
            job.tasks,
            t_end,
        )
        availability = 1.0 - self.downtime / t_end if t_end > 0 else 1.0
        params_dict = {
            "epoch": self.params.epoch,
            "horizon": self.params.horizon,
            "sigma_window": self.params.sigma_window,
            "index_reference": self.params.index_reference,
            "bsp_superstep": self.params.bsp_superstep,
            "treat_cap_as_revocation": self.params.treat_cap_as_revocation,
            "max_price": self.max_price,
            "migration_seconds": self.t_m,
            "migration_rate": self.params.migration.rate,
            "migration_fixed_floor": self.params.migration.fixed_floor,
            "revocation_restart": self.params.migration.revocation_restart,
            "reference_capacity": list(self.reference_capacity),
            "job": job.to_dict(),
        }
        return SimReport(
            policy=self.policy.name,
            job=job.name,
            tasks=job.tasks,
            composition=list(self.composition),
            candidates=[s.id for s in self.candidates],
            params=params_dict,
            seed=self.seed,
            work_seconds=total_work,
            wallclock_seconds=t_end,
            downtime_seconds=self.downtime,
            availability=availability,
            migrations=self.migrations,
            aborted_migrations=self.aborted,
            revocations=self.revocations,
            total_cost=totals["total_cost"],
            productive_cost=totals["productive_cost"],
            gain=totals["gain"],
            loss=totals["loss"],
            net=totals["net"],
            index_cost_reference=totals["index_cost_reference"],
            index_cost_held=totals["index_cost_held"],
            cost_vs_on_demand=None,
            cost_vs_index=None,
            final_vms=[task.vm for task in self.tasks],
            finish_times=[task.done_at for task in self.tasks],
            events=self.events,
        )


def run_simulation(
    job: JobSpec,
    policy,
    traces: dict,
    catalog: Catalog,
    composition,
    params: RunParams | None = None,
    scope: Scope | None = None,
    forced_migrations=None,
    seed: int | None = None,
) -> SimReport:
    """Run one job under one policy over the given traces.

    `policy` may be a Policy instance or a registry name. forced_migrations
    is a list of (t, task_index, target_vm_id) the engine executes
    unconditionally, for experiments that script a move. The run itself is
    deterministic; `seed` only tags the report with the traces' provenance.
    """
    if isinstance(policy, str):
        policy = build_policy(policy)
    engine = _Engine(
        job,
        policy,
        traces,
        catalog,
        composition,
        params or RunParams(),
        scope,
        forced_migrations,
        seed,
    )
    return engine.run()


def on_demand_baseline(job: JobSpec, catalog: Catalog, scope: Scope | None = None) -> float:
    """Cost of the cheapest qualifying on-demand VM running the job straight
    through: no revocations, no stalls, one task-hour costs one od-hour."""
    specs = filter_candidates(catalog, job.requirement, scope)
    if not specs:
        raise SimulationError(f"no candidate VM satisfies job {job.name!r}")
    cheapest = min(s.on_demand_price for s in specs)
    return cheapest * job.total_work * job.tasks / 3600.0


def normalize_report(
    report: SimReport, baseline_on_demand_cost: float, index_cost: float | None = None
) -> SimReport:
    """Fill in the cost ratios against the on-demand and index baselines."""
    if baseline_on_demand_cost <= 0:
        raise ValueError("baseline_on_demand_cost must be positive")
    reference = report.index_cost_reference if index_cost is None else index_cost
    report.cost_vs_on_demand = report.total_cost / baseline_on_demand_cost
    report.cost_vs_index = report.total_cost / reference if reference > 0 else None
    return report


def replay(report: SimReport | dict, traces: dict, catalog: Catalog) -> dict:
    """Recompute a report's money totals from its serialized event log."""
    raw = report.to_dict() if isinstance(report, SimReport) else report
    return compute_totals(
        raw["events"],
        traces,
        catalog,
        raw["composition"],
        tuple(raw["params"]["reference_capacity"]),
        raw["tasks"],
        raw["wallclock_seconds"],
    )


def ledger_from_report(report: SimReport | dict, traces: dict, catalog: Catalog) -> TrackingLedger:
    """Rebuild the gain/loss ledger implied by a report's hold segments."""
    raw = report.to_dict() if isinstance(report, SimReport) else report
    curve = IndexCurve(traces, catalog, raw["composition"])
    ledger = TrackingLedger()
    for event in raw["events"]:
        if event.get("event") != "hold":
            continue
        cost = interval_cost(traces[event["vm"]], event["t0"], event["t1"])
        if event["working"]:
            scale = catalog[event["vm"]].capacity_scale
            index_cost = curve.integrate(event["t0"], event["t1"]) * scale / 3600.0
            ledger.add_gain(
                event["t0"], event["t1"], event["vm"], index_cost - cost, detail="hold"
            )
        else:
            ledger.add_loss(event["t0"], event["t1"], event["vm"], cost, detail="stall")
    return ledger


def _min_mean_max(values) -> dict:
    values = list(values)
    return {"min": min(values), "mean": sum(values) / len(values), "max": max(values)}


def run_trials(
    job: JobSpec,
    policy,
    trace_sets,
    catalog: Catalog,
    composition,
    params: RunParams | None = None,
    scope: Scope | None = None,
    seeds=None,
) -> dict:
    """One run per trace set, plus min/mean/max of cost and availability."""
    trace_sets = list(trace_sets)
    if not trace_sets:
        raise ValueError("no trace sets to run")
    if seeds is not None and len(seeds) != len(trace_sets):
        raise ValueError("seeds must match trace_sets one to one")
    reports = []
    for i, traces in enumerate(trace_sets):
        try:
            reports.append(
                run_simulation(
                    job,
                    policy,
                    traces,
                    catalog,
                    composition,
                    params=params,
                    scope=scope,
                    seed=None if seeds is None else seeds[i],
                )
            )
        except SpotIndexError as exc:
            raise SimulationError(f"trial {i} failed: {exc}") from exc
    return {
        "trials": reports,
        "total_cost": _min_mean_max(r.total_cost for r in reports),
        "availability": _min_mean_max(r.availability for r in reports),
        "migrations": _min_mean_max(r.migrations for r in reports),
        "revocations": _min_mean_max(r.revocations for r in reports),
    }


def aggregate_reports(reports) -> dict:
    """Cross-run summary of the fields experiments compare."""
    if not reports:
        raise ValueError("no reports to aggregate")
    dicts = [r.to_dict() if isinstance(r, SimReport) else r for r in reports]

    def stats(key):
        values = [d[key] for d in dicts]
        mean = sum(values) / len(values)
        variance = sum((v - mean) ** 2 for v in values) / len(values)
        return {"mean": mean, "std": math.sqrt(variance), "min": min(values), "max": max(values)}

    return {
        "n_runs": len(dicts),
        "policy": sorted({d["policy"] for d in dicts}),
        "total_cost": stats("total_cost"),
        "availability": stats("availability"),
        "migrations": stats("migrations"),
        "revocations": stats("revocations"),
        "net": stats("net"),
    }
