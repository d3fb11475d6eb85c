"""Deployment generation, failure injection, metric computation, and
experiment orchestration.

Sensors are dropped along the horizontal midline with uniform target
spacing and Gaussian placement error. Each trial kills sensors one at a
time, uniformly at random among the survivors, invoking the scheme's
restore step after every kill; trials aggregate into per-report-point mean
metrics. Everything is keyed off one master seed: identical configs produce
byte-identical CSV output regardless of worker count.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import restore_rmove
from .central import RestoreOutcome, restore_cmove, restore_nmove
from .core import (
    EnergyModel,
    Point,
    Region,
    Sensor,
    World,
    derived_rng,
)
from .distributed import default_hop_budget, handle_failure_dmove, init_recovery_nodes
from .graph import build_intersection_graph, find_barrier

SCHEMES = ("nmove", "rmove", "cmove", "dmove")

DEFAULT_REPORT_POINTS = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30)


class InitialBarrierImpossible(Exception):
    """No deployment draw produced an initial barrier within the redraw
    budget."""


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    length: float = 4000.0
    width: float = 60.0
    rho: float = 30.0
    comm: Optional[float] = None          # defaults to 2*rho
    sigma: float = 6.0
    initial_energy: float = 100.0
    cost_per_unit: float = 1.0
    static_threshold: float = 10.0
    k_hop_budget: Optional[int] = None    # defaults to max(2, n//20)
    failure_fraction_max: float = 0.30
    report_points: tuple[float, ...] = DEFAULT_REPORT_POINTS
    trials: int = 100
    schemes: tuple[str, ...] = SCHEMES
    seed: int = 0
    max_redraws: int = 50

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0 < self.failure_fraction_max <= 1:
            raise ValueError("failure_fraction_max must be in (0, 1]")
        if list(self.report_points) != sorted(self.report_points):
            raise ValueError("report_points must be ascending")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes: {sorted(unknown)}")

    @property
    def comm_radius(self) -> float:
        return self.comm if self.comm is not None else 2 * self.rho

    @property
    def hop_budget(self) -> int:
        return self.k_hop_budget if self.k_hop_budget is not None else default_hop_budget(self.n)

    def energy_model(self) -> EnergyModel:
        return EnergyModel(self.cost_per_unit, self.static_threshold)


@dataclass(frozen=True)
class MetricsRow:
    scheme: str
    n: int
    trials: int
    failure_fraction: float
    recovery_rate: float
    avg_total_displacement: float
    high_energy_pct: float


@dataclass
class EpisodeRecord:
    index: int
    failed_id: int
    on_barrier: bool
    mechanism: str
    success: bool
    displacement: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "episode": self.index,
                "failed": self.failed_id,
                "on_barrier": self.on_barrier,
                "mechanism": self.mechanism,
                "success": self.success,
                "displacement": self.displacement,
            }
        )


@dataclass
class TrialResult:
    rows: list[MetricsRow]
    episodes: list[EpisodeRecord] = field(default_factory=list)
    world: Optional[World] = None  # end-of-trial state, for audits


def generate_deployment(config: ExperimentConfig, rng: np.random.Generator) -> list[Sensor]:
    """Uniformly spaced targets along the midline plus Gaussian offsets on
    both axes; y is clamped to the belt."""
    n = config.n
    spacing = config.length / (n - 1)
    offsets = rng.normal(0.0, config.sigma, size=(n, 2))
    sensors = []
    for i in range(n):
        x = i * spacing + offsets[i, 0]
        y = min(max(config.width / 2 + offsets[i, 1], 0.0), config.width)
        sensors.append(
            Sensor(
                id=i,
                pos=Point(x, y),
                sensing_radius=config.rho,
                comm_radius=config.comm_radius,
                energy=config.initial_energy,
                initial_energy=config.initial_energy,
            )
        )
    return sensors


def deploy_with_barrier(config: ExperimentConfig, seed: int) -> World:
    """Draw deployments (fresh sub-seed each attempt) until one forms an
    initial barrier."""
    region = Region(config.length, config.width)
    for attempt in range(config.max_redraws):
        rng = derived_rng(seed, 0, attempt)
        world = World(region, generate_deployment(config, rng), config.energy_model())
        graph = build_intersection_graph(world.active_sensors(), world.region)
        barrier = find_barrier(graph)
        if barrier:
            world.barrier = barrier
            return world
    raise InitialBarrierImpossible(
        f"no initial barrier after {config.max_redraws} draws (seed {seed})"
    )


def compute_metrics(
    scheme: str,
    config: ExperimentConfig,
    world: World,
    failures: int,
    recoveries: int,
    cumulative_displacement: float,
    point: float,
) -> MetricsRow:
    if failures > 0:
        rate = 100.0 * recoveries / failures
        avg_disp = cumulative_displacement / failures
    else:
        rate, avg_disp = 100.0, 0.0
    threshold = 0.9 * config.initial_energy
    high = sum(1 for s in world.sensors.values() if s.active and s.energy > threshold)
    return MetricsRow(
        scheme=scheme,
        n=config.n,
        trials=1,
        failure_fraction=point,
        recovery_rate=rate,
        avg_total_displacement=avg_disp,
        high_energy_pct=100.0 * high / config.n,
    )


def run_trial(scheme: str, config: ExperimentConfig, seed: int) -> TrialResult:
    """One seeded trial: deploy, fail sensors one by one, restore, report.

    A failed restoration does not end the trial; the centralized schemes
    keep retrying the accumulated gap on later episodes, while the local
    schemes need the chain whole and simply keep failing until the trial
    ends.
    """
    world = deploy_with_barrier(config, seed)
    fail_rng = derived_rng(seed, 1)
    scheme_rng = derived_rng(seed, 2)
    states = init_recovery_nodes(world) if scheme == "dmove" else None

    total_failures = math.floor(config.failure_fraction_max * config.n)
    targets = [math.floor(p * config.n) for p in config.report_points]

    failures = 0
    recoveries = 0
    cum_disp = 0.0
    rows: list[MetricsRow] = []
    episodes: list[EpisodeRecord] = []

    def snapshot() -> None:
        for point, target in zip(config.report_points, targets):
            if target == failures:
                rows.append(
                    compute_metrics(
                        scheme, config, world, failures, recoveries, cum_disp, point
                    )
                )

    snapshot()  # report points that round down to zero failures
    for _ in range(total_failures):
        active_ids = [s.id for s in world.active_sensors()]
        failed_id = active_ids[int(fail_rng.integers(0, len(active_ids)))]
        on_chain = failed_id in (world.barrier or [])
        world.sensor(failed_id).failed = True
        outcome = _dispatch(scheme, config, world, states, failed_id, scheme_rng)
        failures += 1
        recoveries += int(outcome.success)
        cum_disp += outcome.total_displacement
        episodes.append(
            EpisodeRecord(
                index=failures,
                failed_id=failed_id,
                on_barrier=on_chain,
                mechanism=outcome.mechanism,
                success=outcome.success,
                displacement=outcome.total_displacement,
            )
        )
        snapshot()
    return TrialResult(rows, episodes, world)


def _dispatch(
    scheme: str,
    config: ExperimentConfig,
    world: World,
    states,
    failed_id: int,
    scheme_rng: np.random.Generator,
) -> RestoreOutcome:
    # The centralized schemes see the whole world, so they retry every
    # still-unfilled chain vacancy; the local schemes react to the new
    # failure alone, whatever the global state of the chain.
    if scheme in ("nmove", "cmove"):
        failed_on_chain = [
            sid for sid in (world.barrier or []) if world.sensor(sid).failed
        ]
        restore = restore_nmove if scheme == "nmove" else restore_cmove
        return restore(world, failed_on_chain)
    if scheme == "rmove":
        return restore_rmove(world, failed_id, scheme_rng)
    if scheme == "dmove":
        return handle_failure_dmove(world, states, failed_id, k=config.hop_budget)
    raise ValueError(f"unknown scheme {scheme!r}")


def trial_seed(config: ExperimentConfig, trial_index: int) -> int:
    """Scheme-independent per-trial seed so every scheme replays the same
    deployment and failure order."""
    mix = np.random.SeedSequence([config.seed, config.n, trial_index])
    return int(mix.generate_state(1, dtype=np.uint64)[0])


def _trial_task(
    args: tuple[str, ExperimentConfig, int]
) -> tuple[list[MetricsRow], list[dict]]:
    scheme, config, seed = args
    result = run_trial(scheme, config, seed)
    episodes = [json.loads(ep.to_json()) for ep in result.episodes]
    return result.rows, episodes


def run_experiment(
    config: ExperimentConfig, jobs: int = 1, detail_sink=None
) -> list[MetricsRow]:
    """Mean metrics per (scheme, report point) over seeded trials. Results
    are merged in (scheme, trial) order, so output never depends on the
    worker count. ``detail_sink``, when given, receives one JSON line per
    failure episode."""
    tasks = [
        (scheme, config, trial_seed(config, t))
        for scheme in config.schemes
        for t in range(config.trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_task, tasks, chunksize=4))
    else:
        results = [_trial_task(t) for t in tasks]
    if detail_sink is not None:
        for (scheme, _, seed), (_, episodes) in zip(tasks, results):
            for doc in episodes:
                doc.update(scheme=scheme, n=config.n, trial_seed=seed)
                detail_sink.write(json.dumps(doc) + "\n")
    all_rows = [rows for rows, _ in results]

    out: list[MetricsRow] = []
    per_scheme = config.trials
    for i, scheme in enumerate(config.schemes):
        chunk = all_rows[i * per_scheme : (i + 1) * per_scheme]
        for p_idx, point in enumerate(config.report_points):
            rates = [rows[p_idx].recovery_rate for rows in chunk]
            disps = [rows[p_idx].avg_total_displacement for rows in chunk]
            highs = [rows[p_idx].high_energy_pct for rows in chunk]
            out.append(
                MetricsRow(
                    scheme=scheme,
                    n=config.n,
                    trials=config.trials,
                    failure_fraction=point,
                    recovery_rate=float(np.mean(rates)),
                    avg_total_displacement=float(np.mean(disps)),
                    high_energy_pct=float(np.mean(highs)),
                )
            )
    return out


CSV_HEADER = "scheme,N,trials,failure_pct,recovery_rate,avg_total_displacement,high_energy_pct"


def rows_to_csv(rows: Sequence[MetricsRow], header: bool = True) -> str:
    lines = [CSV_HEADER] if header else []
    for r in rows:
        lines.append(
            f"{r.scheme},{r.n},{r.trials},{r.failure_fraction * 100:g},"
            f"{r.recovery_rate:.6f},{r.avg_total_displacement:.6f},"
            f"{r.high_energy_pct:.6f}"
        )
    return "\n".join(lines) + "\n"
