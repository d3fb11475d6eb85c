"""Domain types shared by every recovery scheme: sensors, the deployment
region, energy bookkeeping, and the seeded random-number contract.

All distances are Euclidean in the plane and all comparisons are exact
(64-bit floats, no epsilon): inputs are generated, not measured.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np


class MoveExceedsCapacity(Exception):
    """Requested relocation is farther than the sensor can travel."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def distance_to(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def distance(a: Point, b: Point) -> float:
    return a.distance_to(b)


@dataclass
class Sensor:
    """One sensor node.

    ``failed`` sensors never move and never appear in any graph; ``static``
    sensors are alive but have lost the right to relocate (energy drained
    below the configured threshold).
    """

    id: int
    pos: Point
    sensing_radius: float
    comm_radius: float
    energy: float
    initial_energy: float
    failed: bool = False
    static: bool = False

    @property
    def active(self) -> bool:
        return not self.failed

    @property
    def mobile(self) -> bool:
        return not self.static


@dataclass(frozen=True)
class Region:
    """Rectangular belt; left boundary at x=0, right boundary at x=length."""

    length: float
    width: float

    def __post_init__(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise ValueError("region dimensions must be positive")


@dataclass(frozen=True)
class EnergyModel:
    cost_per_unit_displacement: float = 1.0
    static_threshold: float = 10.0

    def __post_init__(self) -> None:
        if self.cost_per_unit_displacement <= 0:
            raise ValueError("cost_per_unit_displacement must be positive")
        if self.static_threshold < 0:
            raise ValueError("static_threshold must be non-negative")


def displacement_capacity(sensor: Sensor, model: EnergyModel) -> float:
    """Maximum distance the sensor may still travel.

    Feasibility tests compare distances against the full remaining energy
    budget; a move is allowed to land the sensor below the static threshold
    (it then becomes static).
    """
    if sensor.static or sensor.failed:
        return 0.0
    return sensor.energy / model.cost_per_unit_displacement


@dataclass(frozen=True)
class Move:
    sensor_id: int
    src: Point
    dest: Point

    @property
    def length(self) -> float:
        return self.src.distance_to(self.dest)


class World:
    """A deployment plus its currently designated barrier.

    Position and energy are mutated only through :meth:`apply_move`, which
    appends to ``move_log`` so total displacement is auditable.
    """

    def __init__(
        self,
        region: Region,
        sensors: Iterable[Sensor],
        energy_model: EnergyModel | None = None,
        barrier: Optional[list[int]] = None,
    ):
        self.region = region
        self.sensors: dict[int, Sensor] = {}
        for s in sensors:
            if s.id < 0:
                raise ValueError(f"sensor ids must be non-negative, got {s.id}")
            if s.id in self.sensors:
                raise ValueError(f"duplicate sensor id {s.id}")
            self.sensors[s.id] = s
        self.energy_model = energy_model or EnergyModel()
        self.barrier = barrier
        self.move_log: list[Move] = []

    def sensor(self, sensor_id: int) -> Sensor:
        return self.sensors[sensor_id]

    def active_sensors(self) -> list[Sensor]:
        return [s for _, s in sorted(self.sensors.items()) if s.active]

    def apply_move(self, sensor_id: int, dest: Point) -> None:
        """Relocate one sensor, paying energy per unit distance.

        Raises :class:`MoveExceedsCapacity` if the sensor is failed or the
        distance exceeds its remaining capacity; callers must treat that as
        an infeasible plan and apply nothing further.
        """
        s = self.sensors[sensor_id]
        if s.failed:
            raise MoveExceedsCapacity(f"sensor {sensor_id} has failed")
        d = s.pos.distance_to(dest)
        if d == 0.0:
            return
        if d > displacement_capacity(s, self.energy_model):
            raise MoveExceedsCapacity(
                f"sensor {sensor_id}: move of {d:.6g} exceeds capacity "
                f"{displacement_capacity(s, self.energy_model):.6g}"
            )
        self.move_log.append(Move(sensor_id, s.pos, dest))
        s.pos = dest
        s.energy -= d * self.energy_model.cost_per_unit_displacement
        if s.energy < self.energy_model.static_threshold:
            s.static = True

    def total_displacement(self) -> float:
        return sum(m.length for m in self.move_log)

    def total_energy_spent(self) -> float:
        return sum(s.initial_energy - s.energy for s in self.sensors.values())


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic random stream: same seed, same draws, any platform."""
    return np.random.Generator(np.random.PCG64(seed))


def derived_rng(*key: int) -> np.random.Generator:
    """Independent deterministic stream keyed by a tuple of integers."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))


# ---------------------------------------------------------------------------
# Deployment interchange format (JSON)
# ---------------------------------------------------------------------------

def world_to_json(world: World) -> str:
    """Serialize a deployment: region, shared radii, and per-sensor state."""
    sensors = [world.sensors[i] for i in sorted(world.sensors)]
    rho = sensors[0].sensing_radius if sensors else 0.0
    comm = sensors[0].comm_radius if sensors else 0.0
    doc = {
        "region": {"L": world.region.length, "W": world.region.width},
        "rho": rho,
        "comm": comm,
        "sensors": [
            {"id": s.id, "x": s.pos.x, "y": s.pos.y, "energy": s.energy}
            for s in sensors
        ],
    }
    return json.dumps(doc, indent=2)


def world_from_json(
    text: str, energy_model: EnergyModel | None = None
) -> World:
    doc = json.loads(text)
    region = Region(float(doc["region"]["L"]), float(doc["region"]["W"]))
    rho = float(doc["rho"])
    comm = float(doc["comm"])
    sensors = [
        Sensor(
            id=int(rec["id"]),
            pos=Point(float(rec["x"]), float(rec["y"])),
            sensing_radius=rho,
            comm_radius=comm,
            energy=float(rec["energy"]),
            initial_energy=float(rec["energy"]),
        )
        for rec in doc["sensors"]
    ]
    return World(region, sensors, energy_model=energy_model)
