"""Centralized barrier restoration.

Two schemes share the alternate-path step:

* ``restore_nmove`` only searches for a detour between the survivors
  flanking the gap (sensors never move).
* ``restore_cmove`` falls back to relocation when no detour exists: a
  minimum-cost assignment of active sensors onto the existing barrier
  positions (solved with the Hungarian algorithm), which realizes cascaded
  shifting whenever the cheapest filler chain passes through barrier nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import Point, World, displacement_capacity
from .graph import (
    PL,
    PR,
    build_intersection_graph,
    find_alternate_path,
    splice_barrier,
    verify_barrier,
)

MECH_ALTERNATE = "alternate_path"
MECH_SHIFTING = "shifting"
MECH_NONE = "none"


@dataclass
class RestoreOutcome:
    success: bool
    mechanism: str = MECH_NONE
    moves: list[tuple[int, Point, Point]] = field(default_factory=list)
    total_displacement: float = 0.0
    new_barrier: Optional[list[int]] = None

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "mechanism": self.mechanism,
            "moves": [
                {"id": sid, "from": [a.x, a.y], "to": [b.x, b.y]}
                for sid, a, b in self.moves
            ],
            "total_displacement": self.total_displacement,
            "new_barrier": self.new_barrier,
        }


@dataclass
class AssignmentProblem:
    """Bipartite relocation model: active sensors on the left, current
    barrier positions (vacant ones included) on the right."""

    left: list[int]
    right: list[Point]
    cost: np.ndarray      # euclidean distances, |left| x |right|
    feasible: np.ndarray  # bool mask, same shape


def hungarian(problem: AssignmentProblem) -> Optional[list[int]]:
    """Minimum-cost assignment covering every right vertex.

    Returns, for each right index, the matched left index; None when no
    feasible full cover exists. Forbidden cells are priced at a large M
    (greater than any feasible total) and the chosen assignment is
    post-checked, so infeasibility detection is exact.
    """
    n_left, n_right = problem.cost.shape
    if n_left == 0 or n_right == 0:
        return None
    n = max(n_left, n_right)
    finite = problem.cost[problem.feasible]
    big = 1.0 + float(finite.sum()) if finite.size else 1.0
    square = np.full((n, n), big)
    square[:n_left, :n_right] = np.where(problem.feasible, problem.cost, big)
    # Dummy columns absorb surplus sensors at zero cost.
    if n_left > n_right:
        square[:, n_right:] = 0.0
    row_of_col = _solve_square(square)
    assignment = []
    for j in range(n_right):
        i = row_of_col[j]
        if i >= n_left or not problem.feasible[i, j]:
            return None
        assignment.append(i)
    return assignment


def _solve_square(cost: np.ndarray) -> list[int]:
    """O(n^3) Hungarian method (shortest augmenting paths over potentials).

    Rows are inserted in order and column scans break ties at the lowest
    index, so equal-cost optima resolve deterministically.
    """
    n = cost.shape[0]
    c = np.zeros((n + 1, n + 1))
    c[1:, 1:] = cost
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=np.int64)  # match[j] = row taken by column j
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            reduced = c[i0, 1:] - u[i0] - v[1:]
            free = ~used[1:]
            view = minv[1:]
            better = free & (reduced < view)
            view[better] = reduced[better]
            way[1:][better] = j0
            candidates = np.where(free, view, np.inf)
            j1 = int(np.argmin(candidates)) + 1
            delta = candidates[j1 - 1]
            used_cols = np.flatnonzero(used)
            u[match[used_cols]] += delta
            v[used_cols] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    return [int(match[j + 1]) - 1 for j in range(n)]


def build_assignment(world: World, failed: Iterable[int]) -> AssignmentProblem:
    """Model refilling the barrier (vacancies included) as an assignment.

    Every active sensor is a candidate; an edge is feasible when the sensor
    can afford the distance and the target lies within its communication
    range. A sensor standing exactly on a barrier position always keeps a
    zero-cost edge to it, so immobilized occupants can still be "assigned"
    in place.
    """
    failed = set(failed)
    barrier = world.barrier or []
    left = [s.id for s in world.active_sensors()]
    right = [world.sensor(b).pos for b in barrier]
    cost = np.zeros((len(left), len(right)))
    feasible = np.zeros((len(left), len(right)), dtype=bool)
    for i, sid in enumerate(left):
        s = world.sensor(sid)
        cap = displacement_capacity(s, world.energy_model)
        for j, target in enumerate(right):
            d = s.pos.distance_to(target)
            cost[i, j] = d
            feasible[i, j] = d == 0.0 or (
                s.mobile and d <= cap and d <= s.comm_radius
            )
    return AssignmentProblem(left, right, cost, feasible)


def _flanking_survivors(barrier: Sequence[int], failed: set[int]) -> tuple[int, int]:
    first = min(i for i, v in enumerate(barrier) if v in failed)
    last = max(i for i, v in enumerate(barrier) if v in failed)
    left = barrier[first - 1] if first > 0 else PL
    right = barrier[last + 1] if last + 1 < len(barrier) else PR
    return left, right


def _try_alternate_path(world: World, failed: set[int]) -> Optional[list[int]]:
    """Detour between the survivors flanking the failed span, spliced into
    the old chain; None when the graph offers no such path."""
    barrier = world.barrier or []
    left, right = _flanking_survivors(barrier, failed)
    graph = build_intersection_graph(world.active_sensors(), world.region)
    path = find_alternate_path(graph, left, right)
    if path is None:
        return None
    return splice_barrier(barrier, failed, path)


def restore_nmove(world: World, failed: Iterable[int]) -> RestoreOutcome:
    """Static baseline: recover only if a detour already exists."""
    failed = set(failed) & set(world.barrier or [])
    if not failed:
        return RestoreOutcome(success=verify_barrier(world))
    new_barrier = _try_alternate_path(world, failed)
    if new_barrier is None:
        return RestoreOutcome(success=False)
    world.barrier = new_barrier
    ok = verify_barrier(world)
    return RestoreOutcome(success=ok, mechanism=MECH_ALTERNATE, new_barrier=new_barrier)


def restore_cmove(world: World, failed: Iterable[int]) -> RestoreOutcome:
    """Alternate path first; otherwise relocate sensors onto the vacated
    chain positions by minimum-cost assignment, restoring the pre-failure
    geometry with new occupants."""
    failed = set(failed) & set(world.barrier or [])
    if not failed:
        return RestoreOutcome(success=verify_barrier(world))

    new_barrier = _try_alternate_path(world, failed)
    if new_barrier is not None:
        world.barrier = new_barrier
        ok = verify_barrier(world)
        return RestoreOutcome(
            success=ok, mechanism=MECH_ALTERNATE, new_barrier=new_barrier
        )

    problem = build_assignment(world, failed)
    assignment = hungarian(problem)
    if assignment is None:
        return RestoreOutcome(success=False)

    moves: list[tuple[int, Point, Point]] = []
    occupants: list[int] = []
    for j, target in enumerate(problem.right):
        sid = problem.left[assignment[j]]
        occupants.append(sid)
        src = world.sensor(sid).pos
        if src.distance_to(target) > 0.0:
            moves.append((sid, src, target))
    for sid, _, target in moves:
        world.apply_move(sid, target)
    world.barrier = occupants
    total = sum(a.distance_to(b) for _, a, b in moves)
    ok = verify_barrier(world)
    return RestoreOutcome(
        success=ok,
        mechanism=MECH_SHIFTING,
        moves=moves,
        total_displacement=total,
        new_barrier=occupants,
    )
