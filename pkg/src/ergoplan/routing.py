"""Capacitated route selection over depot, operator, and refill waypoints.

The vehicle starts at the depot, must visit every operator exactly once,
may carry at most ``capacity`` payloads between refill visits, and must end
at a refill station.  Selection is an integer program over undirected edge
multiplicities solved by depth-first branch and bound with lazily separated
subtour/capacity cuts, then decoded into a concrete stop sequence.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, rest_to_rest_segment
from .mission import Mission
from .stl import TimedTrace

__all__ = [
    "RoutingError",
    "Infeasible",
    "Disconnected",
    "HorizonExceeded",
    "RoutingGraph",
    "IlpSolution",
    "Route",
    "build_graph",
    "capacity_cut_rhs",
    "solve_ilp",
    "extract_route",
    "plan_route",
    "route_to_trajectory",
]

DEPOT = "depot"
OPERATOR = "operator"
REFILL = "refill"


class RoutingError(Exception):
    """Base class for route-selection failures."""


class Infeasible(RoutingError):
    """No edge selection satisfies the degree and capacity constraints."""


class Disconnected(RoutingError):
    """An accepted edge selection admits no valid walk (missing cut)."""


class HorizonExceeded(RoutingError):
    """The routed trajectory does not fit inside the mission horizon."""


@dataclass(frozen=True, eq=False)
class RoutingGraph:
    """Waypoint graph: vertex 0 is the depot, then operators, then refills."""

    positions: np.ndarray  # (V, 3) waypoint targets
    kinds: tuple[str, ...]
    capacity: int
    edges: tuple[tuple[int, int], ...]  # i < j, sorted lexicographically
    weights: np.ndarray  # (E,) Euclidean lengths
    max_mult: tuple[int, ...]  # per-edge multiplicity cap

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=float)
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        weights = np.asarray(self.weights, dtype=float)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        if len(self.edges) != len(self.weights) or len(self.edges) != len(self.max_mult):
            raise ValueError("edge arrays disagree in length")

    @property
    def operator_ids(self) -> tuple[int, ...]:
        return tuple(v for v, k in enumerate(self.kinds) if k == OPERATOR)

    @property
    def refill_ids(self) -> tuple[int, ...]:
        return tuple(v for v, k in enumerate(self.kinds) if k == REFILL)


@dataclass(frozen=True, eq=False)
class IlpSolution:
    """Optimal edge multiplicities and their total length."""

    z: dict[tuple[int, int], int]
    objective: float


@dataclass(frozen=True, eq=False)
class Route:
    """Decoded stop sequence: depot first, a refill station last."""

    stops: tuple[int, ...]
    kinds: tuple[str, ...]
    positions: np.ndarray  # (len(stops), 3)
    length: float

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=float)
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        if self.kinds[0] != DEPOT or self.kinds[-1] != REFILL:
            raise ValueError("route must start at the depot and end at a refill")


def build_graph(mission: Mission) -> RoutingGraph:
    """Assemble the waypoint graph for a mission.

    Edges: depot-operator (multiplicity <= 1), operator-operator only when
    the payload capacity allows consecutive handovers (multiplicity <= 1),
    and operator-refill (multiplicity <= 2, allowing an out-and-back).
    Depot-refill and refill-refill edges are never useful and are omitted.
    """
    points = [np.asarray(mission.depot, dtype=float)]
    kinds = [DEPOT]
    for op in mission.operators:
        points.append(op.box.center)
        kinds.append(OPERATOR)
    for box in mission.refills:
        points.append(box.center)
        kinds.append(REFILL)
    positions = np.array(points)

    n_ops = len(mission.operators)
    op_ids = range(1, 1 + n_ops)
    rf_ids = range(1 + n_ops, 1 + n_ops + len(mission.refills))

    edges: list[tuple[int, int]] = []
    caps: list[int] = []
    for i in op_ids:
        edges.append((0, i))
        caps.append(1)
    if mission.capacity >= 2:
        for i, j in itertools.combinations(op_ids, 2):
            edges.append((i, j))
            caps.append(1)
    for i in op_ids:
        for j in rf_ids:
            edges.append((i, j))
            caps.append(2)
    order = sorted(range(len(edges)), key=lambda e: edges[e])
    edges = [edges[e] for e in order]
    caps = [caps[e] for e in order]
    weights = np.array(
        [float(np.linalg.norm(positions[i] - positions[j])) for i, j in edges]
    )
    return RoutingGraph(
        positions=positions,
        kinds=tuple(kinds),
        capacity=mission.capacity,
        edges=tuple(edges),
        weights=weights,
        max_mult=tuple(caps),
    )


def capacity_cut_rhs(n_operators: int, capacity: int) -> int:
    """Minimum number of refill runs needed to serve ``n_operators``."""
    if n_operators < 0 or capacity < 1:
        raise ValueError("need n_operators >= 0 and capacity >= 1")
    return -(-n_operators // capacity)


def _search(
    graph: RoutingGraph, cuts: list[tuple[tuple[int, ...], int]]
) -> list[int] | None:
    """Exact DFS branch and bound; returns the lexicographically least optimum.

    Edges are branched in index order with multiplicities tried ascending,
    and an incumbent is replaced only on strictly lower cost, so the first
    optimum reached is the lexicographically least one.
    """
    # A candidate replaces the incumbent only when strictly cheaper by this
    # margin, so float-level cost ties (e.g. mirrored geometry summed in a
    # different order) resolve to the lexicographically earliest optimum.
    tie_eps = 1e-9
    n_edges = len(graph.edges)
    n_vertices = graph.positions.shape[0]
    incident: list[list[int]] = [[] for _ in range(n_vertices)]
    for e, (i, j) in enumerate(graph.edges):
        incident[i].append(e)
        incident[j].append(e)

    target = {0: 1}
    for v in graph.operator_ids:
        target[v] = 2

    deg = [0] * n_vertices
    rem = [sum(graph.max_mult[e] for e in incident[v]) for v in range(n_vertices)]
    cut_members = [frozenset(ids) for ids, _ in cuts]
    cut_sum = [0] * len(cuts)
    cut_rem = [sum(graph.max_mult[e] for e in ids) for ids, _ in cuts]
    assign = [0] * n_edges
    best_cost = math.inf
    best_assign: list[int] | None = None

    demand_vertices = [v for v in range(n_vertices) if v in target]

    def lower_bound(k: int, cost: float) -> float:
        extra = 0.0
        for v in demand_vertices:
            need = target[v] - deg[v]
            if need <= 0:
                continue
            slots: list[float] = []
            for e in incident[v]:
                if e >= k and assign[e] == 0:
                    slots.extend([graph.weights[e]] * graph.max_mult[e])
            if len(slots) < need:
                return math.inf
            slots.sort()
            extra += sum(slots[:need])
        return cost + extra / 2.0

    def rec(k: int, cost: float) -> None:
        nonlocal best_cost, best_assign
        if k == n_edges:
            if cost >= best_cost - tie_eps:
                return
            if any(deg[v] != t for v, t in target.items()):
                return
            if any(cut_sum[c] < cuts[c][1] for c in range(len(cuts))):
                return
            best_cost = cost
            best_assign = list(assign)
            return
        if lower_bound(k, cost) >= best_cost - tie_eps:
            return
        i, j = graph.edges[k]
        cap = graph.max_mult[k]
        rem[i] -= cap
        rem[j] -= cap
        touching = [c for c in range(len(cuts)) if k in cut_members[c]]
        for c in touching:
            cut_rem[c] -= cap
        for val in range(cap + 1):
            ok = True
            for v in (i, j):
                t = target.get(v)
                if t is None:
                    continue
                if deg[v] + val > t or deg[v] + val + rem[v] < t:
                    ok = False
                    break
            if ok:
                for c in touching:
                    if cut_sum[c] + val + cut_rem[c] < cuts[c][1]:
                        ok = False
                        break
            if ok:
                assign[k] = val
                deg[i] += val
                deg[j] += val
                for c in touching:
                    cut_sum[c] += val
                rec(k + 1, cost + val * float(graph.weights[k]))
                for c in touching:
                    cut_sum[c] -= val
                deg[i] -= val
                deg[j] -= val
                assign[k] = 0
        rem[i] += cap
        rem[j] += cap
        for c in touching:
            cut_rem[c] += cap
    rec(0, 0.0)
    return best_assign


def _components(graph: RoutingGraph, assign: list[int]) -> list[set[int]]:
    """Connected components of the subgraph induced by selected edges."""
    parent = list(range(graph.positions.shape[0]))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for e, (i, j) in enumerate(graph.edges):
        if assign[e] > 0:
            parent[find(i)] = find(j)
    groups: dict[int, set[int]] = {}
    for v in range(graph.positions.shape[0]):
        groups.setdefault(find(v), set()).add(v)
    return list(groups.values())


def _violated_cuts(
    graph: RoutingGraph, assign: list[int]
) -> list[tuple[tuple[int, ...], int]]:
    """Separate capacity-subset and depot-connectivity cuts breached by z."""
    found: list[tuple[tuple[int, ...], int]] = []
    seen: set[tuple[tuple[int, ...], int]] = set()
    op_ids = graph.operator_ids

    def crossing(group: set[int]) -> tuple[int, ...]:
        return tuple(
            e for e, (i, j) in enumerate(graph.edges) if (i in group) != (j in group)
        )

    if len(op_ids) <= 12:
        candidate_sets = [
            set(sub)
            for size in range(1, len(op_ids) + 1)
            for sub in itertools.combinations(op_ids, size)
        ]
    else:  # fall back to component-level operator sets on large instances
        candidate_sets = [
            comp & set(op_ids) for comp in _components(graph, assign) if comp & set(op_ids)
        ]
    for subset in candidate_sets:
        ids = crossing(subset)
        rhs = 2 * capacity_cut_rhs(len(subset), graph.capacity)
        if sum(assign[e] for e in ids) < rhs:
            cut = (ids, rhs)
            if cut not in seen:
                seen.add(cut)
                found.append(cut)

    for comp in _components(graph, assign):
        if 0 in comp or not comp & set(op_ids):
            continue
        ids = crossing(comp)
        if sum(assign[e] for e in ids) < 1:
            cut = (ids, 1)
            if cut not in seen:
                seen.add(cut)
                found.append(cut)
    return found


def solve_ilp(graph: RoutingGraph) -> IlpSolution:
    """Minimize total selected edge length subject to route-degree rules.

    Constraints: every operator has degree exactly 2, the depot exactly 1,
    and every operator subset S is crossed by at least ``2 * ceil(|S| / c)``
    selected edge ends.  Subset and connectivity cuts are added lazily:
    starting from the degree relaxation, each candidate optimum is checked
    and violated cuts are appended until the optimum is clean.
    """
    cuts: list[tuple[tuple[int, ...], int]] = []
    for _ in range(10_000):
        assign = _search(graph, cuts)
        if assign is None:
            raise Infeasible(
                "no edge selection meets the degree and capacity constraints"
            )
        new = _violated_cuts(graph, assign)
        if not new:
            z = {graph.edges[e]: int(assign[e]) for e in range(len(graph.edges))}
            objective = float(np.dot(np.asarray(assign, dtype=float), graph.weights))
            return IlpSolution(z=z, objective=objective)
        cuts.extend(new)
    raise RuntimeError("cut separation failed to converge")  # pragma: no cover


def extract_route(solution: IlpSolution, graph: RoutingGraph) -> Route:
    """Decode edge multiplicities into a depot-to-refill stop sequence.

    Walks the selected multigraph depth-first, consuming edge multiplicity,
    visiting each operator once, never exceeding payload capacity between
    refills, and finishing at a refill with every edge used.  Neighbors are
    tried in ascending vertex order so the decoded walk is deterministic.
    """
    mult: dict[tuple[int, int], int] = {
        edge: count for edge, count in solution.z.items() if count > 0
    }
    neighbors: dict[int, list[int]] = {}
    for i, j in mult:
        neighbors.setdefault(i, []).append(j)
        neighbors.setdefault(j, []).append(i)
    for v in neighbors:
        neighbors[v] = sorted(set(neighbors[v]))

    op_ids = set(graph.operator_ids)
    total_mult = sum(mult.values())

    def walk(
        v: int, used: int, visited: frozenset[int], run: int, path: tuple[int, ...]
    ) -> tuple[int, ...] | None:
        if used == total_mult:
            if graph.kinds[v] == REFILL and visited == op_ids:
                return path
            return None
        for u in neighbors.get(v, ()):
            edge = (v, u) if v < u else (u, v)
            if mult.get(edge, 0) == 0:
                continue
            if graph.kinds[u] == DEPOT:
                continue
            if graph.kinds[u] == OPERATOR:
                if u in visited or run + 1 > graph.capacity:
                    continue
                next_visited, next_run = visited | {u}, run + 1
            else:
                next_visited, next_run = visited, 0
            mult[edge] -= 1
            result = walk(u, used + 1, next_visited, next_run, path + (u,))
            mult[edge] += 1
            if result is not None:
                return result
        return None

    stops = walk(0, 0, frozenset(), 0, (0,))
    if stops is None:
        raise Disconnected(
            "selected edges admit no capacity-respecting walk; "
            "a connectivity cut is missing"
        )
    length = 0.0
    for a, b in zip(stops, stops[1:]):
        edge = (a, b) if a < b else (b, a)
        length += float(graph.weights[graph.edges.index(edge)])
    return Route(
        stops=stops,
        kinds=tuple(graph.kinds[v] for v in stops),
        positions=graph.positions[list(stops)],
        length=length,
    )


def plan_route(mission: Mission) -> Route:
    """Build the waypoint graph, solve it, and decode the optimal route."""
    graph = build_graph(mission)
    return extract_route(solve_ilp(graph), graph)


def route_to_trajectory(route: Route, mission: Mission) -> Trajectory:
    """Stitch rest-to-rest segments and dwell holds into a full trajectory.

    Each leg is flown as a straight rest-to-rest segment; every operator
    stop holds for the handover dwell and every refill stop for the refill
    dwell.  The remainder of the horizon is spent parked at the terminal
    refill.  Raises :class:`HorizonExceeded` when the stitched plan needs
    more samples than the mission horizon provides.
    """
    dt = mission.dt
    n_samples = mission.n_cells + 1
    hold_cells = {
        OPERATOR: round(mission.t_handover / dt),
        REFILL: round(mission.t_refill / dt),
    }

    rows: list[np.ndarray] = [
        np.concatenate([route.positions[0], np.zeros(3)])
    ]
    controls: list[np.ndarray] = []
    position = route.positions[0]
    for stop in range(1, len(route.stops)):
        segment = rest_to_rest_segment(position, route.positions[stop], mission.limits, dt)
        rows.extend(segment.trace.samples[1:])
        controls.extend(segment.controls)
        position = segment.trace.samples[-1, :3]
        for _ in range(hold_cells[route.kinds[stop]]):
            rows.append(rows[-1])
            controls.append(np.zeros(3))

    if len(rows) > n_samples:
        overshoot = (len(rows) - n_samples) * dt
        raise HorizonExceeded(
            f"route needs {(len(rows) - 1) * dt:.2f} s but the horizon is "
            f"{mission.t_total:.2f} s ({overshoot:.2f} s short)"
        )
    while len(rows) < n_samples:
        rows.append(rows[-1])
        controls.append(np.zeros(3))

    samples = np.array(rows)
    control_arr = (
        np.array(controls) if controls else np.zeros((0, 3))
    )
    return Trajectory(TimedTrace(0.0, dt, samples), control_arr)
