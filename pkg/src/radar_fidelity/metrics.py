"""Point-cloud discrepancy metrics.

Two conventional metrics over (x, y, doppler) feature triples:

* ``d_pp`` - symmetrized mean nearest-neighbor distance, computed by an
  exhaustive O(M*N) scan, and
* ``emd`` - earth mover's distance between the two clouds taken as uniform
  discrete distributions (weights 1/M and 1/N), solved exactly.

The EMD solver is a transportation simplex: north-west-corner starting
basis, dual (u, v) pricing over the basis spanning tree, Bland's rule on
both the entering and the leaving variable to rule out degenerate cycling,
and a pivot cap that turns runaway cycling into a hard error instead of a
silent wrong answer. Clouds here are at most a few hundred points, so the
dense exact solver beats any approximate scheme and stays oracle-checkable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PointCloud

# Pivot budget per solve is _PIVOT_CAP_FACTOR * M * N; exceeding it signals
# degenerate cycling.
_PIVOT_CAP_FACTOR = 10


class EmptyCloudError(ValueError):
    """A metric was asked to compare against an empty cloud."""


class SolverFailure(RuntimeError):
    """The transportation simplex did not reach optimality within its pivot cap."""


@dataclass(frozen=True)
class TransportPlan:
    """Optimal flow realizing the EMD between two clouds.

    ``flow[m, n]`` is the mass moved from source point m (weight 1/M) to
    sink point n (weight 1/N); ``ground[m, n]`` the Euclidean feature
    distance; ``cost`` their inner product.
    """

    flow: np.ndarray
    ground: np.ndarray
    cost: float


def _features(cloud: PointCloud, side: str) -> np.ndarray:
    if len(cloud) == 0:
        raise EmptyCloudError(f"{side} cloud is empty")
    return cloud.as_array()


def _ground_distances(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    diff = xs[:, None, :] - ys[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def d_pp_directed(a: PointCloud, b: PointCloud) -> float:
    """Mean over a's points of the distance to the nearest point of b."""
    dist = _ground_distances(_features(a, "left"), _features(b, "right"))
    return float(np.mean(np.min(dist, axis=1)))


def d_pp(a: PointCloud, b: PointCloud) -> float:
    """Symmetrized nearest-neighbor distance: worst case of both directions."""
    return max(d_pp_directed(a, b), d_pp_directed(b, a))


def _northwest_corner(supply: np.ndarray, demand: np.ndarray):
    """Initial basic feasible solution; returns (flow, basis) with exactly
    M + N - 1 basic cells (degenerate zero-flow cells included)."""
    m, n = len(supply), len(demand)
    flow = np.zeros((m, n))
    basis: list[tuple[int, int]] = []
    rem_s = supply.copy()
    rem_d = demand.copy()
    i = j = 0
    while True:
        q = min(rem_s[i], rem_d[j])
        flow[i, j] = q
        basis.append((i, j))
        rem_s[i] -= q
        rem_d[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if rem_s[i] <= 0.0 and i < m - 1:
            i += 1
        elif j < n - 1:
            j += 1
        else:
            i += 1
    return flow, basis


def _duals(ground: np.ndarray, row_adj: list[set], col_adj: list[set]):
    """Solve u_i + v_j = d_ij over the basis spanning tree, u_0 = 0."""
    m, n = ground.shape
    u = np.empty(m)
    v = np.empty(n)
    seen_u = np.zeros(m, dtype=bool)
    seen_v = np.zeros(n, dtype=bool)
    u[0] = 0.0
    seen_u[0] = True
    stack = [(True, 0)]
    while stack:
        is_row, k = stack.pop()
        if is_row:
            for j in row_adj[k]:
                if not seen_v[j]:
                    v[j] = ground[k, j] - u[k]
                    seen_v[j] = True
                    stack.append((False, j))
        else:
            for i in col_adj[k]:
                if not seen_u[i]:
                    u[i] = ground[i, k] - v[k]
                    seen_u[i] = True
                    stack.append((True, i))
    return u, v


def _basis_cycle(row_adj: list[set], col_adj: list[set], enter: tuple[int, int]):
    """Unique cycle created by adding ``enter`` to the basis tree, as the
    alternating cell sequence starting at ``enter``."""
    start_row, target_col = enter
    # DFS from the entering cell's row node to its column node
    parent: dict[tuple[bool, int], tuple[bool, int]] = {}
    start = (True, start_row)
    goal = (False, target_col)
    stack = [start]
    seen = {start}
    while stack:
        node = stack.pop()
        if node == goal:
            break
        is_row, k = node
        for other in row_adj[k] if is_row else col_adj[k]:
            nxt = (not is_row, other)
            if nxt not in seen:
                seen.add(nxt)
                parent[nxt] = node
                stack.append(nxt)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    path.reverse()  # row, col, row, ..., col
    cycle = [enter]
    for a, b in zip(path, path[1:]):
        i = a[1] if a[0] else b[1]
        j = a[1] if b[0] else b[1]
        cycle.append((i, j))
    return cycle


def _transportation_simplex(ground: np.ndarray, supply: np.ndarray, demand: np.ndarray) -> np.ndarray:
    """Exact solver. Entering variable: most negative reduced cost while the
    objective is moving; after a full plateau of degenerate pivots it drops
    to Bland's lowest-index rule, whose termination guarantee breaks any
    cycling. The pivot cap converts a runaway into SolverFailure."""
    m, n = ground.shape
    flow, basis = _northwest_corner(supply, demand)
    in_basis = np.zeros((m, n), dtype=bool)
    row_adj: list[set] = [set() for _ in range(m)]
    col_adj: list[set] = [set() for _ in range(n)]
    for i, j in basis:
        in_basis[i, j] = True
        row_adj[i].add(j)
        col_adj[j].add(i)

    tol = 1e-11 * (1.0 + float(ground.max()))
    max_pivots = _PIVOT_CAP_FACTOR * m * n
    pivots = 0
    stalled = 0  # consecutive degenerate pivots
    while True:
        u, v = _duals(ground, row_adj, col_adj)
        reduced = ground - u[:, None] - v[None, :]
        reduced[in_basis] = 0.0
        if stalled <= m + n:
            k = int(np.argmin(reduced))
            enter = (k // n, k % n)
            if reduced[enter] >= -tol:
                return flow
        else:
            candidates = np.argwhere(reduced < -tol)
            if len(candidates) == 0:
                return flow
            enter = (int(candidates[0][0]), int(candidates[0][1]))  # lowest index: Bland
        pivots += 1
        if pivots > max_pivots:
            raise SolverFailure(f"no optimum within {max_pivots} pivots (degenerate cycling)")

        cycle = _basis_cycle(row_adj, col_adj, enter)
        givers = cycle[1::2]
        theta = min(flow[c] for c in givers)
        leave = min(c for c in givers if flow[c] == theta)  # lowest index on ties: Bland
        if theta > 0.0:
            stalled = 0
            for idx, cell in enumerate(cycle):
                if idx % 2 == 0:
                    flow[cell] += theta
                else:
                    flow[cell] -= theta
        else:
            stalled += 1
        flow[leave] = 0.0
        in_basis[leave] = False
        in_basis[enter] = True
        row_adj[leave[0]].discard(leave[1])
        col_adj[leave[1]].discard(leave[0])
        row_adj[enter[0]].add(enter[1])
        col_adj[enter[1]].add(enter[0])


def emd(a: PointCloud, b: PointCloud) -> tuple[float, TransportPlan]:
    """Earth mover's distance and the optimal transport plan realizing it.

    Point weights are uniform (1/M source-side, 1/N sink-side) so the total
    flow is 1 and the normalized cost equals the plan cost.
    """
    xs = _features(a, "left")
    ys = _features(b, "right")
    m, n = len(xs), len(ys)
    ground = _ground_distances(xs, ys)
    supply = np.full(m, 1.0 / m)
    demand = np.full(n, 1.0 / n)

    if m == 1:
        flow = demand[None, :].copy()  # single row: only one feasible solution
    elif n == 1:
        flow = supply[:, None].copy()
    else:
        flow = _transportation_simplex(ground, supply, demand)

    cost = float(np.sum(flow * ground))
    total = float(np.sum(flow))
    return cost / total, TransportPlan(flow=flow, ground=ground, cost=cost)
