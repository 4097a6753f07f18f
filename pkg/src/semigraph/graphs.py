"""Graph states over a fixed vertex set and the matrix functionals attached
to them: edge counts, degrees, connected components, triangle detection,
permanent, determinant, and the permanent polynomial.

Vertices are indexed 0..m-1 throughout the library; the text edge-list
format uses 1-based indices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "GraphMode",
    "GraphState",
    "GraphModeError",
    "ResourceCapError",
    "PermanentPolynomial",
    "MonomialDelta",
    "state_space_size",
    "edge_count",
    "degree_sequence",
    "connected_components",
    "contains_triangle",
    "permanent",
    "determinant",
    "permanent_polynomial",
    "pperm_transition_delta",
    "graph_to_json",
    "graph_from_json",
    "graph_to_edge_list",
    "graph_from_edge_list",
]

PERMANENT_MAX_M = 20
PPERM_MAX_M = 10


class GraphModeError(ValueError):
    """Operation applied to a graph mode it does not support."""


class ResourceCapError(ValueError):
    """Exact combinatorial computation refused above its size cap."""


class GraphMode(str, Enum):
    UNDIRECTED_SIMPLE = "undirected-simple"
    UNDIRECTED_LOOPS = "undirected-loops"
    DIRECTED = "directed"
    WEIGHTED_DIRECTED = "weighted-directed"


_UNWEIGHTED = (
    GraphMode.UNDIRECTED_SIMPLE,
    GraphMode.UNDIRECTED_LOOPS,
    GraphMode.DIRECTED,
)
_UNDIRECTED = (GraphMode.UNDIRECTED_SIMPLE, GraphMode.UNDIRECTED_LOOPS)


@dataclass(frozen=True, eq=False)
class GraphState:
    """Immutable adjacency-matrix state.

    Mode invariants are enforced at construction: symmetry for undirected
    modes, zero diagonal for simple graphs, {0,1} entries for unweighted
    modes, nonnegative entries for weighted ones.
    """

    mode: GraphMode
    a: np.ndarray

    def __post_init__(self) -> None:
        mode = GraphMode(self.mode)
        a = np.array(self.a, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("graph needs at least one vertex")
        if mode is GraphMode.WEIGHTED_DIRECTED:
            if (a < 0).any() or np.isnan(a).any():
                raise ValueError("weights must be nonnegative reals")
        else:
            if not np.isin(a, (0.0, 1.0)).all():
                raise ValueError(f"entries must be 0 or 1 in mode {mode.value}")
            a = a.astype(np.int64)
        if mode in _UNDIRECTED and not np.array_equal(a, a.T):
            raise ValueError(f"adjacency matrix must be symmetric in mode {mode.value}")
        if mode is GraphMode.UNDIRECTED_SIMPLE and np.diagonal(a).any():
            raise ValueError("simple undirected graphs cannot have loops")
        a.setflags(write=False)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "a", a)

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @classmethod
    def empty(cls, m: int, mode: GraphMode = GraphMode.UNDIRECTED_SIMPLE) -> "GraphState":
        return cls(mode, np.zeros((m, m)))

    @classmethod
    def from_edges(
        cls,
        m: int,
        edges,
        mode: GraphMode = GraphMode.UNDIRECTED_SIMPLE,
    ) -> "GraphState":
        """Build a graph from 0-based (i, j) pairs, or (i, j, w) triples in
        the weighted mode."""
        a = np.zeros((m, m))
        for edge in edges:
            i, j = edge[0], edge[1]
            w = edge[2] if len(edge) > 2 else 1.0
            a[i, j] = w
            if mode in _UNDIRECTED:
                a[j, i] = w
        return cls(mode, a)

    @classmethod
    def complete(cls, m: int) -> "GraphState":
        a = np.ones((m, m)) - np.eye(m)
        return cls(GraphMode.UNDIRECTED_SIMPLE, a)

    def with_pair_toggled(self, i: int, j: int) -> "GraphState":
        """New state with undirected pair {i, j} flipped (i != j)."""
        if self.mode not in _UNDIRECTED:
            raise GraphModeError("pair toggling is an undirected operation")
        if i == j:
            raise ValueError("cannot toggle a loop with with_pair_toggled")
        a = np.array(self.a)
        a[i, j] = 1 - a[i, j]
        a[j, i] = a[i, j]
        return GraphState(self.mode, a)

    def with_edge_added(self, i: int, j: int) -> "GraphState":
        """New state with edge {i, j} present (no-op if it already is)."""
        a = np.array(self.a)
        a[i, j] = 1
        if self.mode in _UNDIRECTED:
            a[j, i] = 1
        return GraphState(self.mode, a)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GraphState):
            return NotImplemented
        return self.mode is other.mode and np.array_equal(self.a, other.a)

    def __hash__(self) -> int:
        return hash((self.mode, self.a.shape[0], self.a.tobytes()))

    def __repr__(self) -> str:
        return f"GraphState(mode={self.mode.value!r}, m={self.m})"


def _require_unweighted(g: GraphState, op: str) -> None:
    if g.mode not in _UNWEIGHTED:
        raise GraphModeError(f"{op} requires an unweighted graph, got {g.mode.value}")


def state_space_size(m: int, mode: GraphMode) -> int:
    """Number of distinct graphs on m labelled vertices in the given mode."""
    if m < 1:
        raise ValueError("m must be positive")
    mode = GraphMode(mode)
    if mode is GraphMode.UNDIRECTED_LOOPS:
        return 2 ** (m * (m + 1) // 2)
    if mode is GraphMode.UNDIRECTED_SIMPLE:
        return 2 ** (m * (m - 1) // 2)
    if mode is GraphMode.DIRECTED:
        return 2 ** (m * m)
    raise GraphModeError("weighted graphs do not have a finite state space")


def edge_count(g: GraphState) -> int:
    """Edges in the graph: unordered pairs count once, loops count once,
    directed 1-entries count individually."""
    _require_unweighted(g, "edge_count")
    if g.mode is GraphMode.DIRECTED:
        return int(g.a.sum())
    diag = int(np.trace(g.a))
    return (int(g.a.sum()) - diag) // 2 + diag


def degree_sequence(g: GraphState) -> np.ndarray:
    """Row sums of the adjacency matrix: vertex degrees for undirected
    graphs (a loop contributes 1), out-degrees for directed graphs."""
    _require_unweighted(g, "degree_sequence")
    return g.a.sum(axis=1)


def connected_components(g: GraphState) -> tuple[frozenset[int], ...]:
    """Partition of the vertex set into (strongly) connected components.

    Undirected modes use ordinary connectivity; directed modes use strong
    connectivity.  Weighted graphs are binarized on entry > 0.  Components
    are returned sorted by their smallest vertex.
    """
    if g.mode in _UNDIRECTED:
        comps = _undirected_components(g.a)
    else:
        comps = _strong_components(g.a > 0 if g.mode is GraphMode.WEIGHTED_DIRECTED else g.a)
    return tuple(sorted((frozenset(c) for c in comps), key=min))


def _undirected_components(a: np.ndarray) -> list[set[int]]:
    m = a.shape[0]
    seen = [False] * m
    out = []
    for s in range(m):
        if seen[s]:
            continue
        comp = {s}
        seen[s] = True
        stack = [s]
        while stack:
            v = stack.pop()
            for w in np.nonzero(a[v])[0]:
                w = int(w)
                if not seen[w]:
                    seen[w] = True
                    comp.add(w)
                    stack.append(w)
        out.append(comp)
    return out


def _strong_components(a: np.ndarray) -> list[set[int]]:
    # Kosaraju with explicit stacks (no recursion).
    m = a.shape[0]
    order: list[int] = []
    seen = [False] * m
    for s in range(m):
        if seen[s]:
            continue
        stack = [(s, iter(np.nonzero(a[s])[0]))]
        seen[s] = True
        while stack:
            v, it = stack[-1]
            advanced = False
            for w in it:
                w = int(w)
                if not seen[w]:
                    seen[w] = True
                    stack.append((w, iter(np.nonzero(a[w])[0])))
                    advanced = True
                    break
            if not advanced:
                order.append(v)
                stack.pop()
    at = a.T
    assigned = [False] * m
    comps = []
    for s in reversed(order):
        if assigned[s]:
            continue
        comp = {s}
        assigned[s] = True
        stack = [s]
        while stack:
            v = stack.pop()
            for w in np.nonzero(at[v])[0]:
                w = int(w)
                if not assigned[w]:
                    assigned[w] = True
                    comp.add(w)
                    stack.append(w)
        comps.append(comp)
    return comps


def contains_triangle(g: GraphState) -> bool:
    """Whether some 3-clique exists (equivalently trace(A^3) > 0)."""
    if g.mode is not GraphMode.UNDIRECTED_SIMPLE:
        raise GraphModeError("triangle detection is defined for simple undirected graphs")
    a = g.a
    neigh = [set(np.nonzero(row)[0].tolist()) for row in a]
    for i in range(g.m):
        for j in np.nonzero(a[i])[0]:
            j = int(j)
            if j <= i:
                continue
            if neigh[i] & neigh[j]:
                return True
    return False


def permanent(g: GraphState) -> int:
    """Exact permanent of the adjacency matrix by Ryser's inclusion-exclusion
    formula in Gray-code order (O(2^m * m); refused above m = 20).

    Arbitrary-precision integers are used throughout: intermediate row-sum
    products reach m**m, far past both int64 and exact-float range.
    """
    _require_unweighted(g, "permanent")
    if g.m > PERMANENT_MAX_M:
        raise ResourceCapError(f"permanent capped at m <= {PERMANENT_MAX_M}, got {g.m}")
    return _ryser(g.a)


def _ryser(a: np.ndarray) -> int:
    m = a.shape[0]
    cols = [[int(a[i, j]) for i in range(m)] for j in range(m)]
    row_sums = [0] * m
    zero_count = m
    total = 0
    size = 0
    for k in range(1, 1 << m):
        j = (k & -k).bit_length() - 1
        col = cols[j]
        gained = ((k ^ (k >> 1)) >> j) & 1
        delta = 1 if gained else -1
        size += delta
        for i in range(m):
            old = row_sums[i]
            new = old + delta * col[i]
            row_sums[i] = new
            if old == 0 and new != 0:
                zero_count -= 1
            elif old != 0 and new == 0:
                zero_count += 1
        if zero_count:
            continue
        prod = 1
        for r in row_sums:
            prod *= r
        total += prod if (m - size) % 2 == 0 else -prod
    return total


def determinant(g: GraphState) -> int:
    """Exact integer determinant (fraction-free Bareiss elimination)."""
    _require_unweighted(g, "determinant")
    mat = [[int(x) for x in row] for row in g.a]
    m = len(mat)
    sign = 1
    prev = 1
    for k in range(m - 1):
        if mat[k][k] == 0:
            pivot = next((i for i in range(k + 1, m) if mat[i][k] != 0), None)
            if pivot is None:
                return 0
            mat[k], mat[pivot] = mat[pivot], mat[k]
            sign = -sign
        for i in range(k + 1, m):
            for j in range(k + 1, m):
                mat[i][j] = (mat[i][j] * mat[k][k] - mat[i][k] * mat[k][j]) // prev
        prev = mat[k][k]
    return sign * mat[m - 1][m - 1]


Monomial = frozenset  # of (row, col) index pairs


@dataclass(frozen=True)
class PermanentPolynomial:
    """The permanent of the symbolic matrix (y_ij * A_ij): one monomial per
    permutation supported by the graph, every coefficient 1, every monomial
    of degree m."""

    m: int
    monomials: frozenset[Monomial]

    def terms_sorted(self) -> list[tuple[tuple[int, int], ...]]:
        return sorted(tuple(sorted(mono)) for mono in self.monomials)

    def __str__(self) -> str:
        if not self.monomials:
            return "0"
        parts = [
            "*".join(f"y[{i + 1},{j + 1}]" for i, j in term) for term in self.terms_sorted()
        ]
        return " + ".join(parts)


@dataclass(frozen=True)
class MonomialDelta:
    """Signed monomial difference pperm(after) - pperm(before)."""

    added: frozenset[Monomial]
    removed: frozenset[Monomial]


def permanent_polynomial(g: GraphState) -> PermanentPolynomial:
    """Enumerate the monomials of the permanent polynomial by backtracking
    over permutations supported by the graph (refused above m = 10, where
    the monomial count can reach m!)."""
    _require_unweighted(g, "permanent_polynomial")
    m = g.m
    if m > PPERM_MAX_M:
        raise ResourceCapError(f"permanent polynomial capped at m <= {PPERM_MAX_M}, got {m}")
    rows = [np.nonzero(g.a[i])[0].tolist() for i in range(m)]
    monomials: list[Monomial] = []
    assignment: list[int] = []
    used = [False] * m

    def backtrack(i: int) -> None:
        if i == m:
            monomials.append(frozenset(enumerate(assignment)))
            return
        for j in rows[i]:
            if not used[j]:
                used[j] = True
                assignment.append(j)
                backtrack(i + 1)
                assignment.pop()
                used[j] = False

    backtrack(0)
    return PermanentPolynomial(m=m, monomials=frozenset(monomials))


def pperm_transition_delta(g1: GraphState, g2: GraphState) -> MonomialDelta:
    """Monomials gained and lost when the chain moves from g1 to g2."""
    if g1.m != g2.m:
        raise ValueError(f"dimension mismatch: {g1.m} vs {g2.m}")
    p1 = permanent_polynomial(g1).monomials
    p2 = permanent_polynomial(g2).monomials
    return MonomialDelta(added=frozenset(p2 - p1), removed=frozenset(p1 - p2))


def graph_to_json(g: GraphState) -> str:
    """Serialize as {"mode": ..., "m": ..., "a": row-major flat list}."""
    flat = g.a.reshape(-1)
    values = [float(x) if g.mode is GraphMode.WEIGHTED_DIRECTED else int(x) for x in flat]
    return json.dumps({"mode": g.mode.value, "m": g.m, "a": values})


def graph_from_json(text: str) -> GraphState:
    obj = json.loads(text)
    mode = GraphMode(obj["mode"])
    m = int(obj["m"])
    a = np.asarray(obj["a"], dtype=float)
    if a.size != m * m:
        raise ValueError(f"expected {m * m} entries, got {a.size}")
    return GraphState(mode, a.reshape(m, m))


def graph_to_edge_list(g: GraphState) -> str:
    """Text edge list, one "i j" (or "i j w") line per edge, 1-based."""
    lines = []
    for i in range(g.m):
        for j in range(g.m):
            if g.mode in _UNDIRECTED and j < i:
                continue
            val = g.a[i, j]
            if val == 0:
                continue
            if g.mode is GraphMode.WEIGHTED_DIRECTED:
                lines.append(f"{i + 1} {j + 1} {float(val)!r}")
            else:
                lines.append(f"{i + 1} {j + 1}")
    return "\n".join(lines) + ("\n" if lines else "")


def graph_from_edge_list(text: str, m: int, mode: GraphMode) -> GraphState:
    mode = GraphMode(mode)
    edges = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"line {ln}: expected 'i j [w]', got {raw!r}")
        i, j = int(parts[0]) - 1, int(parts[1]) - 1
        if not (0 <= i < m and 0 <= j < m):
            raise ValueError(f"line {ln}: vertex out of range 1..{m}")
        if len(parts) == 3:
            if mode is not GraphMode.WEIGHTED_DIRECTED:
                raise ValueError(f"line {ln}: weight given for unweighted mode")
            edges.append((i, j, float(parts[2])))
        else:
            edges.append((i, j))
    return GraphState.from_edges(m, edges, mode)
