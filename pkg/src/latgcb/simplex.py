"""Primal transportation simplex on a dense cost matrix.

The basis is a spanning tree of the bipartite graph rows x columns with
``m + n - 1`` cells. Entering and leaving variables follow Bland's rule
(smallest row-major index), which rules out cycling on degenerate bases.
The solver keeps its basis between calls, so re-solving with a new cost and
the same marginals starts from a feasible tree (useful inside conditional
gradient loops).
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import DomainError, SolverError

FEAS_TOL = 1e-10
OPT_TOL = 1e-9


class TransportSimplex:
    """Exact solver for ``min <C, X>`` with ``X 1 = a``, ``X^T 1 = b``, ``X >= 0``.

    Parameters
    ----------
    a, b : array-like
        Strictly positive marginals with equal totals. Zero entries must be
        removed by the caller (see :func:`solve_transport`).
    max_iter : int, optional
        Pivot cap per call.

    Examples
    --------
    >>> s = TransportSimplex([0.8, 0.2], [0.5, 0.5])
    >>> round(s.solve(np.array([[0.0, 1.0], [1.0, 0.0]]))[0], 12)
    0.3
    """

    def __init__(self, a, b, max_iter: int = 100_000):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if np.any(self.a <= 0) or np.any(self.b <= 0):
            raise DomainError("marginals passed to the simplex must be strictly positive")
        if abs(self.a.sum() - self.b.sum()) > 1e-9:
            raise DomainError("marginal totals differ")
        self.m, self.n = self.a.size, self.b.size
        self.max_iter = max_iter
        self.pivots = 0
        self._northwest()

    def _northwest(self) -> None:
        m, n = self.m, self.n
        ra, rb = self.a.copy(), self.b.copy()
        X = np.zeros((m, n))
        basis = []
        i = j = 0
        while True:
            x = min(ra[i], rb[j])
            X[i, j] = x
            basis.append((i, j))
            ra[i] -= x
            rb[j] -= x
            if i == m - 1 and j == n - 1:
                break
            # when row and column exhaust together, advance the row only and
            # keep a degenerate zero in the next cell of the column
            if (ra[i] <= rb[j] and i < m - 1) or j == n - 1:
                i += 1
            else:
                j += 1
        self.X = X
        self.basic = np.zeros((m, n), dtype=bool)
        for c in basis:
            self.basic[c] = True
        self.adj = [set() for _ in range(m + n)]
        for i, j in basis:
            self.adj[i].add(m + j)
            self.adj[m + j].add(i)

    def _potentials(self, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = self.m
        u = np.zeros(self.m)
        v = np.zeros(self.n)
        seen = np.zeros(m + self.n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            node = queue.popleft()
            for nb in self.adj[node]:
                if seen[nb]:
                    continue
                seen[nb] = True
                if node < m:
                    v[nb - m] = C[node, nb - m] - u[node]
                else:
                    u[nb] = C[nb, node - m] - v[node - m]
                queue.append(nb)
        if not seen.all():
            raise SolverError("basis is not a spanning tree")
        return u, v

    def _tree_path(self, start: int, goal: int) -> list[int]:
        parent = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for nb in self.adj[node]:
                if nb not in parent:
                    parent[nb] = node
                    queue.append(nb)
        path = [goal]
        while path[-1] != start:
            path.append(parent[path[-1]])
        return path[::-1]

    def solve(self, C) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
        """Optimize for cost ``C``; returns ``(value, X, u, v)``."""
        C = np.asarray(C, dtype=float)
        if C.shape != (self.m, self.n):
            raise DomainError(f"cost shape {C.shape} does not match ({self.m}, {self.n})")
        m = self.m
        for _ in range(self.max_iter):
            u, v = self._potentials(C)
            red = C - u[:, None] - v[None, :]
            neg = np.flatnonzero((red < -OPT_TOL) & ~self.basic)
            if neg.size == 0:
                return float(np.sum(C * self.X)), self.X.copy(), u, v
            ei, ej = divmod(int(neg[0]), self.n)
            # path row ei -> column ej; edges alternate -, +, -, ... ending with -
            path = self._tree_path(ei, m + ej)
            cells = []
            for k in range(len(path) - 1):
                x, y = path[k], path[k + 1]
                cells.append((x, y - m) if x < m else (y, x - m))
            minus = cells[0::2]
            plus = cells[1::2]
            theta = min(self.X[c] for c in minus)
            ties = [c for c in minus if self.X[c] <= theta + FEAS_TOL]
            leave = min(ties, key=lambda c: c[0] * self.n + c[1])
            for c in minus:
                self.X[c] -= theta
            for c in plus:
                self.X[c] += theta
            self.X[ei, ej] = theta
            self.X[leave] = 0.0
            self.basic[ei, ej] = True
            self.basic[leave] = False
            li, lj = leave
            self.adj[li].discard(m + lj)
            self.adj[m + lj].discard(li)
            self.adj[ei].add(m + ej)
            self.adj[m + ej].add(ei)
            self.pivots += 1
        raise SolverError(f"transportation simplex hit the pivot cap ({self.max_iter})")


def complete_duals(C: np.ndarray, rows: np.ndarray, cols: np.ndarray, u_s, v_s):
    """Extend duals from a support-restricted problem to the full index set.

    Missing rows get ``u_i = min_j (C_ij - v_j)`` over supported columns and
    missing columns ``v_j = min_i (C_ij - u_i)`` over all rows, which keeps
    ``u_i + v_j <= C_ij`` everywhere.
    """
    u = np.zeros(C.shape[0])
    v = np.zeros(C.shape[1])
    u[rows] = u_s
    v[cols] = v_s
    off_r = np.setdiff1d(np.arange(C.shape[0]), rows)
    off_c = np.setdiff1d(np.arange(C.shape[1]), cols)
    if off_r.size:
        u[off_r] = np.min(C[np.ix_(off_r, cols)] - v_s[None, :], axis=1)
    if off_c.size:
        v[off_c] = np.min(C[:, off_c] - u[:, None], axis=0)
    return u, v
