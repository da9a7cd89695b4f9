"""Sparse assembly of invariant-ansatz operators and implicit time stepping.

Operators on diagonal invariant tensors act pointwise on the value/slope/
curvature channels (k, k', k'') of the four frame components.  Probing such an
operator with constant unit inputs per channel and component recovers its
per-node coefficient blocks exactly, from which a global sparse matrix is
assembled against the grid's parity-folded derivative matrices.

State vectors stack the four components: x = [k_0; k_1; k_2; k_3], each of
length n+1.  Boundary rows: at the bolt an even-extrapolation regularity row,
at the outer end a Dirichlet row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from .errors import NumericError


@dataclass
class DtPolicy:
    """Step-size schedule: geometric growth capped absolutely and relative to t."""

    dt0: float = 0.01
    growth: float = 1.15
    dt_max: float = np.inf
    dt_max_rel: float = 0.1

    def steps(self, t_start, t_end):
        """Yield (t_new, dt) pairs covering (t_start, t_end]."""
        t = t_start
        dt = self.dt0
        while t < t_end - 1e-13:
            dt = min(dt, self.dt_max, max(self.dt_max_rel * t, self.dt0))
            dt = min(dt, t_end - t)
            t = t + dt
            yield t, dt
            dt *= self.growth


def bolt_weights(grid):
    """Weights of the even-extrapolation regularity row at u = 0."""
    u = grid.nodes[1:4]
    V = np.vander(u ** 2 / u[-1] ** 2, 3, increasing=True)
    rhs = np.zeros(3)
    rhs[0] = 1.0
    return np.linalg.solve(V.T, rhs)


def probe_channel_blocks(op, m):
    """Per-node coefficient blocks (B0, B1, B2) of a channel-linear operator.

    op(k, kp, kpp) maps (4, m) diagonal channels to (4, m) output on the
    interior nodes; linearity in the channels is assumed.
    """
    blocks = []
    zero = np.zeros((4, m))
    one = np.ones(m)
    for c in range(3):
        B = np.empty((4, 4, m))
        for j in range(4):
            args = [zero, zero.copy(), zero.copy()]
            probe = np.zeros((4, m))
            probe[j] = one
            args[c] = probe
            B[:, j, :] = op(args[0], args[1], args[2])
        blocks.append(B)
    return blocks


def assemble_diag_operator(op, grid):
    """Global sparse matrix of a channel-linear diagonal-tensor operator.

    Rows are filled for interior nodes 1..n-1; the bolt and outer rows are
    zero and must be replaced by boundary rows before solving.
    """
    n1 = len(grid.nodes)
    m = n1 - 1                       # interior nodes 1..n
    blocks = probe_channel_blocks(op, m)
    mats = [None,
            grid.diff_matrix(1, "even"),
            grid.diff_matrix(2, "even")]
    total = None
    for c, B in enumerate(blocks):
        rows, cols, vals = [], [], []
        for ci in range(4):
            for cj in range(4):
                data = B[ci, cj, :-1]          # interior rows: nodes 1..n-1
                nodes = np.arange(1, n1 - 1)
                sel = data != 0.0
                if not np.any(sel):
                    continue
                rows.append(ci * n1 + nodes[sel])
                cols.append(cj * n1 + nodes[sel])
                vals.append(data[sel])
        if not rows:
            continue
        Bm = sps.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(4 * n1, 4 * n1))
        if mats[c] is None:
            term = Bm
        else:
            term = Bm @ sps.kron(sps.identity(4, format="csr"), mats[c], format="csr")
        total = term if total is None else total + term
    if total is None:
        total = sps.csr_matrix((4 * n1, 4 * n1))
    return total


class ImplicitStepper:
    """Theta-method stepper for d/dt x + A x = S with ansatz boundary rows.

    theta = 1 is backward Euler (default, used inside the nonlinear flow);
    theta = 0.5 is Crank-Nicolson, used for the linear heat flows.
    """

    def __init__(self, grid, amat, dirichlet=None, theta=1.0):
        self.grid = grid
        self.amat = amat
        self.n1 = len(grid.nodes)
        self.bolt_w = bolt_weights(grid)
        self.dirichlet = np.zeros(4) if dirichlet is None else np.asarray(dirichlet)
        self.theta = float(theta)
        self._lu = {}

    def _system(self, dt):
        key = round(float(dt), 14)
        if key in self._lu:
            return self._lu[key]
        n1 = self.n1
        M = (sps.identity(4 * n1, format="lil") + self.theta * dt * self.amat).tolil()
        for c in range(4):
            r0 = c * n1
            M.rows[r0] = [r0, r0 + 1, r0 + 2, r0 + 3]
            M.data[r0] = [1.0, -self.bolt_w[0], -self.bolt_w[1], -self.bolt_w[2]]
            rn = c * n1 + n1 - 1
            M.rows[rn] = [rn]
            M.data[rn] = [1.0]
        lu = splu(M.tocsc())
        self._lu[key] = lu
        return lu

    def step(self, x, dt, source=None):
        lu = self._system(dt)
        rhs = x.copy()
        if self.theta != 1.0:
            rhs -= (1.0 - self.theta) * dt * (self.amat @ x)
        if source is not None:
            rhs += dt * source
        for c in range(4):
            rhs[c * self.n1] = 0.0
            rhs[c * self.n1 + self.n1 - 1] = self.dirichlet[c]
        out = lu.solve(rhs)
        if not np.all(np.isfinite(out)):
            raise NumericError("implicit solve produced non-finite values")
        return out


def stack(comps):
    return np.concatenate([np.asarray(c, dtype=float) for c in comps])


def unstack(x, n1):
    return x.reshape(4, n1)
