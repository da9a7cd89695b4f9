"""Cohomogeneity-one ALE metrics, curvature, and asymptotic diagnostics.

Metrics are stored through their sqrt-coefficients w = (f, a, b, c) so that
g = f^2 du^2 + a^2 s1^2 + b^2 s2^2 + c^2 s3^2 in the geodesic coordinate u of
the background construction.  a is odd across the bolt with a'(0) = 2 for the
smooth Z2 quotient; f, b, c are even.  The exposed `comps` are the squared
coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import hyp2f1

from . import grid as gridmod
from .errors import ContractViolation, DomainError
from .frame import Frame, diag_part, diag_to_full
from .rates import fit_rate

# volume of the unit S^3 before quotient
S3_VOLUME = 2.0 * np.pi ** 2

W_PARITIES = ("even", "odd", "even", "even")


@dataclass
class CohomMetric:
    """Diagonal Bianchi IX metric sampled on a radial grid."""

    grid: gridmod.RadialGrid
    w: np.ndarray                 # (4, n+1) sqrt-coefficients (f, a, b, c)
    r_of_u: np.ndarray            # asymptotic radial chart at the nodes
    group_order: int = 2
    eps: float | None = None
    label: str = ""
    w_parities: tuple = W_PARITIES   # bolt parity of each sqrt-coefficient
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        interior = self.w[:, 1:]
        if np.any(interior <= 0):
            raise DomainError(f"metric '{self.label}': non-positive coefficient")

    @property
    def comps(self):
        """Squared coefficients (du^2, s1^2, s2^2, s3^2 coefficients)."""
        return self.w ** 2

    def channels(self):
        """(w, w', w'') on all nodes, derivatives by parity-aware stencils."""
        if "channels" not in self._cache:
            wp = np.empty_like(self.w)
            wpp = np.empty_like(self.w)
            for i, par in enumerate(self.w_parities):
                wp[i] = gridmod.derivative(self.w[i], 1, self.grid, parity=par)
                wpp[i] = gridmod.derivative(self.w[i], 2, self.grid, parity=par)
            self._cache["channels"] = (self.w, wp, wpp)
        return self._cache["channels"]

    def frame(self):
        """Frame calculus on the interior nodes u[1:]."""
        if "frame" not in self._cache:
            w, wp, wpp = self.channels()
            self._cache["frame"] = Frame(w[:, 1:], wp[:, 1:], wpp[:, 1:])
        return self._cache["frame"]

    @property
    def angular_volume(self):
        return S3_VOLUME / self.group_order

    def volume_weight(self):
        """Quadrature weight of the volume element: J(u) * Vol(S^3/Gamma)."""
        f, a, b, c = self.w
        return self.angular_volume * f * np.abs(a) * b * c

    def replace_w(self, w_new, label=None):
        return CohomMetric(
            grid=self.grid,
            w=np.asarray(w_new, dtype=float),
            r_of_u=self.r_of_u,
            group_order=self.group_order,
            eps=self.eps,
            label=self.label if label is None else label,
            w_parities=self.w_parities,
        )


@dataclass
class InvariantTensor:
    """Diagonal symmetric 2-tensor, components in the orthonormal frame of
    a declared reference metric.  All components are even across the bolt."""

    reference: CohomMetric
    comps: np.ndarray             # (4, n+1)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.comps = np.asarray(self.comps, dtype=float)

    def channels(self):
        if "channels" not in self._cache:
            g = self.reference.grid
            kp = np.empty_like(self.comps)
            kpp = np.empty_like(self.comps)
            for i in range(4):
                kp[i] = gridmod.derivative(self.comps[i], 1, g, parity="even")
                kpp[i] = gridmod.derivative(self.comps[i], 2, g, parity="even")
            self._cache["channels"] = (self.comps, kp, kpp)
        return self._cache["channels"]

    def interior_full(self):
        """(k, kp, kpp) as full (4,4,M) frame tensors on interior nodes."""
        k, kp, kpp = self.channels()
        return (diag_to_full(k[:, 1:]), diag_to_full(kp[:, 1:]),
                diag_to_full(kpp[:, 1:]))

    def __add__(self, other):
        _check_same_reference(self, other)
        return InvariantTensor(self.reference, self.comps + other.comps)

    def __sub__(self, other):
        _check_same_reference(self, other)
        return InvariantTensor(self.reference, self.comps - other.comps)

    def __mul__(self, scalar):
        return InvariantTensor(self.reference, self.comps * float(scalar))

    __rmul__ = __mul__


def _check_same_reference(t1, t2):
    if t1.reference is not t2.reference and not np.array_equal(
            t1.reference.w, t2.reference.w):
        raise ContractViolation("invariant tensors have different reference metrics")


def check_reference(metric, tensor):
    if tensor.reference is metric:
        return
    if not np.array_equal(tensor.reference.w, metric.w):
        raise ContractViolation("tensor reference does not match the metric")


def bolt_fill(grid, interior, parity="even"):
    """Value at u = 0 from the first interior nodes (even fit, or 0 if odd)."""
    if parity == "odd":
        return 0.0
    u = grid.nodes[1:4]
    V = np.vander(u ** 2 / u[-1] ** 2, 3, increasing=True)
    coef = np.linalg.solve(V, np.asarray(interior[:3], dtype=float))
    return float(coef[0])


def with_bolt_fill(grid, interior_values, parity="even"):
    """Prepend the bolt value to an interior (nodes 1..N) array."""
    out = np.empty(len(interior_values) + 1)
    out[0] = bolt_fill(grid, interior_values, parity)
    out[1:] = interior_values
    return out


# -- constructors -----------------------------------------------------------

def _eh_u_of_r(r, eps):
    x = (np.asarray(r, dtype=float) / eps) ** 2
    return 0.5 * eps * x * hyp2f1(0.25, 0.5, 1.5, -x ** 2)


def _eh_du_dr(r, eps):
    return r / (r ** 4 + eps ** 4) ** 0.25


def eh_r_of_u(u, eps):
    """Invert the geodesic-distance integral of the Eguchi-Hanson family."""
    u = np.asarray(u, dtype=float)
    r = np.where(u < eps, np.sqrt(2.0 * eps * np.maximum(u, 0.0)), u)
    r = np.maximum(r, 1e-300)
    for _ in range(100):
        rn = r - (_eh_u_of_r(r, eps) - u) / _eh_du_dr(r, eps)
        rn = np.where(rn <= 0, 0.5 * r, rn)
        if np.max(np.abs(rn - r) / np.maximum(rn, 1e-30)) < 1e-15:
            r = rn
            break
        r = rn
    r[u == 0] = 0.0
    return r


def eguchi_hanson(eps, grid):
    """Eguchi-Hanson metric with family parameter eps, sampled in geodesic u."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    if grid.r_max < 20 * eps:
        raise DomainError("grid too small: need r_max >= 20 * eps")
    u = grid.nodes
    r = eh_r_of_u(u, eps)
    p4 = (r ** 4 + eps ** 4) ** 0.25
    w = np.array([np.ones_like(u), r ** 2 / p4, p4, p4])
    w[1, 0] = 0.0
    m = CohomMetric(grid=grid, w=w, r_of_u=r, group_order=2, eps=float(eps),
                    label=f"eh[{eps:g}]")
    return m


def flat_metric(grid):
    """Flat cone du^2 + u^2 (s1^2 + s2^2 + s3^2) on R^4 / Z2."""
    u = grid.nodes
    one = np.ones_like(u)
    # At the cone tip all three sphere coefficients vanish and are odd in u,
    # unlike a bolt where only a is.
    return CohomMetric(grid=grid, w=np.array([one, u.copy(), u.copy(), u.copy()]),
                       r_of_u=u.copy(), group_order=2, eps=None, label="flat",
                       w_parities=("even", "odd", "odd", "odd"))


# -- curvature ---------------------------------------------------------------

def ricci_tensor(metric):
    """Ricci tensor of the metric, diagonal components in its own frame."""
    fr = metric.frame()
    ric = fr.ricci_diag
    comps = np.empty((4, len(metric.grid.nodes)))
    for i in range(4):
        comps[i] = with_bolt_fill(metric.grid, ric[i], "even")
    return InvariantTensor(reference=metric, comps=comps)


def scalar_curvature(metric):
    """Scalar curvature samples on the grid nodes."""
    fr = metric.frame()
    return with_bolt_fill(metric.grid, fr.scal, "even")


def riemann_action(metric, k):
    """Rm(k)_{ij} = R_{imnj} k^{mn} in the metric's frame (diagonal ansatz)."""
    check_reference(metric, k)
    fr = metric.frame()
    out = fr.rm_action(diag_to_full(k.comps[:, 1:]))
    d = diag_part(out, check="riemann_action")
    comps = np.empty_like(k.comps)
    for i in range(4):
        comps[i] = with_bolt_fill(metric.grid, d[i], "even")
    return InvariantTensor(reference=metric, comps=comps)


# -- asymptotics --------------------------------------------------------------

def _flat_deviation(metric):
    """A = g_rr - 1 and B_i = q_i / r^2 - 1 in the metric's radial chart."""
    u = metric.grid.nodes
    r = metric.r_of_u
    drdu = gridmod.derivative(r, 1, metric.grid, parity="odd")
    q = metric.comps
    with np.errstate(divide="ignore", invalid="ignore"):
        A = q[0] / drdu ** 2 - 1.0
        B = np.array([q[i] / r ** 2 - 1.0 for i in (1, 2, 3)])
    return A, B, r, drdu


def ale_order_fit(metric, window):
    """Least-squares decay order tau of |g - g_flat| ~ r^{-tau} on the window."""
    r_lo, r_hi = window
    A, B, r, _ = _flat_deviation(metric)
    dev = np.sqrt(A ** 2 + np.sum(B ** 2, axis=0))
    sel = (r >= r_lo) & (r <= r_hi)
    if not np.any(sel):
        raise DomainError("fit window outside the grid")
    samples = list(zip(r[sel], dev[sel]))
    return fit_rate(samples, allow_log=False)


def adm_mass(metric, radius):
    """Mass-aspect surface integral at the given chart radius.

    Integrand (3A/r - sum_i B_i/r - d/dr sum_i B_i) times the area of
    S^3(r)/Gamma; no additional normalization constant is applied.
    """
    A, B, r, drdu = _flat_deviation(metric)
    if not r[1] <= radius <= r[-1]:
        raise DomainError("radius outside the grid chart")
    sB = np.sum(B, axis=0)
    dsB_du = gridmod.derivative(sB, 1, metric.grid, parity="even")
    with np.errstate(divide="ignore", invalid="ignore"):
        dsB_dr = dsB_du / drdu
        integrand = 3.0 * A / r - sB / r - dsB_dr
    area = metric.angular_volume * r ** 3
    mass = area * integrand
    return float(np.interp(radius, r[1:], mass[1:]))
