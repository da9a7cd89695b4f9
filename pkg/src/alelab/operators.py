"""Lichnerowicz Laplacian, de Turck field, linearizations, heat semigroup,
and the two-generator mixed evolution operator.

Sign conventions follow the nonnegative Laplacian: the heat flows solved here
are d/dt k + Delta k = source.  The de Turck field of a pair (g, h) is the
radial vector V^u with V^l = g^{ij} (Gamma(g) - Gamma(h))^l_{ij}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grid as gridmod
from .errors import ContractViolation, DomainError, NumericError
from .frame import MixedFrame, diag_part, diag_to_full
from .geometry import CohomMetric, InvariantTensor, check_reference, with_bolt_fill
from .stepping import (DtPolicy, ImplicitStepper, assemble_diag_operator,
                       stack, unstack)

RICCI_FLAT_TOL = 2e-4


@dataclass
class RadialVector:
    """Radial vector field v(u) d/du; v is odd across the bolt."""

    reference: CohomMetric
    v: np.ndarray

    def frame_comp(self):
        """Component along the unit radial frame vector, f * v."""
        return self.reference.w[0] * self.v

    def c0_norm(self):
        return float(np.max(np.abs(self.frame_comp())))

    def __mul__(self, s):
        return RadialVector(self.reference, self.v * float(s))

    __rmul__ = __mul__


@dataclass
class EvolutionSchedule:
    """Two-generator schedule: the limit-metric Lichnerowicz Laplacian up to
    switch time max(t-1, s), then the (g, h)-modified one on the last leg."""

    dt_policy: DtPolicy = field(default_factory=lambda: DtPolicy(dt0=0.02, growth=1.3, dt_max=0.1))
    generators: tuple = ("lichnerowicz_limit", "lichnerowicz_mixed")

    @staticmethod
    def switch_time(s, t):
        return max(t - 1.0, s)


def require_ricci_flat(metric, tol=RICCI_FLAT_TOL):
    from .geometry import ricci_tensor

    key = "ricci_flat_checked"
    if key in metric._cache:
        return
    res = float(np.max(np.abs(ricci_tensor(metric).comps)))
    if res > tol:
        raise ContractViolation(
            f"background '{metric.label}' is not Ricci-flat to tolerance "
            f"({res:.2e} > {tol:.0e})")
    metric._cache[key] = True


# -- pointwise operators -----------------------------------------------------

def lichnerowicz(h, k):
    """Delta_L k = nabla*nabla k - 2 Rm(k) in h's frame (nonnegative convention)."""
    check_reference(h, k)
    require_ricci_flat(h)
    out = _lichnerowicz_channels(h)(*(ch[:, 1:] for ch in k.channels()))
    comps = np.empty_like(k.comps)
    for i in range(4):
        comps[i] = with_bolt_fill(h.grid, out[i], "even")
    return InvariantTensor(reference=h, comps=comps)


def _lichnerowicz_channels(h):
    fr = h.frame()

    def op(k, kp, kpp):
        full = fr.lichnerowicz(diag_to_full(k), diag_to_full(kp), diag_to_full(kpp))
        return diag_part(full)

    return op


def _mixed_channels(g, h):
    """Channel operator of Delta_{L,g,h} in h's frame."""
    fr = h.frame()
    G, Gp = _frame_ratio(g, h)
    mf = MixedFrame(fr, G, Gp)

    def op(k, kp, kpp):
        full = mf.mixed_lichnerowicz(diag_to_full(k), diag_to_full(kp),
                                     diag_to_full(kpp))
        return diag_part(full)

    return op


def _frame_ratio(g, h):
    """G_i = (w_g / w_h)^2 and its u-derivative on the interior nodes."""
    wg, wgp, _ = g.channels()
    wh, whp, _ = h.channels()
    wg, wgp, wh, whp = (x[:, 1:] for x in (wg, wgp, wh, whp))
    G = (wg / wh) ** 2
    Gp = 2.0 * (wg / wh) * (wgp * wh - wg * whp) / wh ** 2
    return G, Gp


def _deturck_vu(qg, qgp, qh, qhp):
    """Coordinate component V^u of V(g, h) from comps channels q, q'."""
    term = qgp[0] / (2.0 * qg[0] ** 2)
    term -= np.sum(qgp[1:] / qg[1:], axis=0) / (2.0 * qg[0])
    term -= qhp[0] / (2.0 * qg[0] * qh[0])
    term += np.sum(qhp[1:] / qg[1:], axis=0) / (2.0 * qh[0])
    return term


def _comp_channels(metric):
    w, wp, _ = metric.channels()
    return w ** 2, 2.0 * w * wp


def deturck_field(g, h):
    """De Turck vector field V(g, h); vanishes iff g is in h-gauge."""
    if g.grid is not h.grid:
        raise ContractViolation("metrics live on different grids")
    qg, qgp = _comp_channels(g)
    qh, qhp = _comp_channels(h)
    v = _deturck_vu(qg[:, 1:], qgp[:, 1:], qh[:, 1:], qhp[:, 1:])
    v = np.concatenate(([0.0], v))
    return RadialVector(reference=g, v=v)


def lie_derivative(X, g):
    """L_X g for radial X, as an invariant tensor in g's frame."""
    v = np.asarray(X.v, dtype=float)
    vp = gridmod.derivative(v, 1, g.grid, parity="odd")
    q, qp = _comp_channels(g)
    coord = np.empty_like(q)
    coord[0] = v * qp[0] + 2.0 * q[0] * vp
    for i in (1, 2, 3):
        coord[i] = v * qp[i]
    comps = np.empty_like(q)
    for i in range(4):
        comps[i] = with_bolt_fill(g.grid, coord[i, 1:] / q[i, 1:], "even")
    return InvariantTensor(reference=g, comps=comps)


def _fd_step(k):
    scale = float(np.max(np.abs(k.comps)))
    if scale == 0:
        return 1.0
    return (np.finfo(float).eps) ** (1.0 / 3.0) / scale


def _perturbed(h, k, s):
    factor = 1.0 + s * k.comps
    if np.any(factor[:, 1:] <= 0):
        raise NumericError("linearization step too large for the metric")
    return h.replace_w(h.w * np.sqrt(factor), label=f"{h.label}+perturbation")


def linearized_ricci(h, k, step=None):
    """Central finite-difference Frechet derivative DRic_h(k)."""
    from .geometry import ricci_tensor

    check_reference(h, k)
    s = _fd_step(k) if step is None else step
    gp = _perturbed(h, k, s)
    gm = _perturbed(h, k, -s)
    rp = ricci_tensor(gp).comps * gp.comps
    rm = ricci_tensor(gm).comps * gm.comps
    d_coord = (rp - rm) / (2.0 * s)
    comps = np.empty_like(d_coord)
    for i in range(4):
        comps[i] = with_bolt_fill(h.grid, d_coord[i, 1:] / h.comps[i, 1:], "even")
    return InvariantTensor(reference=h, comps=comps)


def deturck_linearized(h, k, step=None):
    """Central finite-difference derivative DV(k) = d/ds V(h + s k, h)."""
    check_reference(h, k)
    s = _fd_step(k) if step is None else step
    vp = deturck_field(_perturbed(h, k, s), h).v
    vm = deturck_field(_perturbed(h, k, -s), h).v
    return RadialVector(reference=h, v=(vp - vm) / (2.0 * s))


# -- heat flows ---------------------------------------------------------------

def lichnerowicz_matrix(h):
    if "lich_matrix" not in h._cache:
        m = len(h.grid.nodes) - 1
        h._cache["lich_matrix"] = assemble_diag_operator(
            _lichnerowicz_channels(h), h.grid)
    return h._cache["lich_matrix"]


def mixed_matrix(g, h):
    return assemble_diag_operator(_mixed_channels(g, h), h.grid)


def heat_evolve(h, k0, times, dt_policy=None):
    """Solve d/dt k + Delta_{L,h} k = 0; return tensors at the given times.

    Implicit Euler with geometrically growing steps; homogeneous Dirichlet at
    the outer boundary, regularity row at the bolt.
    """
    check_reference(h, k0)
    require_ricci_flat(h)
    times = sorted(float(t) for t in times)
    if times and times[0] < 0:
        raise DomainError("negative evolution time")
    policy = dt_policy or DtPolicy(dt0=2e-3, growth=1.2, dt_max_rel=0.05)
    stepper = ImplicitStepper(h.grid, lichnerowicz_matrix(h), theta=0.5)
    n1 = len(h.grid.nodes)
    x = stack(k0.comps)
    out = []
    t = 0.0
    dt = policy.dt0
    remaining = list(times)
    while remaining:
        if remaining[0] <= t + 1e-13:
            out.append(InvariantTensor(h, unstack(x.copy(), n1)))
            remaining.pop(0)
            continue
        dt_eff = min(dt, policy.dt_max, max(policy.dt_max_rel * t, policy.dt0),
                     remaining[0] - t)
        x = stepper.step(x, dt_eff)
        t += dt_eff
        dt *= policy.growth
    return out


def heat_semigroup(h, k0, t, dt_policy=None):
    """e^{-t Delta_{L,h}} k0 by unconditionally stable implicit stepping."""
    if t == 0:
        return InvariantTensor(h, k0.comps.copy())
    return heat_evolve(h, k0, [t], dt_policy)[-1]


def _as_path(obj):
    if isinstance(obj, CohomMetric):
        return lambda t: obj
    return obj


def mixed_evolution(schedule, g_path, h_path, h_inf, k_s, s, t, source=None):
    """Mixed solution operator P(g,h,h_inf)_{s->t} applied to k_s.

    Evolves by Delta_{L,h_inf} on [s, max(t-1, s)] and by Delta_{L,g,h} on
    [max(t-1, s), t].  With `source`, solves the inhomogeneous problem (the
    Duhamel operator Q).
    """
    if t < s:
        raise DomainError("t must be >= s")
    g_path = _as_path(g_path)
    h_path = _as_path(h_path)
    require_ricci_flat(h_inf)
    t_switch = EvolutionSchedule.switch_time(s, t)
    n1 = len(h_inf.grid.nodes)
    x = stack(k_s.comps)
    policy = schedule.dt_policy

    if t_switch > s:
        stepper = ImplicitStepper(h_inf.grid, lichnerowicz_matrix(h_inf))
        for t_new, dt in policy.steps(s, t_switch):
            src = stack(source(t_new).comps) if source is not None else None
            x = stepper.step(x, dt, source=src)

    if t > t_switch:
        for t_new, dt in policy.steps(t_switch, t):
            g_new = g_path(t_new)
            h_new = h_path(t_new)
            stepper = ImplicitStepper(h_new.grid, mixed_matrix(g_new, h_new))
            src = stack(source(t_new).comps) if source is not None else None
            x = stepper.step(x, dt, source=src)

    ref = h_path(t) if t > t_switch else h_inf
    return InvariantTensor(ref, unstack(x, n1))


def duhamel(schedule, g_path, h_path, h_inf, k_s, source, s, t):
    """Inhomogeneous mixed evolution Q_{s->t}(k_s, F) via implicit stepping.

    Equals P_{s->t}(k_s) + int_s^t P_{r->t}(F_r) dr up to step order.
    """
    return mixed_evolution(schedule, g_path, h_path, h_inf, k_s, s, t,
                           source=source)
